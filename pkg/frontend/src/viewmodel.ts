// Scene view model: the latest validated state plus derived status.
// Everything the renderer draws comes from here or from loaded files;
// the client runs no simulation of its own.

import { HelloMsg, StateMsg } from './wire.js';

export const STALE_AFTER_MS = 500;

export interface ChartPoint {
  t: number;
  tauNorm: number;
  mode: number;
}

export class SceneViewModel {
  hello: HelloMsg | null = null;
  state: StateMsg | null = null;
  lastStateWall = 0;
  controlMode: 'mirrored' | 'single' = 'mirrored';
  recording = false;
  replaying = false;
  ghost: { p: number[] } | null = null; // commanded target marker
  chart: ChartPoint[] = [];
  chartCapacity = 4000;
  markers: { t: number; label: string }[] = [];

  onHello(msg: HelloMsg) {
    this.hello = msg;
  }

  onState(msg: StateMsg, wallMs: number) {
    this.state = msg;
    this.lastStateWall = wallMs;
    this.recording = msg.recording;
    this.replaying = msg.replaying;
    this.pushChart({ t: msg.t, tauNorm: msg.tau_norm, mode: msg.mode });
  }

  pushChart(pt: ChartPoint) {
    const last = this.chart[this.chart.length - 1];
    if (last && pt.t < last.t) this.chart = []; // new episode restarted the clock
    this.chart.push(pt);
    if (this.chart.length > this.chartCapacity) {
      this.chart.splice(0, this.chart.length - this.chartCapacity);
    }
  }

  stale(nowMs: number): boolean {
    return this.state !== null && nowMs - this.lastStateWall > STALE_AFTER_MS;
  }

  clearChart() {
    this.chart = [];
    this.markers = [];
  }
}
