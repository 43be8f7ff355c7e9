// Torque-norm strip chart with control-mode shading and event markers;
// the live analogue of the harness torque plots. Pure geometry in,
// draw ops out, so tests can check it against harness CSV data.

import { DrawOp } from './renderer.js';
import { ChartPoint } from './viewmodel.js';

export interface ChartLayout {
  width: number;
  height: number;
  windowSec: number; // visible horizon, scrolls with the stream
}

export const DEFAULT_CHART: ChartLayout = { width: 760, height: 170, windowSec: 4.0 };

export const MODE_SHADES: Record<number, string> = {
  0: '#1c2430',
  1: '#17242e',   // ante
  2: '#2e2a18',   // interim
  3: '#1c2e1c',   // post
};

export interface ChartGeometry {
  tMin: number;
  tMax: number;
  vMax: number;
  polyline: [number, number][];
  bands: { x0: number; x1: number; mode: number }[];
  markerXs: { x: number; label: string }[];
}

export function chartGeometry(points: ChartPoint[], layout: ChartLayout,
                              markers: { t: number; label: string }[] = []): ChartGeometry {
  if (points.length === 0) {
    return { tMin: 0, tMax: layout.windowSec, vMax: 1, polyline: [], bands: [], markerXs: [] };
  }
  const tMax = points[points.length - 1].t;
  const tMin = Math.max(points[0].t, tMax - layout.windowSec);
  const visible = points.filter((p) => p.t >= tMin);
  const vMax = Math.max(1e-6, ...visible.map((p) => p.tauNorm)) * 1.15;
  const X = (t: number) => ((t - tMin) / Math.max(tMax - tMin, 1e-9)) * layout.width;
  const Y = (v: number) => layout.height - (v / vMax) * (layout.height - 18) - 2;

  const polyline: [number, number][] = visible.map((p) => [X(p.t), Y(p.tauNorm)]);

  const bands: { x0: number; x1: number; mode: number }[] = [];
  let start = 0;
  for (let i = 1; i <= visible.length; i++) {
    if (i === visible.length || visible[i].mode !== visible[start].mode) {
      bands.push({ x0: X(visible[start].t), x1: X(visible[Math.min(i, visible.length - 1)].t),
                   mode: visible[start].mode });
      start = i;
    }
  }
  const markerXs = markers
    .filter((m) => m.t >= tMin && m.t <= tMax)
    .map((m) => ({ x: X(m.t), label: m.label }));
  return { tMin, tMax, vMax, polyline, bands, markerXs };
}

export function renderChart(points: ChartPoint[], layout: ChartLayout,
                            markers: { t: number; label: string }[] = []): DrawOp[] {
  const geo = chartGeometry(points, layout, markers);
  const ops: DrawOp[] = [{ op: 'clear', color: '#0c0f14' }];
  for (const band of geo.bands) {
    ops.push({ op: 'rect', x: band.x0, y: 0, w: Math.max(band.x1 - band.x0, 1),
               h: layout.height, color: MODE_SHADES[band.mode] ?? '#1c2430', fill: true });
  }
  for (let i = 1; i < geo.polyline.length; i++) {
    const [x1, y1] = geo.polyline[i - 1];
    const [x2, y2] = geo.polyline[i];
    ops.push({ op: 'line', x1, y1, x2, y2, color: '#e8b84b', width: 1.5 });
  }
  for (const m of geo.markerXs) {
    ops.push({ op: 'line', x1: m.x, y1: 0, x2: m.x, y2: layout.height,
               color: '#d7dde6', width: 1 });
    ops.push({ op: 'text', x: m.x + 3, y: 12, text: m.label, color: '#d7dde6' });
  }
  ops.push({ op: 'text', x: 6, y: 12, text: `τ-norm max ${geo.vMax.toFixed(1)}`,
             color: '#8fa0b3' });
  return ops;
}

/** Largest single-sample jump inside [t0, t1]; how the tests quantify the
 * visible step the baselines show and the proposed mode avoids. */
export function maxStep(points: ChartPoint[], t0 = -Infinity, t1 = Infinity): number {
  let worst = 0;
  for (let i = 1; i < points.length; i++) {
    if (points[i].t < t0 || points[i].t > t1) continue;
    worst = Math.max(worst, Math.abs(points[i].tauNorm - points[i - 1].tauNorm));
  }
  return worst;
}
