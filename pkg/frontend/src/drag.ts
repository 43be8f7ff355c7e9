// Pointer dragging -> rate-limited command stream with a filtered
// finite-difference velocity, the browser stand-in for tracked handheld
// devices. Targets are clamped to the reachable workspace box.

export interface DragCommand {
  p: [number, number, number];
  v: [number, number, number, number, number, number];
  clamped: boolean;
}

export interface Workspace {
  yMin: number;
  yMax: number;
  zMin: number;
  zMax: number;
}

export const DEFAULT_WORKSPACE: Workspace = {
  yMin: 0.09, yMax: 0.45, zMin: 0.42, zMax: 0.75,
};

export const COMMAND_PERIOD_MS = 50;   // 20 Hz
const FILTER_HZ = 10;

export class DragCommander {
  private lastEmit = -Infinity;
  private lastP: [number, number, number] | null = null;
  private lastT = 0;
  private vFilt: [number, number, number] = [0, 0, 0];

  constructor(public workspace: Workspace = DEFAULT_WORKSPACE) {}

  /** Feed a pointer sample (world y-z target); returns a command when the
   * 20 Hz rate limiter admits one, null otherwise. */
  update(tMs: number, y: number, z: number): DragCommand | null {
    const clampedY = Math.min(Math.max(y, this.workspace.yMin), this.workspace.yMax);
    const clampedZ = Math.min(Math.max(z, this.workspace.zMin), this.workspace.zMax);
    const clamped = clampedY !== y || clampedZ !== z;
    const p: [number, number, number] = [0, clampedY, clampedZ];

    if (tMs - this.lastEmit < COMMAND_PERIOD_MS) return null;

    if (this.lastP !== null) {
      const dt = Math.max((tMs - this.lastT) / 1000, 1e-3);
      // one-pole low pass at FILTER_HZ on the finite difference
      const alpha = Math.min(1, 2 * Math.PI * FILTER_HZ * dt / (1 + 2 * Math.PI * FILTER_HZ * dt));
      for (let k = 0; k < 3; k++) {
        const raw = (p[k] - this.lastP[k]) / dt;
        this.vFilt[k] += alpha * (raw - this.vFilt[k]);
      }
    }
    this.lastP = p;
    this.lastT = tMs;
    this.lastEmit = tMs;
    return {
      p,
      v: [this.vFilt[0], this.vFilt[1], this.vFilt[2], 0, 0, 0],
      clamped,
    };
  }

  /** Pointer released: hold position, zero velocity. */
  release(): DragCommand | null {
    if (this.lastP === null) return null;
    this.vFilt = [0, 0, 0];
    return { p: this.lastP, v: [0, 0, 0, 0, 0, 0], clamped: false };
  }

  reset() {
    this.lastP = null;
    this.vFilt = [0, 0, 0];
    this.lastEmit = -Infinity;
  }
}
