// Side-view (y-z plane) scene renderer. Produces a flat list of draw
// operations so tests can snapshot the output without a canvas; the
// painter that applies ops to a 2D context is deliberately dumb.

import { SceneViewModel } from './viewmodel.js';

export type DrawOp =
  | { op: 'clear'; color: string }
  | { op: 'line'; x1: number; y1: number; x2: number; y2: number; color: string; width: number }
  | { op: 'circle'; x: number; y: number; r: number; color: string; fill: boolean }
  | { op: 'rect'; x: number; y: number; w: number; h: number; color: string; fill: boolean; angle?: number }
  | { op: 'text'; x: number; y: number; text: string; color: string };

export interface Viewport {
  width: number;
  height: number;
  // world window in the y-z plane
  yMin: number;
  yMax: number;
  zMin: number;
  zMax: number;
}

export const DEFAULT_VIEW: Viewport = {
  width: 760, height: 420, yMin: -0.65, yMax: 0.65, zMin: -0.02, zMax: 0.95,
};

export function worldToScreen(vp: Viewport, y: number, z: number): [number, number] {
  const sx = ((y - vp.yMin) / (vp.yMax - vp.yMin)) * vp.width;
  const sy = vp.height - ((z - vp.zMin) / (vp.zMax - vp.zMin)) * vp.height;
  return [Math.round(sx * 10) / 10, Math.round(sy * 10) / 10];
}

const COLORS = {
  background: '#10141a',
  plane: '#3d4754',
  box: '#c9a227',
  arm: '#7f8ea3',
  pad: '#5ab0f0',
  padContact: '#ff5b4d',
  ghost: '#46d37e',
  text: '#d7dde6',
  stale: '#ff5b4d',
};

export function renderScene(view: SceneViewModel, vp: Viewport, nowMs: number): DrawOp[] {
  const ops: DrawOp[] = [{ op: 'clear', color: COLORS.background }];
  const hello = view.hello;
  const state = view.state;
  if (!hello || !state) {
    ops.push({ op: 'text', x: 20, y: 24, text: 'waiting for state…', color: COLORS.text });
    return ops;
  }

  const planeZ = hello.box.position[2] - hello.box.half_extents[2];
  {
    const [x1, y1] = worldToScreen(vp, vp.yMin, planeZ);
    const [x2, y2] = worldToScreen(vp, vp.yMax, planeZ);
    ops.push({ op: 'line', x1, y1, x2, y2, color: COLORS.plane, width: 2 });
  }

  // box cross-section (y-z): width 2*hy, height 2*hz
  {
    const hy = hello.box.half_extents[1];
    const hz = hello.box.half_extents[2];
    const [cx, cy] = worldToScreen(vp, state.box.p[1], state.box.p[2]);
    const w = (2 * hy / (vp.yMax - vp.yMin)) * vp.width;
    const h = (2 * hz / (vp.zMax - vp.zMin)) * vp.height;
    ops.push({ op: 'rect', x: cx - w / 2, y: cy - h / 2, w, h, color: COLORS.box, fill: true });
  }

  // arms: schematic two-segment linkage from a fixed shoulder to the pad
  state.arms.forEach((arm, i) => {
    const sign = i === 0 ? 1 : -1;
    const shoulderY = sign * 0.85;
    const shoulderZ = 0.333;
    const [sx, sy] = worldToScreen(vp, shoulderY, shoulderZ);
    const [ex, ey] = worldToScreen(vp, arm.p[1], arm.p[2]);
    // visual elbow: midpoint lifted away from the line, schematic only
    const my = (shoulderY + arm.p[1]) / 2;
    const mz = Math.max(shoulderZ, arm.p[2]) + 0.16;
    const [mx, myPx] = worldToScreen(vp, my, mz);
    ops.push({ op: 'line', x1: sx, y1: sy, x2: mx, y2: myPx, color: COLORS.arm, width: 5 });
    ops.push({ op: 'line', x1: mx, y1: myPx, x2: ex, y2: ey, color: COLORS.arm, width: 5 });
    ops.push({
      op: 'circle', x: ex, y: ey, r: 9,
      color: arm.contact ? COLORS.padContact : COLORS.pad, fill: true,
    });
  });

  if (view.ghost) {
    const [gx, gy] = worldToScreen(vp, view.ghost.p[1], view.ghost.p[2]);
    ops.push({ op: 'circle', x: gx, y: gy, r: 6, color: COLORS.ghost, fill: false });
    const mirrored = view.controlMode === 'mirrored';
    if (mirrored) {
      const [gx2, gy2] = worldToScreen(vp, -view.ghost.p[1], view.ghost.p[2]);
      ops.push({ op: 'circle', x: gx2, y: gy2, r: 6, color: COLORS.ghost, fill: false });
    }
  }

  const status = view.stale(nowMs)
    ? 'CONNECTION STALE'
    : `t=${state.t.toFixed(2)}s  mode=${state.mode}  γ=${state.gamma.toFixed(2)}` +
      (state.recording ? '  ● REC' : '') + (state.replaying ? '  ▶ replay' : '');
  ops.push({
    op: 'text', x: 14, y: 20, text: status,
    color: view.stale(nowMs) ? COLORS.stale : COLORS.text,
  });
  return ops;
}

export function paint(ctx: CanvasRenderingContext2D, ops: DrawOp[]) {
  for (const o of ops) {
    switch (o.op) {
      case 'clear':
        ctx.fillStyle = o.color;
        ctx.fillRect(0, 0, ctx.canvas.width, ctx.canvas.height);
        break;
      case 'line':
        ctx.strokeStyle = o.color;
        ctx.lineWidth = o.width;
        ctx.beginPath();
        ctx.moveTo(o.x1, o.y1);
        ctx.lineTo(o.x2, o.y2);
        ctx.stroke();
        break;
      case 'circle':
        ctx.beginPath();
        ctx.arc(o.x, o.y, o.r, 0, 2 * Math.PI);
        if (o.fill) {
          ctx.fillStyle = o.color;
          ctx.fill();
        } else {
          ctx.strokeStyle = o.color;
          ctx.lineWidth = 2;
          ctx.stroke();
        }
        break;
      case 'rect':
        ctx.fillStyle = o.color;
        ctx.strokeStyle = o.color;
        if (o.fill) ctx.fillRect(o.x, o.y, o.w, o.h);
        else ctx.strokeRect(o.x, o.y, o.w, o.h);
        break;
      case 'text':
        ctx.fillStyle = o.color;
        ctx.font = '13px monospace';
        ctx.fillText(o.text, o.x, o.y);
        break;
    }
  }
}
