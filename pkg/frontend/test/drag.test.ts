import { describe, expect, it } from 'vitest';

import { COMMAND_PERIOD_MS, DEFAULT_WORKSPACE, DragCommander } from '../src/drag.js';

describe('DragCommander', () => {
  it('stationary pointer produces zero-velocity commands', () => {
    const d = new DragCommander();
    let last = null;
    for (let t = 0; t < 2000; t += 10) {
      const cmd = d.update(t, 0.3, 0.55);
      if (cmd) last = cmd;
    }
    expect(last).not.toBeNull();
    expect(Math.hypot(...last!.v)).toBeLessThan(1e-9);
  });

  it('rate limits to 20 Hz', () => {
    const d = new DragCommander();
    let count = 0;
    for (let t = 0; t <= 1000; t += 5) {
      if (d.update(t, 0.3, 0.55)) count++;
    }
    expect(count).toBeGreaterThanOrEqual(19);
    expect(count).toBeLessThanOrEqual(21);
    expect(COMMAND_PERIOD_MS).toBe(50);
  });

  it('constant-speed drag converges to the drag velocity', () => {
    const d = new DragCommander();
    const vy = -0.2; // m/s toward the box
    let lastV = 0;
    for (let t = 0; t <= 3000; t += 10) {
      const y = 0.42 + vy * (t / 1000);
      const cmd = d.update(t, Math.max(y, DEFAULT_WORKSPACE.yMin), 0.55);
      if (cmd) lastV = cmd.v[1];
      if (0.42 + vy * (t / 1000) < DEFAULT_WORKSPACE.yMin) break;
    }
    expect(lastV).toBeCloseTo(vy, 1); // within the 10 Hz filter tolerance
  });

  it('clamps beyond-workspace targets and flags them', () => {
    const d = new DragCommander();
    const cmd = d.update(0, 5.0, -2.0)!;
    expect(cmd.clamped).toBe(true);
    expect(cmd.p[1]).toBe(DEFAULT_WORKSPACE.yMax);
    expect(cmd.p[2]).toBe(DEFAULT_WORKSPACE.zMin);
  });

  it('release holds position with zero velocity', () => {
    const d = new DragCommander();
    d.update(0, 0.3, 0.5);
    d.update(100, 0.28, 0.5);
    const hold = d.release()!;
    expect(hold.p[1]).toBeCloseTo(0.28, 10);
    expect(Math.hypot(...hold.v)).toBe(0);
  });
});
