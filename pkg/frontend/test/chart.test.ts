import { readFileSync } from 'node:fs';
import { join } from 'node:path';

import { describe, expect, it } from 'vitest';

import { chartGeometry, DEFAULT_CHART, maxStep, renderChart } from '../src/chart.js';
import { parseEpisodeCsv } from '../src/csv.js';
import { ChartPoint } from '../src/viewmodel.js';

const FIXTURES = join(__dirname, 'fixtures');

function loadFixture(name: string) {
  return parseEpisodeCsv(readFileSync(join(FIXTURES, name), 'utf-8'));
}

const T_R = parseFloat(readFileSync(join(FIXTURES, 'T_r.txt'), 'utf-8'));

describe('strip chart', () => {
  it('flat zero series renders a flat line', () => {
    const pts: ChartPoint[] = Array.from({ length: 100 }, (_, k) => ({
      t: k * 0.02, tauNorm: 0, mode: 1,
    }));
    const geo = chartGeometry(pts, DEFAULT_CHART);
    const ys = new Set(geo.polyline.map(([, y]) => y));
    expect(ys.size).toBe(1);
  });

  it('a single step lands at the right timestamp', () => {
    const pts: ChartPoint[] = Array.from({ length: 200 }, (_, k) => ({
      t: k * 0.01, tauNorm: k >= 100 ? 10 : 1, mode: 1,
    }));
    const geo = chartGeometry(pts, DEFAULT_CHART);
    // largest pixel-space jump occurs at the sample crossing t = 1.0
    let worstX = 0;
    let worstJump = 0;
    for (let i = 1; i < geo.polyline.length; i++) {
      const jump = Math.abs(geo.polyline[i][1] - geo.polyline[i - 1][1]);
      if (jump > worstJump) {
        worstJump = jump;
        worstX = geo.polyline[i][0];
      }
    }
    const expectedX = ((1.0 - geo.tMin) / (geo.tMax - geo.tMin)) * DEFAULT_CHART.width;
    expect(worstX).toBeCloseTo(expectedX, 0);
  });

  it('mode bands follow the mode sequence', () => {
    const pts: ChartPoint[] = [
      ...Array.from({ length: 50 }, (_, k) => ({ t: k * 0.01, tauNorm: 1, mode: 1 })),
      ...Array.from({ length: 50 }, (_, k) => ({ t: 0.5 + k * 0.01, tauNorm: 1, mode: 2 })),
      ...Array.from({ length: 50 }, (_, k) => ({ t: 1.0 + k * 0.01, tauNorm: 1, mode: 3 })),
    ];
    const geo = chartGeometry(pts, DEFAULT_CHART);
    expect(geo.bands.map((b) => b.mode)).toEqual([1, 2, 3]);
  });

  it('no-RS replay shows the torque step, proposed does not (harness CSV)', () => {
    const noRs = loadFixture('episode_no_rs_-30mm.csv');
    const proposed = loadFixture('episode_proposed_-30mm.csv');
    const w0 = T_R - 0.06;
    const w1 = T_R + 0.06;
    const stepNoRs = maxStep(noRs.points, w0, w1);
    const stepProposed = maxStep(proposed.points, w0, w1);
    expect(stepNoRs).toBeGreaterThan(3 * stepProposed);
    // and the step sits at the nominal impact time
    let tAtWorst = 0;
    let worst = 0;
    for (let i = 1; i < noRs.points.length; i++) {
      const j = Math.abs(noRs.points[i].tauNorm - noRs.points[i - 1].tauNorm);
      if (j > worst && noRs.points[i].t >= w0 && noRs.points[i].t <= w1) {
        worst = j;
        tAtWorst = noRs.points[i].t;
      }
    }
    expect(Math.abs(tAtWorst - T_R)).toBeLessThan(5e-3);
  });

  it('render ops are deterministic for the same data', () => {
    const fix = loadFixture('episode_proposed_-30mm.csv');
    const a = renderChart(fix.points.slice(0, 500), DEFAULT_CHART);
    const b = renderChart(fix.points.slice(0, 500), DEFAULT_CHART);
    expect(a).toEqual(b);
  });
});
