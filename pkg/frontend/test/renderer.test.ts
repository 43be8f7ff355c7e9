import { describe, expect, it } from 'vitest';

import { DEFAULT_VIEW, renderScene, worldToScreen } from '../src/renderer.js';
import { SceneViewModel, STALE_AFTER_MS } from '../src/viewmodel.js';
import { HelloMsg, StateMsg } from '../src/wire.js';

const HELLO: HelloMsg = {
  type: 'hello', schema: 'rsqp-wire/1', dt: 0.001, arms: 2,
  home: [
    { p: [0, 0.3, 0.52], quat: [0.5, 0.5, 0.5, -0.5] },
    { p: [0, -0.3, 0.52], quat: [0.5, -0.5, -0.5, -0.5] },
  ],
  box: { half_extents: [0.09, 0.075, 0.12], position: [0, 0, 0.52] },
  decimation: 20,
};

function stateFixture(contact0 = false): StateMsg {
  return {
    type: 'state', t: 1.25,
    arms: [
      { p: [0, 0.2, 0.52], quat: [1, 0, 0, 0], v: [0, -0.4, 0, 0, 0, 0], contact: contact0 },
      { p: [0, -0.2, 0.52], quat: [1, 0, 0, 0], v: [0, 0.4, 0, 0, 0, 0], contact: false },
    ],
    box: { p: [0, 0.01, 0.52], yaw: 0.02 },
    tau_norm: 31.5, mode: 1, gamma: 0,
    recording: false, replaying: false,
  };
}

describe('renderScene', () => {
  it('renders a deterministic layout from a fixture message', () => {
    const view = new SceneViewModel();
    view.onHello(HELLO);
    view.onState(stateFixture(), 1000);
    const ops1 = renderScene(view, DEFAULT_VIEW, 1000);
    const ops2 = renderScene(view, DEFAULT_VIEW, 1000);
    expect(ops1).toEqual(ops2);
    expect(ops1[0]).toEqual({ op: 'clear', color: '#10141a' });
    const kinds = ops1.map((o) => o.op);
    expect(kinds).toContain('rect');    // box
    expect(kinds.filter((k) => k === 'line').length).toBeGreaterThanOrEqual(5);
    expect(kinds.filter((k) => k === 'circle').length).toBe(2); // two pads
    expect(ops1).toMatchSnapshot();
  });

  it('highlights a pad in contact', () => {
    const view = new SceneViewModel();
    view.onHello(HELLO);
    view.onState(stateFixture(true), 1000);
    const ops = renderScene(view, DEFAULT_VIEW, 1000);
    const pads = ops.filter((o) => o.op === 'circle');
    expect((pads[0] as { color: string }).color).toBe('#ff5b4d');
    expect((pads[1] as { color: string }).color).toBe('#5ab0f0');
  });

  it('shows a stale banner after half a second of silence', () => {
    const view = new SceneViewModel();
    view.onHello(HELLO);
    view.onState(stateFixture(), 1000);
    const opsFresh = renderScene(view, DEFAULT_VIEW, 1000 + STALE_AFTER_MS - 1);
    const opsStale = renderScene(view, DEFAULT_VIEW, 1000 + STALE_AFTER_MS + 1);
    const text = (ops: typeof opsFresh) =>
      ops.filter((o) => o.op === 'text').map((o) => (o as { text: string }).text).join(' ');
    expect(text(opsFresh)).not.toContain('STALE');
    expect(text(opsStale)).toContain('STALE');
  });

  it('draws ghost markers for the commanded target (mirrored)', () => {
    const view = new SceneViewModel();
    view.onHello(HELLO);
    view.onState(stateFixture(), 1000);
    view.ghost = { p: [0, 0.22, 0.55] };
    const ops = renderScene(view, DEFAULT_VIEW, 1000);
    const ghosts = ops.filter((o) => o.op === 'circle' && !(o as { fill: boolean }).fill);
    expect(ghosts.length).toBe(2);
    const [g1, g2] = ghosts as { x: number }[];
    const [x1] = worldToScreen(DEFAULT_VIEW, 0.22, 0.55);
    const [x2] = worldToScreen(DEFAULT_VIEW, -0.22, 0.55);
    expect(g1.x).toBeCloseTo(x1, 5);
    expect(g2.x).toBeCloseTo(x2, 5);
  });
});
