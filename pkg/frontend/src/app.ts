// Application wiring: WebSocket session, canvases, pointer handling,
// record/replay controls, CSV replay.

import { chartGeometry, DEFAULT_CHART, renderChart } from './chart.js';
import { parseEpisodeCsv } from './csv.js';
import { DEFAULT_VIEW, paint, renderScene, worldToScreen } from './renderer.js';
import { SceneViewModel } from './viewmodel.js';
import { COMMAND_PERIOD_MS, DragCommander } from './drag.js';
import { HelloMsg, parseServerMsg, StateMsg, validateCommand } from './wire.js';

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

export function startApp() {
  const sceneCanvas = el<HTMLCanvasElement>('scene');
  const chartCanvas = el<HTMLCanvasElement>('chart');
  const statusEl = el<HTMLDivElement>('status');
  const recordBtn = el<HTMLButtonElement>('record');
  const replayBtn = el<HTMLButtonElement>('replay');
  const variantSel = el<HTMLSelectElement>('variant');
  const displacementSel = el<HTMLSelectElement>('displacement');
  const csvInput = el<HTMLInputElement>('csvfile');
  const modeSel = el<HTMLSelectElement>('controlmode');

  const view = new SceneViewModel();
  const drag = new DragCommander();
  const vp = { ...DEFAULT_VIEW, width: sceneCanvas.width, height: sceneCanvas.height };
  const chartLayout = { ...DEFAULT_CHART, width: chartCanvas.width, height: chartCanvas.height };

  const wsUrl = `${location.protocol === 'https:' ? 'wss' : 'ws'}://${location.host}/ws`;
  const ws = new WebSocket(wsUrl);

  ws.onmessage = (ev: MessageEvent) => {
    const msg = parseServerMsg(String(ev.data));
    if (!msg) return;
    switch (msg.type) {
      case 'hello':
        view.onHello(msg as HelloMsg);
        statusEl.textContent = `connected (${(msg as HelloMsg).schema})`;
        break;
      case 'state':
        view.onState(msg as StateMsg, performance.now());
        break;
      case 'error':
        statusEl.textContent = `error: ${(msg as { message: string }).message}`;
        break;
      case 'ack':
        break;
      case 'replay_done': {
        const d = msg as unknown as { variant: string; avg_tau_norm: number; T_r: number };
        statusEl.textContent =
          `replay ${d.variant}: windowed τ-norm ${d.avg_tau_norm.toFixed(2)}`;
        view.markers.push({ t: d.T_r, label: 'T_r' });
        break;
      }
    }
  };
  ws.onclose = () => { statusEl.textContent = 'connection lost'; };
  ws.onerror = () => { statusEl.textContent = 'connection error'; };

  // pointer -> mirrored drag commands
  let dragging = false;
  const screenToWorld = (ev: PointerEvent): [number, number] => {
    const r = sceneCanvas.getBoundingClientRect();
    const px = ((ev.clientX - r.left) / r.width) * vp.width;
    const py = ((ev.clientY - r.top) / r.height) * vp.height;
    const y = vp.yMin + (px / vp.width) * (vp.yMax - vp.yMin);
    const z = vp.zMin + ((vp.height - py) / vp.height) * (vp.zMax - vp.zMin);
    return [y, z];
  };
  const sendDrag = (tMs: number, y: number, z: number) => {
    if (!view.hello) return;
    const cmd = drag.update(tMs, Math.abs(y), z);   // arm-0 side target
    if (!cmd) return;
    const quat = view.hello.home[0].quat;
    const wire = {
      type: 'command' as const,
      arm: (modeSel.value === 'mirrored' ? 'both-mirrored' : 0) as 'both-mirrored' | 0,
      p: cmd.p, quat, v: cmd.v,
    };
    if (validateCommand(wire) === null && ws.readyState === WebSocket.OPEN) {
      ws.send(JSON.stringify(wire));
    }
    view.ghost = { p: cmd.p };
    statusEl.textContent = cmd.clamped ? 'target clamped to workspace' : '';
  };
  sceneCanvas.addEventListener('pointerdown', (ev) => {
    dragging = true;
    sceneCanvas.setPointerCapture(ev.pointerId);
    const [y, z] = screenToWorld(ev);
    sendDrag(performance.now(), y, z);
  });
  sceneCanvas.addEventListener('pointermove', (ev) => {
    if (!dragging) return;
    const [y, z] = screenToWorld(ev);
    sendDrag(performance.now(), y, z);
  });
  sceneCanvas.addEventListener('pointerup', () => {
    dragging = false;
    const hold = drag.release();
    if (hold && view.hello && ws.readyState === WebSocket.OPEN) {
      ws.send(JSON.stringify({
        type: 'command', arm: modeSel.value === 'mirrored' ? 'both-mirrored' : 0,
        p: hold.p, quat: view.hello.home[0].quat, v: hold.v,
      }));
    }
  });

  recordBtn.addEventListener('click', () => {
    const action = view.recording ? 'stop' : 'start';
    ws.send(JSON.stringify({ type: 'record', action }));
    if (action === 'start') view.clearChart();
  });

  replayBtn.addEventListener('click', () => {
    view.clearChart();
    ws.send(JSON.stringify({
      type: 'replay',
      variant: variantSel.value,
      displacement: parseFloat(displacementSel.value),
    }));
  });

  csvInput.addEventListener('change', async () => {
    const file = csvInput.files?.[0];
    if (!file) return;
    const parsed = parseEpisodeCsv(await file.text());
    view.clearChart();
    for (const pt of parsed.points) view.pushChart(pt);
    statusEl.textContent = `loaded ${parsed.points.length} rows from ${file.name}`;
  });

  const sceneCtx = sceneCanvas.getContext('2d')!;
  const chartCtx = chartCanvas.getContext('2d')!;
  const frame = () => {
    const now = performance.now();
    paint(sceneCtx, renderScene(view, vp, now));
    paint(chartCtx, renderChart(view.chart, chartLayout, view.markers));
    recordBtn.textContent = view.recording ? 'stop recording' : 'start recording';
    requestAnimationFrame(frame);
  };
  requestAnimationFrame(frame);
}

declare global {
  interface Window { rsqpStart: () => void }
}
if (typeof window !== 'undefined') {
  window.rsqpStart = startApp;
}
