// Wire protocol types and validation for the teleoperation service
// (schema rsqp-wire/1). The client only ever sends command/record/replay;
// torques never cross this boundary.

export const WIRE_SCHEMA = 'rsqp-wire/1';

export interface ArmState {
  p: [number, number, number];
  quat: [number, number, number, number]; // (w, x, y, z)
  v: number[];
  contact: boolean;
}

export interface StateMsg {
  type: 'state';
  t: number;
  arms: ArmState[];
  box: { p: [number, number, number]; yaw: number };
  tau_norm: number;
  mode: number; // 0 recording, 1 ante, 2 interim, 3 post
  gamma: number;
  recording: boolean;
  replaying: boolean;
}

export interface HelloMsg {
  type: 'hello';
  schema: string;
  dt: number;
  arms: number;
  home: { p: number[]; quat: number[] }[];
  box: { half_extents: number[]; position: number[] };
  decimation: number;
}

export interface CommandMsg {
  type: 'command';
  arm: 'both-mirrored' | 0 | 1;
  p: number[];
  quat: number[];
  v: number[];
}

export type ServerMsg =
  | HelloMsg
  | StateMsg
  | { type: 'ack'; [k: string]: unknown }
  | { type: 'error'; code: string; message: string }
  | { type: 'replay_done'; [k: string]: unknown };

const MODE_NAMES = ['recording', 'ante', 'interim', 'post'];

export function modeName(mode: number): string {
  return MODE_NAMES[mode] ?? `mode-${mode}`;
}

function finiteArray(x: unknown, n: number): x is number[] {
  return Array.isArray(x) && x.length === n && x.every((v) => Number.isFinite(v));
}

export function parseServerMsg(raw: string): ServerMsg | null {
  let msg: unknown;
  try {
    msg = JSON.parse(raw);
  } catch {
    return null;
  }
  if (typeof msg !== 'object' || msg === null || !('type' in msg)) return null;
  const m = msg as Record<string, unknown>;
  if (m.type === 'state') {
    if (!Array.isArray(m.arms) || typeof m.t !== 'number') return null;
    for (const arm of m.arms as unknown[]) {
      const a = arm as Record<string, unknown>;
      if (!finiteArray(a.p, 3) || !finiteArray(a.quat, 4)) return null;
      const q = a.quat as number[];
      const norm = Math.hypot(q[0], q[1], q[2], q[3]);
      if (Math.abs(norm - 1) > 1e-6) return null;
    }
  }
  return msg as ServerMsg;
}

export function validateCommand(cmd: CommandMsg): string | null {
  if (!finiteArray(cmd.p, 3)) return 'target position must be 3 finite numbers';
  if (!finiteArray(cmd.quat, 4)) return 'quaternion must be 4 finite numbers';
  const n = Math.hypot(cmd.quat[0], cmd.quat[1], cmd.quat[2], cmd.quat[3]);
  if (Math.abs(n - 1) > 1e-6) return 'quaternion must be unit norm';
  if (!finiteArray(cmd.v, 6)) return 'twist must be 6 finite numbers';
  return null;
}
