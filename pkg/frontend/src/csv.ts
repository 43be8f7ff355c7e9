// Episode CSV loader: the harness exports per-tick rows
// (t, tau_norm, mode, gamma, ...); the chart replays them offline.

import { ChartPoint } from './viewmodel.js';

export interface EpisodeCsv {
  header: string[];
  points: ChartPoint[];
  columns: Record<string, number[]>;
}

export function parseEpisodeCsv(text: string): EpisodeCsv {
  const lines = text.trim().split(/\r?\n/);
  if (lines.length < 2) throw new Error('episode CSV has no data rows');
  const header = lines[0].split(',').map((h) => h.trim());
  const idx = (name: string) => {
    const i = header.indexOf(name);
    if (i < 0) throw new Error(`episode CSV missing column ${name}`);
    return i;
  };
  const it = idx('t');
  const itau = idx('tau_norm');
  const imode = idx('mode');
  const columns: Record<string, number[]> = {};
  for (const h of header) columns[h] = [];
  const points: ChartPoint[] = [];
  for (let k = 1; k < lines.length; k++) {
    const cells = lines[k].split(',');
    if (cells.length !== header.length) throw new Error(`row ${k} has ${cells.length} cells`);
    const vals = cells.map(Number);
    if (vals.some((v) => Number.isNaN(v))) throw new Error(`row ${k} has a non-numeric cell`);
    header.forEach((h, i) => columns[h].push(vals[i]));
    points.push({ t: vals[it], tauNorm: vals[itau], mode: vals[imode] });
  }
  return { header, points, columns };
}
