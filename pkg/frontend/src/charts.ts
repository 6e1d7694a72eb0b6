// Dependency-free SVG line charts. Chart models are pure data (one point
// per frame), so the dashboard's invariants are testable without a DOM.

import type { CompareResponse, MetricsFrame } from "./types";

export interface SeriesPoint {
  x: number;
  y: number;
}

export interface ChartModel {
  label: string;
  points: SeriesPoint[];
  zeroLine: boolean;
}

export function frameSeries(frames: MetricsFrame[], key: keyof MetricsFrame & string): ChartModel {
  return {
    label: key,
    points: frames.map((f) => ({ x: f.tick, y: Number(f[key]) })),
    zeroLine: false,
  };
}

export function compareSeries(payload: CompareResponse, key: string): ChartModel {
  const series = payload.differences[key] ?? [];
  return {
    label: `${key} (a - b)`,
    points: payload.ticks.map((tick, i) => ({ x: tick, y: series[i] ?? 0 })),
    zeroLine: true,
  };
}

export function chartSvg(model: ChartModel, width = 420, height = 160): string {
  const pad = 28;
  const points = model.points.filter((p) => Number.isFinite(p.y));
  if (points.length === 0) {
    return `<svg width="${width}" height="${height}" data-points="0"><text x="${pad}" y="${height / 2}" class="chart-empty">no data yet</text></svg>`;
  }
  const xs = points.map((p) => p.x);
  const ys = points.map((p) => p.y);
  const xMin = Math.min(...xs);
  const xMax = Math.max(...xs, xMin + 1);
  const yLo = Math.min(...ys, model.zeroLine ? 0 : Infinity);
  const yHi = Math.max(...ys, model.zeroLine ? 0 : -Infinity);
  const ySpan = yHi - yLo || 1;
  const sx = (x: number) => pad + ((x - xMin) / (xMax - xMin)) * (width - 2 * pad);
  const sy = (y: number) => height - pad - ((y - yLo) / ySpan) * (height - 2 * pad);
  const path = points
    .map((p, i) => `${i === 0 ? "M" : "L"}${sx(p.x).toFixed(1)},${sy(p.y).toFixed(1)}`)
    .join(" ");
  const zero =
    model.zeroLine && yLo <= 0 && yHi >= 0
      ? `<line class="zero-line" x1="${pad}" x2="${width - pad}" y1="${sy(0).toFixed(1)}" y2="${sy(0).toFixed(1)}" />`
      : "";
  const last = points[points.length - 1];
  return (
    `<svg width="${width}" height="${height}" viewBox="0 0 ${width} ${height}" data-points="${points.length}">` +
    `<text x="${pad}" y="16" class="chart-title">${model.label}</text>` +
    zero +
    `<path class="chart-line" d="${path}" fill="none" />` +
    `<text x="${width - pad}" y="${sy(last.y) - 6}" text-anchor="end" class="chart-value">${formatValue(last.y)}</text>` +
    `</svg>`
  );
}

export function formatValue(y: number): string {
  if (Number.isInteger(y)) return String(y);
  return Math.abs(y) >= 100 ? y.toFixed(0) : y.toFixed(3);
}
