/**
 * Leaderboard charts as self-contained SVG strings: one stepped line per
 * player, labeled by initials. String output keeps rendering pure and
 * testable without a browser.
 */

import { LeaderboardPayload, LeaderboardSeries } from "./types.js";

const PALETTE = [
  "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
  "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];

export interface ChartOptions {
  width?: number;
  height?: number;
  xLabel?: string;
  yLabel?: string;
}

function extent(series: LeaderboardSeries[]): [number, number, number, number] {
  let xMin = Infinity, xMax = -Infinity, yMin = Infinity, yMax = -Infinity;
  for (const s of series) {
    for (const [x, y] of s.points) {
      xMin = Math.min(xMin, x);
      xMax = Math.max(xMax, x);
      yMin = Math.min(yMin, y);
      yMax = Math.max(yMax, y);
    }
  }
  if (xMin === xMax) xMax = xMin + 1;
  if (yMin === yMax) yMax = yMin + 1;
  return [xMin, xMax, yMin, yMax];
}

function esc(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

/** Step-after path through a player's (x, best-so-far) points. */
export function stepPath(
  points: [number, number][],
  sx: (x: number) => number,
  sy: (y: number) => number,
): string {
  if (points.length === 0) return "";
  const [x0, y0] = points[0];
  let d = `M ${sx(x0).toFixed(1)} ${sy(y0).toFixed(1)}`;
  for (let i = 1; i < points.length; i++) {
    const [x, y] = points[i];
    d += ` H ${sx(x).toFixed(1)} V ${sy(y).toFixed(1)}`;
  }
  return d;
}

export function renderChartSvg(
  payload: LeaderboardPayload,
  options: ChartOptions = {},
): string {
  const width = options.width ?? 560;
  const height = options.height ?? 320;
  const margin = { top: 18, right: 88, bottom: 34, left: 52 };
  const live = payload.series.filter((s) => s.points.length > 0);
  if (live.length === 0) {
    return (
      `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}">` +
      `<text x="${width / 2}" y="${height / 2}" text-anchor="middle" ` +
      `class="placeholder">No runs yet</text></svg>`
    );
  }
  const [xMin, xMax, yMin, yMax] = extent(live);
  const plotW = width - margin.left - margin.right;
  const plotH = height - margin.top - margin.bottom;
  const sx = (x: number) => margin.left + ((x - xMin) / (xMax - xMin)) * plotW;
  const sy = (y: number) => margin.top + (1 - (y - yMin) / (yMax - yMin)) * plotH;

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
    `viewBox="0 0 ${width} ${height}" role="img">`,
  );
  parts.push(
    `<rect x="${margin.left}" y="${margin.top}" width="${plotW}" height="${plotH}" ` +
    `fill="none" stroke="#ccc"/>`,
  );
  for (const [frac, anchor] of [[0, "start"], [0.5, "middle"], [1, "end"]] as const) {
    const xv = xMin + frac * (xMax - xMin);
    const yv = yMin + frac * (yMax - yMin);
    parts.push(
      `<text x="${sx(xv).toFixed(1)}" y="${height - 12}" font-size="10" ` +
      `text-anchor="${anchor}">${Number(xv.toFixed(2))}</text>`,
    );
    parts.push(
      `<text x="${margin.left - 6}" y="${(sy(yv) + 3).toFixed(1)}" font-size="10" ` +
      `text-anchor="end">${Number(yv.toFixed(3))}</text>`,
    );
  }
  live.forEach((s, i) => {
    const color = PALETTE[i % PALETTE.length];
    parts.push(
      `<path d="${stepPath(s.points, sx, sy)}" fill="none" stroke="${color}" ` +
      `stroke-width="1.6" data-label="${esc(s.label)}"/>`,
    );
    const [lx, ly] = s.points[s.points.length - 1];
    parts.push(
      `<text x="${(sx(lx) + 6).toFixed(1)}" y="${(sy(ly) + 3).toFixed(1)}" ` +
      `font-size="11" fill="${color}">${esc(s.label)}</text>`,
    );
  });
  if (options.xLabel) {
    parts.push(
      `<text x="${margin.left + plotW / 2}" y="${height - 2}" font-size="11" ` +
      `text-anchor="middle">${esc(options.xLabel)}</text>`,
    );
  }
  parts.push("</svg>");
  return parts.join("");
}
