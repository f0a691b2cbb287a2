// Minimal SVG progress chart: completion% per step, zero line marked.

import { completionPercent } from "./progress.js";

export function renderProgressChart(distances: number[], width = 360, height = 140): string {
  const pad = 24;
  const values = distances.length > 0 ? completionPercent(distances) : [];
  const lo = Math.min(0, ...values, -10);
  const hi = Math.max(100, ...values);
  const n = Math.max(values.length - 1, 1);
  const x = (i: number) => pad + (i / n) * (width - 2 * pad);
  const y = (v: number) => height - pad - ((v - lo) / (hi - lo)) * (height - 2 * pad);

  const points = values.map((v, i) => `${x(i).toFixed(1)},${y(v).toFixed(1)}`).join(" ");
  const zero = y(0);
  const hundred = y(100);
  return [
    `<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${width} ${height}" ` +
    `width="${width}" height="${height}" data-role="progress-chart" ` +
    `data-values="${values.map((v) => v.toFixed(4)).join(",")}">`,
    `<rect x="0" y="0" width="${width}" height="${height}" fill="#10212e"/>`,
    `<line x1="${pad}" y1="${zero.toFixed(1)}" x2="${width - pad}" y2="${zero.toFixed(1)}" stroke="#44617a" stroke-dasharray="4 3"/>`,
    `<line x1="${pad}" y1="${hundred.toFixed(1)}" x2="${width - pad}" y2="${hundred.toFixed(1)}" stroke="#2e7d32" stroke-dasharray="2 4"/>`,
    values.length > 0
      ? `<polyline fill="none" stroke="#7fd1b9" stroke-width="2" points="${points}"/>`
      : `<text x="${width / 2}" y="${height / 2}" fill="#8aa" text-anchor="middle">no steps yet</text>`,
    `<text x="${pad}" y="${hundred - 4}" fill="#6aa84f" font-size="10">100%</text>`,
    `<text x="${pad}" y="${zero - 4}" fill="#88a" font-size="10">0%</text>`,
    `</svg>`,
  ].join("");
}
