/** Minimal deterministic SVG line-chart renderer (no DOM, no dependencies). */

import type { FigureModel, Series } from "./model.js";

export const WIDTH = 640;
export const HEIGHT = 420;
export const MARGIN = { top: 42, right: 24, bottom: 50, left: 66 } as const;

export const PALETTE = [
  "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
  "#17becf", "#7f7f7f",
] as const;

export interface Scale {
  (v: number): number;
  domain: [number, number];
  range: [number, number];
  log: boolean;
}

/** Linear or log10 mapping from data domain to pixel range. */
export function makeScale(
  domain: [number, number],
  range: [number, number],
  log = false,
): Scale {
  const [d0, d1] = log ? [Math.log10(domain[0]), Math.log10(domain[1])] : domain;
  const span = d1 - d0 || 1;
  const f = ((v: number) => {
    const t = log ? Math.log10(v) : v;
    return range[0] + ((t - d0) / span) * (range[1] - range[0]);
  }) as Scale;
  f.domain = domain;
  f.range = range;
  f.log = log;
  return f;
}

/** Tick positions at 1/2/5 x 10^k steps covering [lo, hi] (d3-style). */
export function linearTicks(lo: number, hi: number, count = 6): number[] {
  if (!(hi > lo)) return [lo];
  const step0 = (hi - lo) / count;
  const mag = 10 ** Math.floor(Math.log10(step0));
  const norm = step0 / mag;
  const step = (norm >= 5 ? 10 : norm >= 2 ? 5 : norm >= 1 ? 2 : 1) * mag;
  const start = Math.ceil(lo / step) * step;
  const out: number[] = [];
  for (let v = start; v <= hi + step * 1e-9; v += step) {
    out.push(Math.abs(v) < step * 1e-9 ? 0 : v);
  }
  return out;
}

/** Decade plus 2x/5x mantissa ticks inside [lo, hi] (for log axes). */
export function logTicks(lo: number, hi: number): number[] {
  const out: number[] = [];
  const kLo = Math.floor(Math.log10(lo));
  const kHi = Math.ceil(Math.log10(hi));
  for (let k = kLo; k <= kHi; k++) {
    for (const m of [1, 2, 5]) {
      const v = m * 10 ** k;
      if (v >= lo * (1 - 1e-12) && v <= hi * (1 + 1e-12)) out.push(v);
    }
  }
  return out;
}

export function fmtTick(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 1e4 || a < 1e-3) return v.toExponential(0);
  const s = v.toPrecision(4);
  return s.includes(".") ? s.replace(/\.?0+$/, "") : s;
}

const esc = (s: string) =>
  s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");

const px = (v: number) => v.toFixed(2);

function dataBounds(series: Series[], errorBars: boolean) {
  let xMin = Infinity, xMax = -Infinity, yMax = -Infinity;
  for (const s of series) {
    for (const p of s.points) {
      xMin = Math.min(xMin, p.x);
      xMax = Math.max(xMax, p.x);
      const lift = errorBars && p.spread !== undefined ? p.spread : 0;
      yMax = Math.max(yMax, p.y + lift);
    }
  }
  if (!Number.isFinite(xMin)) { xMin = 0; xMax = 1; }
  if (!Number.isFinite(yMax) || yMax <= 0) yMax = 1;
  return { xMin, xMax, yMax };
}

/** Pixel scales used by renderFigure; exported so tests share the mapping. */
export function figureScales(model: FigureModel): { sx: Scale; sy: Scale } {
  const { xMin, xMax, yMax } = dataBounds(model.series, model.errorBars);
  const plotX: [number, number] = [MARGIN.left, WIDTH - MARGIN.right];
  const plotY: [number, number] = [HEIGHT - MARGIN.bottom, MARGIN.top];
  let xDomain: [number, number];
  if (model.logX) {
    xDomain = [xMin / 1.15, xMax * 1.15];
  } else {
    const pad = (xMax - xMin || 1) * 0.04;
    xDomain = [xMin - pad, xMax + pad];
  }
  return {
    sx: makeScale(xDomain, plotX, model.logX),
    sy: makeScale([0, yMax * 1.06], plotY),
  };
}

export function renderFigure(model: FigureModel): string {
  const { sx, sy } = figureScales(model);
  const left = MARGIN.left, right = WIDTH - MARGIN.right;
  const top = MARGIN.top, bottom = HEIGHT - MARGIN.bottom;
  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${WIDTH} ${HEIGHT}" ` +
    `width="${WIDTH}" height="${HEIGHT}" font-family="sans-serif">`,
    `<rect width="${WIDTH}" height="${HEIGHT}" fill="white"/>`,
    `<text x="${WIDTH / 2}" y="24" text-anchor="middle" font-size="15">${esc(model.title)}</text>`,
  );

  const xTicks = model.logX
    ? logTicks(sx.domain[0], sx.domain[1])
    : linearTicks(sx.domain[0], sx.domain[1]);
  const yTicks = linearTicks(sy.domain[0], sy.domain[1]);

  for (const t of yTicks) {
    const y = px(sy(t));
    parts.push(
      `<line x1="${left}" y1="${y}" x2="${right}" y2="${y}" stroke="#e0e0e0"/>`,
      `<text x="${left - 8}" y="${y}" dy="4" text-anchor="end" font-size="11">${esc(fmtTick(t))}</text>`,
    );
  }
  for (const t of xTicks) {
    const x = px(sx(t));
    parts.push(
      `<line x1="${x}" y1="${bottom}" x2="${x}" y2="${bottom + 5}" stroke="#333"/>`,
      `<text x="${x}" y="${bottom + 18}" text-anchor="middle" font-size="11">${esc(fmtTick(t))}</text>`,
    );
  }
  parts.push(
    `<line x1="${left}" y1="${bottom}" x2="${right}" y2="${bottom}" stroke="#333"/>`,
    `<line x1="${left}" y1="${top}" x2="${left}" y2="${bottom}" stroke="#333"/>`,
    `<text x="${(left + right) / 2}" y="${HEIGHT - 12}" text-anchor="middle" font-size="13">${esc(model.xLabel)}</text>`,
    `<text transform="rotate(-90 16 ${(top + bottom) / 2})" x="16" y="${(top + bottom) / 2}" ` +
    `text-anchor="middle" font-size="13">${esc(model.yLabel)}</text>`,
  );

  model.series.forEach((s, i) => {
    const color = PALETTE[i % PALETTE.length]!;
    if (model.errorBars) {
      for (const p of s.points) {
        if (p.spread === undefined || p.spread <= 0) continue;
        const x = px(sx(p.x));
        const yLo = px(sy(Math.max(0, p.y - p.spread)));
        const yHi = px(sy(p.y + p.spread));
        parts.push(
          `<line x1="${x}" y1="${yLo}" x2="${x}" y2="${yHi}" stroke="${color}" stroke-width="1"/>`,
          `<line x1="${px(sx(p.x) - 4)}" y1="${yLo}" x2="${px(sx(p.x) + 4)}" y2="${yLo}" stroke="${color}"/>`,
          `<line x1="${px(sx(p.x) - 4)}" y1="${yHi}" x2="${px(sx(p.x) + 4)}" y2="${yHi}" stroke="${color}"/>`,
        );
      }
    }
    const coords = s.points.map((p) => `${px(sx(p.x))},${px(sy(p.y))}`).join(" ");
    parts.push(`<polyline points="${coords}" fill="none" stroke="${color}" stroke-width="1.6"/>`);
    if (model.markers) {
      for (const p of s.points) {
        parts.push(`<circle cx="${px(sx(p.x))}" cy="${px(sy(p.y))}" r="3" fill="${color}"/>`);
      }
    }
  });

  const legendX = right - 170;
  model.series.forEach((s, i) => {
    const color = PALETTE[i % PALETTE.length]!;
    const y = top + 10 + i * 16;
    parts.push(
      `<line x1="${legendX}" y1="${y}" x2="${legendX + 22}" y2="${y}" stroke="${color}" stroke-width="2"/>`,
      `<text x="${legendX + 28}" y="${y + 4}" font-size="12">${esc(s.label)}</text>`,
    );
  });

  parts.push("</svg>");
  return parts.join("\n") + "\n";
}
