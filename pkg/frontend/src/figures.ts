/** The nine-figure experiment suite: which sweep feeds which chart. */

import { join } from "node:path";
import { SchemaError } from "./csv.js";
import { loadErrorTrace, loadSweep, metricSeries, subdirs } from "./data.js";
import type { FigureModel, Series } from "./model.js";

export type Warn = (message: string) => void;

export interface FigureDef {
  id: string;
  file: string;
  title: string;
  xLabel: string;
  yLabel: string;
  kind: "trace" | "sweep";
  param?: string;        // required sweep parameter (sweep figures)
  metric?: string;       // aggregate metric plotted (sweep figures)
  yScale: number;        // multiplier applied to metric values
  logX: boolean;
  errorBars: boolean;
}

const sweepFig = (
  id: string, file: string, title: string, xLabel: string, yLabel: string,
  param: string, metric: string,
  opts: Partial<Pick<FigureDef, "yScale" | "logX" | "errorBars">> = {},
): FigureDef => ({
  id, file, title, xLabel, yLabel, kind: "sweep", param, metric,
  yScale: opts.yScale ?? 1, logX: opts.logX ?? false, errorBars: opts.errorBars ?? false,
});

const US_TO_MS = 1e-3;

export const FIGURES: readonly FigureDef[] = [
  {
    id: "F3", file: "fig3_temporal.svg",
    title: "Position error over time",
    xLabel: "time (s)", yLabel: "position error (m)",
    kind: "trace", yScale: 1, logX: false, errorBars: false,
  },
  sweepFig("F4", "fig4_nodes.svg", "Position error vs contending ground nodes",
    "contending ground nodes", "mean position error (m)",
    "ground.n_nodes", "position_error_m", { errorBars: true }),
  sweepFig("F5", "fig5_distance.svg", "Position error vs distance",
    "distance to base station (m)", "mean position error (m)",
    "uav.distance_m", "position_error_m"),
  sweepFig("F6", "fig6_speed.svg", "Position error vs UAV speed",
    "UAV speed (m/s)", "mean position error (m)",
    "uav.speed_mps", "position_error_m"),
  sweepFig("F7", "fig7_frequency.svg", "Position error vs telemetry update frequency",
    "telemetry update frequency (Hz)", "mean position error (m)",
    "telemetry.freq_hz", "position_error_m", { logX: true }),
  sweepFig("F8", "fig8_delay_distance_50kb.svg", "Task delay vs distance (50 KB tasks)",
    "distance to base station (m)", "mean task delay (ms)",
    "uav.distance_m", "task_delay_us", { yScale: US_TO_MS }),
  sweepFig("F9", "fig9_delay_distance_200kb.svg", "Task delay vs distance (200 KB tasks)",
    "distance to base station (m)", "mean task delay (ms)",
    "uav.distance_m", "task_delay_us", { yScale: US_TO_MS }),
  sweepFig("F10", "fig10_delay_size_no_load.svg", "Task delay vs task size (no load)",
    "task size (KB)", "mean task delay (ms)",
    "task.size_kb", "task_delay_us", { yScale: US_TO_MS }),
  sweepFig("F11", "fig11_delay_size_high_load.svg", "Task delay vs task size (high load)",
    "task size (KB)", "mean task delay (ms)",
    "task.size_kb", "task_delay_us", { yScale: US_TO_MS }),
];

export const FIGURE_IDS = FIGURES.map((f) => f.id);

export function figureById(id: string): FigureDef | undefined {
  return FIGURES.find((f) => f.id === id.toUpperCase());
}

const pretty = (name: string) => name.replace(/_/g, " ");

function traceSeries(base: string, names: string[], warn: Warn): Series[] {
  const series: Series[] = [];
  for (const name of names) {
    const trace = loadErrorTrace(join(base, name));
    if (trace.t_s.length === 0) {
      warn(`F3: ${name} has an empty error trace, skipped`);
      continue;
    }
    series.push({
      label: pretty(name),
      points: trace.t_s.map((t, i) => ({ x: t, y: trace.err_m[i]! })),
    });
  }
  return series;
}

function sweepSeries(def: FigureDef, base: string, names: string[], warn: Warn): Series[] {
  const series: Series[] = [];
  for (const name of names) {
    const sweep = loadSweep(join(base, name));
    if (sweep.param !== def.param) {
      throw new SchemaError(
        `${def.id}: ${join(base, name)} sweeps "${sweep.param}" but this figure needs "${def.param}"`);
    }
    const { points, missing } = metricSeries(sweep, def.metric!);
    for (const value of missing) {
      warn(`${def.id}: ${name} has no "${def.metric}" at ${def.param}=${value}`);
    }
    if (points.length === 0) {
      warn(`${def.id}: ${name} has no "${def.metric}" data, skipped`);
      continue;
    }
    series.push({
      label: pretty(name),
      points: points.map((p) => ({
        x: p.x,
        y: p.mean * def.yScale,
        spread: Math.sqrt(p.variance) * def.yScale,
      })),
    });
  }
  return series;
}

/**
 * Assemble one figure's chart model from `inDir/<id lowercased>/<series dirs>`.
 * Returns null (after a warning) when the figure has no usable inputs.
 */
export function buildFigure(def: FigureDef, inDir: string, warn: Warn): FigureModel | null {
  const base = join(inDir, def.id.toLowerCase());
  const names = subdirs(base);
  if (names.length === 0) {
    warn(`${def.id}: no input directories under ${base}, skipped`);
    return null;
  }
  const series = def.kind === "trace"
    ? traceSeries(base, names, warn)
    : sweepSeries(def, base, names, warn);
  if (series.length === 0) {
    warn(`${def.id}: nothing to plot, skipped`);
    return null;
  }
  return {
    id: def.id,
    file: def.file,
    title: def.title,
    xLabel: def.xLabel,
    yLabel: def.yLabel,
    logX: def.logX,
    errorBars: def.errorBars,
    markers: def.kind === "sweep",
    series,
  };
}
