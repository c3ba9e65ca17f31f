/** Loading layer: sweep aggregates, manifests, and per-run error traces. */

import { readFileSync, readdirSync, statSync } from "node:fs";
import { join } from "node:path";
import { SchemaError, num, parseCsv } from "./csv.js";

export const AGGREGATE_COLUMNS = [
  "sweep_param", "value", "metric", "mean", "variance", "p95", "n_seeds",
] as const;

export const ERROR_COLUMNS = [
  "run_id", "t_us", "true_x", "true_y", "true_z", "est_x", "est_y", "est_z", "err_m",
] as const;

/** One sweep point for one metric, straight from aggregate.csv. */
export interface AggregatePoint {
  value: string;      // raw sweep value string, e.g. "40"
  x: number;          // numeric form of `value`
  mean: number;
  variance: number;
  p95: number;
  nSeeds: number;
}

/** A sweep output directory: manifest plus per-metric aggregate table. */
export interface Sweep {
  dir: string;
  param: string;
  values: string[];
  seeds: number;
  technology: string;
  metrics: Map<string, Map<string, AggregatePoint>>; // metric -> value -> point
}

function parseManifest(dir: string): Record<string, string> {
  const path = join(dir, "manifest.txt");
  let text: string;
  try {
    text = readFileSync(path, "utf8");
  } catch {
    throw new SchemaError(`${path}: manifest not found`);
  }
  const out: Record<string, string> = {};
  for (const line of text.split("\n")) {
    const trimmed = line.trim();
    if (trimmed === "" || trimmed.startsWith("#")) continue;
    const eq = trimmed.indexOf("=");
    if (eq < 0) throw new SchemaError(`${path}: malformed line "${trimmed}"`);
    out[trimmed.slice(0, eq).trim()] = trimmed.slice(eq + 1).trim();
  }
  return out;
}

/** Load one sweep directory (aggregate.csv + manifest.txt). */
export function loadSweep(dir: string): Sweep {
  const manifest = parseManifest(dir);
  for (const key of ["sweep_param", "values", "seeds"]) {
    if (!(key in manifest)) {
      throw new SchemaError(`${join(dir, "manifest.txt")}: missing "${key}"`);
    }
  }
  const aggPath = join(dir, "aggregate.csv");
  let text: string;
  try {
    text = readFileSync(aggPath, "utf8");
  } catch {
    throw new SchemaError(`${aggPath}: aggregate not found`);
  }
  const rows = parseCsv(text, AGGREGATE_COLUMNS, aggPath);
  const metrics = new Map<string, Map<string, AggregatePoint>>();
  for (const row of rows) {
    const metric = row["metric"] ?? "";
    const value = row["value"] ?? "";
    let byValue = metrics.get(metric);
    if (!byValue) {
      byValue = new Map();
      metrics.set(metric, byValue);
    }
    byValue.set(value, {
      value,
      x: num(row, "value", aggPath),
      mean: num(row, "mean", aggPath),
      variance: num(row, "variance", aggPath),
      p95: num(row, "p95", aggPath),
      nSeeds: num(row, "n_seeds", aggPath),
    });
  }
  return {
    dir,
    param: manifest["sweep_param"]!,
    values: manifest["values"]!.split(",").map((v) => v.trim()),
    seeds: Number(manifest["seeds"]),
    technology: manifest["technology"] ?? "",
    metrics,
  };
}

/**
 * One metric's points in manifest value order. Values whose runs produced no
 * such metric are reported in `missing` instead of fabricating a point.
 */
export function metricSeries(
  sweep: Sweep,
  metric: string,
): { points: AggregatePoint[]; missing: string[] } {
  const byValue = sweep.metrics.get(metric);
  const points: AggregatePoint[] = [];
  const missing: string[] = [];
  for (const value of sweep.values) {
    const p = byValue?.get(value);
    if (p) points.push(p);
    else missing.push(value);
  }
  return { points, missing };
}

/** Per-sample position error trace of a single run. */
export interface ErrorTrace {
  t_s: number[];
  err_m: number[];
}

export function loadErrorTrace(runDir: string): ErrorTrace {
  const path = join(runDir, "error.csv");
  let text: string;
  try {
    text = readFileSync(path, "utf8");
  } catch {
    throw new SchemaError(`${path}: error trace not found`);
  }
  const rows = parseCsv(text, ERROR_COLUMNS, path);
  const t_s: number[] = [];
  const err_m: number[] = [];
  for (const row of rows) {
    t_s.push(num(row, "t_us", path) / 1e6);
    err_m.push(num(row, "err_m", path));
  }
  return { t_s, err_m };
}

/** Sorted immediate subdirectories (series entries of one figure input). */
export function subdirs(dir: string): string[] {
  let names: string[];
  try {
    names = readdirSync(dir);
  } catch {
    return [];
  }
  return names
    .filter((n) => {
      try {
        return statSync(join(dir, n)).isDirectory();
      } catch {
        return false;
      }
    })
    .sort();
}
