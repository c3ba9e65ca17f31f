import { mkdtempSync, readFileSync, writeFileSync, mkdirSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";
import { SchemaError } from "../src/csv.js";
import {
  loadErrorTrace, loadSweep, metricSeries, subdirs,
} from "../src/data.js";

const FIXTURE = fileURLToPath(new URL("../fixtures/results", import.meta.url));

/** Independent aggregate.csv reader: plain string splitting, no CSV library. */
function rawAggregate(dir: string): Map<string, Map<string, number>> {
  const lines = readFileSync(join(dir, "aggregate.csv"), "utf8")
    .trim().split(/\r?\n/);
  const header = lines[0]!.split(",");
  const col = (name: string) => header.indexOf(name);
  const out = new Map<string, Map<string, number>>();
  for (const line of lines.slice(1)) {
    const cells = line.split(",");
    const metric = cells[col("metric")]!;
    const value = cells[col("value")]!;
    if (!out.has(metric)) out.set(metric, new Map());
    out.get(metric)!.set(value, Number(cells[col("mean")]));
  }
  return out;
}

describe("loadSweep", () => {
  it("reads manifest fields and every aggregate row", () => {
    const sweep = loadSweep(join(FIXTURE, "f8", "wifi"));
    expect(sweep.param).toBe("uav.distance_m");
    expect(sweep.values).toEqual(["10", "20"]);
    expect(sweep.seeds).toBe(2);
    expect(sweep.technology).toBe("wifi");
    expect(sweep.metrics.has("task_delay_us")).toBe(true);
    expect(sweep.metrics.has("position_error_m")).toBe(true);
  });

  it("reproduces every mean in the table to 1e-9", () => {
    for (const rel of [
      ["f4", "wifi"], ["f5", "wifi"], ["f6", "ideal_link"], ["f7", "ideal_link"],
      ["f8", "wifi"], ["f8", "lte"], ["f9", "wifi"], ["f10", "wifi"], ["f11", "wifi"],
    ] as const) {
      const dir = join(FIXTURE, ...rel);
      const sweep = loadSweep(dir);
      const raw = rawAggregate(dir);
      expect(raw.size).toBeGreaterThan(0);
      for (const [metric, byValue] of raw) {
        for (const [value, mean] of byValue) {
          const got = sweep.metrics.get(metric)?.get(value);
          expect(got, `${dir} ${metric}@${value}`).toBeDefined();
          expect(Math.abs(got!.mean - mean)).toBeLessThanOrEqual(1e-9);
        }
      }
    }
  });

  it("fails with a named error when the manifest is absent", () => {
    const tmp = mkdtempSync(join(tmpdir(), "figtest-"));
    expect(() => loadSweep(tmp)).toThrowError(/manifest not found/);
  });

  it("fails when a manifest key is missing", () => {
    const tmp = mkdtempSync(join(tmpdir(), "figtest-"));
    writeFileSync(join(tmp, "manifest.txt"), "sweep_param = x\nvalues = 1\n");
    expect(() => loadSweep(tmp)).toThrowError(/missing "seeds"/);
  });

  it("fails when aggregate.csv lacks a required column", () => {
    const tmp = mkdtempSync(join(tmpdir(), "figtest-"));
    writeFileSync(join(tmp, "manifest.txt"),
      "sweep_param = x\nvalues = 1\nseeds = 1\n");
    writeFileSync(join(tmp, "aggregate.csv"),
      "sweep_param,value,metric,mean,p95,n_seeds\nx,1,m,0.5,0.5,1\n");
    expect(() => loadSweep(tmp)).toThrowError(/missing column "variance"/);
  });
});

describe("metricSeries", () => {
  it("orders points by the manifest value list", () => {
    const sweep = loadSweep(join(FIXTURE, "f5", "wifi"));
    const { points, missing } = metricSeries(sweep, "position_error_m");
    expect(missing).toEqual([]);
    expect(points.map((p) => p.x)).toEqual([10, 30]);
  });

  it("reports values without the metric instead of inventing points", () => {
    const sweep = loadSweep(join(FIXTURE, "f5", "wifi"));
    const { points, missing } = metricSeries(sweep, "no_such_metric");
    expect(points).toEqual([]);
    expect(missing).toEqual(["10", "30"]);
  });
});

describe("loadErrorTrace", () => {
  it("converts timestamps to seconds and keeps error magnitudes", () => {
    const dir = join(FIXTURE, "f3", "wifi");
    const trace = loadErrorTrace(dir);
    expect(trace.t_s.length).toBeGreaterThan(100);
    expect(trace.t_s.length).toBe(trace.err_m.length);
    // timestamps are strictly increasing and within the 3 s horizon
    for (let i = 1; i < trace.t_s.length; i++) {
      expect(trace.t_s[i]!).toBeGreaterThan(trace.t_s[i - 1]!);
    }
    expect(trace.t_s[trace.t_s.length - 1]!).toBeLessThanOrEqual(3.0);

    // spot-check one row against the raw file
    const lines = readFileSync(join(dir, "error.csv"), "utf8").trim().split(/\r?\n/);
    const header = lines[0]!.split(",");
    const cells = lines[1]!.split(",");
    const t_us = Number(cells[header.indexOf("t_us")]);
    const err = Number(cells[header.indexOf("err_m")]);
    expect(Math.abs(trace.t_s[0]! - t_us / 1e6)).toBeLessThanOrEqual(1e-12);
    expect(Math.abs(trace.err_m[0]! - err)).toBeLessThanOrEqual(1e-9);
  });

  it("raises SchemaError when the trace file is absent", () => {
    const tmp = mkdtempSync(join(tmpdir(), "figtest-"));
    expect(() => loadErrorTrace(tmp)).toThrowError(SchemaError);
  });
});

describe("subdirs", () => {
  it("lists only directories, sorted", () => {
    const tmp = mkdtempSync(join(tmpdir(), "figtest-"));
    mkdirSync(join(tmp, "b"));
    mkdirSync(join(tmp, "a"));
    writeFileSync(join(tmp, "file.txt"), "x");
    expect(subdirs(tmp)).toEqual(["a", "b"]);
  });

  it("returns [] for a missing path", () => {
    expect(subdirs("/no/such/dir")).toEqual([]);
  });
});
