import { mkdirSync, mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";
import { SchemaError } from "../src/csv.js";
import { FIGURES, buildFigure, figureById } from "../src/figures.js";

const FIXTURE = fileURLToPath(new URL("../fixtures/results", import.meta.url));

const def = (id: string) => {
  const d = figureById(id);
  expect(d).toBeDefined();
  return d!;
};

describe("figure registry", () => {
  it("covers the nine-figure suite with unique files", () => {
    expect(FIGURES.length).toBe(9);
    expect(new Set(FIGURES.map((f) => f.file)).size).toBe(9);
    expect(FIGURES.map((f) => f.id)).toEqual(
      ["F3", "F4", "F5", "F6", "F7", "F8", "F9", "F10", "F11"]);
  });

  it("looks figures up case-insensitively", () => {
    expect(figureById("f7")?.id).toBe("F7");
    expect(figureById("F7")?.id).toBe("F7");
    expect(figureById("F99")).toBeUndefined();
  });
});

describe("buildFigure on the fixture", () => {
  it("builds the temporal trace with one series per run directory", () => {
    const warnings: string[] = [];
    const m = buildFigure(def("F3"), FIXTURE, (w) => warnings.push(w));
    expect(warnings).toEqual([]);
    expect(m).not.toBeNull();
    expect(m!.series.map((s) => s.label)).toEqual(["lte", "wifi"]);
    expect(m!.markers).toBe(false);
    for (const s of m!.series) expect(s.points.length).toBeGreaterThan(100);
  });

  it("converts sweep means faithfully (1e-9) including unit scaling", () => {
    const warnings: string[] = [];
    const m = buildFigure(def("F8"), FIXTURE, (w) => warnings.push(w));
    expect(warnings).toEqual([]);
    expect(m!.series.map((s) => s.label)).toEqual(["lte", "wifi"]);

    for (const s of m!.series) {
      const dirName = s.label.replace(/ /g, "_");
      const lines = readFileSync(join(FIXTURE, "f8", dirName, "aggregate.csv"), "utf8")
        .trim().split(/\r?\n/);
      const header = lines[0]!.split(",");
      const idx = (c: string) => header.indexOf(c);
      const rows = lines.slice(1).map((l) => l.split(","))
        .filter((c) => c[idx("metric")] === "task_delay_us");
      expect(rows.length).toBe(s.points.length);
      rows.forEach((cells, i) => {
        const mean = Number(cells[idx("mean")]);
        const sd = Math.sqrt(Number(cells[idx("variance")]));
        expect(Math.abs(s.points[i]!.y - mean * 1e-3)).toBeLessThanOrEqual(1e-9);
        expect(Math.abs(s.points[i]!.spread! - sd * 1e-3)).toBeLessThanOrEqual(1e-9);
        expect(s.points[i]!.x).toBe(Number(cells[idx("value")]));
      });
    }
  });

  it("keeps position-error figures in native units", () => {
    const m = buildFigure(def("F5"), FIXTURE, () => {});
    const lines = readFileSync(join(FIXTURE, "f5", "wifi", "aggregate.csv"), "utf8")
      .trim().split(/\r?\n/);
    const header = lines[0]!.split(",");
    const idx = (c: string) => header.indexOf(c);
    const byValue = new Map(
      lines.slice(1).map((l) => l.split(","))
        .filter((c) => c[idx("metric")] === "position_error_m")
        .map((c) => [Number(c[idx("value")]), Number(c[idx("mean")])] as const));
    for (const p of m!.series[0]!.points) {
      expect(Math.abs(p.y - byValue.get(p.x)!)).toBeLessThanOrEqual(1e-9);
    }
  });

  it("builds every figure in the suite from the fixture", () => {
    for (const f of FIGURES) {
      const m = buildFigure(f, FIXTURE, () => {});
      expect(m, f.id).not.toBeNull();
      expect(m!.series.length).toBeGreaterThan(0);
    }
  });
});

describe("buildFigure failure modes", () => {
  it("returns null with a warning when the figure directory is absent", () => {
    const tmp = mkdtempSync(join(tmpdir(), "figtest-"));
    const warnings: string[] = [];
    const m = buildFigure(def("F4"), tmp, (w) => warnings.push(w));
    expect(m).toBeNull();
    expect(warnings.length).toBe(1);
    expect(warnings[0]).toContain("F4");
    expect(warnings[0]).toContain("skipped");
  });

  it("rejects a sweep over the wrong parameter", () => {
    const tmp = mkdtempSync(join(tmpdir(), "figtest-"));
    const d = join(tmp, "f4", "bad");
    mkdirSync(d, { recursive: true });
    writeFileSync(join(d, "manifest.txt"),
      "sweep_param = uav.distance_m\nvalues = 10\nseeds = 1\n");
    writeFileSync(join(d, "aggregate.csv"),
      "sweep_param,value,metric,mean,variance,p95,n_seeds\n" +
      "uav.distance_m,10,position_error_m,0.5,0,0.5,1\n");
    expect(() => buildFigure(def("F4"), tmp, () => {}))
      .toThrowError(/needs "ground\.n_nodes"/);
    expect(() => buildFigure(def("F4"), tmp, () => {}))
      .toThrowError(SchemaError);
  });

  it("warns per missing metric value and skips metric-less series", () => {
    const tmp = mkdtempSync(join(tmpdir(), "figtest-"));
    const d = join(tmp, "f4", "partial");
    mkdirSync(d, { recursive: true });
    writeFileSync(join(d, "manifest.txt"),
      "sweep_param = ground.n_nodes\nvalues = 2,4\nseeds = 1\n");
    writeFileSync(join(d, "aggregate.csv"),
      "sweep_param,value,metric,mean,variance,p95,n_seeds\n" +
      "ground.n_nodes,2,position_error_m,0.5,0,0.5,1\n");
    const warnings: string[] = [];
    const m = buildFigure(def("F4"), tmp, (w) => warnings.push(w));
    expect(m).not.toBeNull();
    expect(m!.series[0]!.points.map((p) => p.x)).toEqual([2]);
    expect(warnings.some((w) => w.includes("ground.n_nodes=4"))).toBe(true);
  });
});
