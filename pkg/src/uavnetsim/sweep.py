"""Multi-seed parameter sweeps and the two-directory comparison report.

A sweep runs the cartesian product of sweep values and seeds, each run in
its own staged output directory published atomically, then aggregates the
per-run scalar metrics into one CSV. Failed runs are recorded and skipped;
the sweep itself keeps going.
"""

from __future__ import annotations

import csv
import os
import shutil
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from uavnetsim.config import Config, ConfigError, parse_config
from uavnetsim.scenario import run_scenario

WORKERS_ENV = "UAVNETSIM_WORKERS"
AGGREGATE_HEADER = ["sweep_param", "value", "metric", "mean", "variance", "p95", "n_seeds"]
FAILURES_HEADER = ["sweep_param", "value", "seed", "error"]


def worker_count() -> int:
    """Pool size: env override first, else capped CPU count."""
    raw = os.environ.get(WORKERS_ENV, "")
    if raw:
        try:
            n = int(raw)
        except ValueError as exc:
            raise ConfigError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from exc
        if n < 1:
            raise ConfigError(f"{WORKERS_ENV} must be >= 1, got {n}")
        return n
    return min(os.cpu_count() or 1, 8)


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _run_point(cfg_text: str, param: str, raw_value: str, seed: int,
               run_dir: str) -> tuple[str, object]:
    """One isolated run; stages CSVs then renames the directory into place."""
    try:
        cfg = parse_config(cfg_text)
        cfg.set(param, raw_value)
        final = Path(run_dir)
        tmp = final.with_name(final.name + ".staging")
        if tmp.exists():
            shutil.rmtree(tmp)
        result = run_scenario(cfg, seed, out_dir=tmp)
        if final.exists():
            shutil.rmtree(final)
        os.replace(tmp, final)
        return "ok", result.summary.metric_values()
    except Exception as exc:          # run isolation: a bad point must not kill the sweep
        return "error", f"{type(exc).__name__}: {exc}"


@dataclass
class SweepOutcome:
    out_dir: Path
    param: str
    values: list[str]
    n_seeds: int
    metrics: dict[str, dict[str, dict[str, float]]]   # value -> metric -> stats
    failures: list[tuple[str, int, str]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures


def run_sweep(cfg: Config, param: str, values: list[str], seeds: int,
              out_dir: str | Path) -> SweepOutcome:
    if param not in cfg:
        raise ConfigError(f"unknown sweep parameter {param!r}")
    if not values:
        raise ConfigError("sweep needs at least one value")
    if seeds < 1:
        raise ConfigError(f"seed count must be >= 1, got {seeds}")
    for raw in values:                # fail fast before any run starts
        cfg.copy().set(param, raw)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cfg_text = cfg.to_text()
    jobs = []
    for raw in values:
        for seed in range(seeds):
            run_dir = out / "runs" / f"{param}={raw}" / f"seed{seed}"
            run_dir.parent.mkdir(parents=True, exist_ok=True)
            jobs.append((raw, seed, str(run_dir)))

    workers = worker_count()
    if workers == 1:
        results = [_run_point(cfg_text, param, raw, seed, rd) for raw, seed, rd in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_run_point, cfg_text, param, raw, seed, rd)
                       for raw, seed, rd in jobs]
            results = [f.result() for f in futures]

    per_value: dict[str, dict[str, list[float]]] = {raw: {} for raw in values}
    failures: list[tuple[str, int, str]] = []
    for (raw, seed, _), (status, payload) in zip(jobs, results):
        if status == "ok":
            for name, value in payload.items():
                per_value[raw].setdefault(name, []).append(value)
        else:
            failures.append((raw, seed, payload))

    stats: dict[str, dict[str, dict[str, float]]] = {}
    rows = []
    for raw in values:
        stats[raw] = {}
        for name in sorted(per_value[raw]):
            arr = np.asarray(per_value[raw][name], dtype=float)
            entry = {"mean": float(arr.mean()),
                     "variance": float(arr.var()),
                     "p95": float(np.percentile(arr, 95)),
                     "n_seeds": len(arr)}
            stats[raw][name] = entry
            rows.append([param, raw, name, _fmt(entry["mean"]), _fmt(entry["variance"]),
                         _fmt(entry["p95"]), str(entry["n_seeds"])])

    _write_rows(out / "aggregate.csv", AGGREGATE_HEADER, rows)
    if failures:
        _write_rows(out / "failures.csv", FAILURES_HEADER,
                    [[param, raw, str(seed), msg] for raw, seed, msg in failures])
    _write_manifest(out, cfg, param, values, seeds)
    return SweepOutcome(out_dir=out, param=param, values=list(values),
                        n_seeds=seeds, metrics=stats, failures=failures)


def _write_rows(path: Path, header: list[str], rows: list[list[str]]) -> None:
    tmp = path.with_suffix(path.suffix + ".staging")
    with open(tmp, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    os.replace(tmp, path)


def _write_manifest(out: Path, cfg: Config, param: str, values: list[str],
                    seeds: int) -> None:
    text = (f"sweep_param = {param}\n"
            f"values = {','.join(str(v) for v in values)}\n"
            f"seeds = {seeds}\n"
            f"technology = {cfg['scenario.technology']}\n")
    tmp = out / "manifest.txt.staging"
    tmp.write_text(text)
    os.replace(tmp, out / "manifest.txt")


# -- comparison report ---------------------------------------------------

class ReportError(Exception):
    pass


def _load_aggregate(out_dir: Path) -> tuple[str, list[str], dict]:
    path = out_dir / "aggregate.csv"
    if not path.exists():
        raise ReportError(f"no aggregate.csv under {out_dir}")
    values: list[str] = []
    table: dict[tuple[str, str], float] = {}
    param = None
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            param = row["sweep_param"]
            if row["value"] not in values:
                values.append(row["value"])
            if row["mean"]:
                table[(row["value"], row["metric"])] = float(row["mean"])
    if param is None:
        raise ReportError(f"{path} holds no data rows")
    return param, values, table


def _label(out_dir: Path) -> str:
    manifest = out_dir / "manifest.txt"
    if manifest.exists():
        for line in manifest.read_text().splitlines():
            if line.startswith("technology"):
                return line.split("=", 1)[1].strip()
    return out_dir.name


def compare_report(dir_a: str | Path, dir_b: str | Path) -> str:
    """Per-point winner table for two sweeps over the same axis."""
    dir_a, dir_b = Path(dir_a), Path(dir_b)
    param_a, values_a, table_a = _load_aggregate(dir_a)
    param_b, values_b, table_b = _load_aggregate(dir_b)
    if param_a != param_b:
        raise ReportError(f"sweep axes differ: {param_a!r} vs {param_b!r}")
    if values_a != values_b:
        raise ReportError(f"sweep values differ: {values_a} vs {values_b}")
    name_a, name_b = _label(dir_a), _label(dir_b)
    if name_a == name_b:
        name_a, name_b = f"A:{name_a}", f"B:{name_b}"

    metrics_a = {m for (_, m) in table_a}
    metrics_b = {m for (_, m) in table_b}
    # lower-is-better scalars only; delivery ratio would invert the ordering
    comparable = sorted((metrics_a & metrics_b) - {"delivery_ratio"})
    lines = [f"comparison over {param_a}: {name_a} (a={dir_a}) vs {name_b} (b={dir_b})"]
    for metric in comparable:
        lines.append("")
        lines.append(f"metric: {metric} (lower wins)")
        lines.append(f"  {'value':>12}  {name_a:>16}  {name_b:>16}  winner")
        winners = []
        for value in values_a:
            va = table_a.get((value, metric))
            vb = table_b.get((value, metric))
            if va is None or vb is None:
                winner = "n/a"
            elif abs(va - vb) <= 1e-9 * max(abs(va), abs(vb), 1.0):
                winner = "tie"
            else:
                winner = name_a if va < vb else name_b
            winners.append(winner)
            fa = "-" if va is None else f"{va:.6g}"
            fb = "-" if vb is None else f"{vb:.6g}"
            lines.append(f"  {value:>12}  {fa:>16}  {fb:>16}  {winner}")
        decided = [(v, w) for v, w in zip(values_a, winners) if w in (name_a, name_b)]
        for (v0, w0), (v1, w1) in zip(decided, decided[1:]):
            if w0 != w1:
                lines.append(f"  crossover between {param_a}={v0} and {param_a}={v1}")
    return "\n".join(lines) + "\n"
