"""Sweep harness: directory layout, aggregation, failure isolation, report, CLI."""

import csv

import pytest

from uavnetsim import cli
from uavnetsim.config import Config, ConfigError, dump_scenario, parse_config
from uavnetsim.sweep import (
    WORKERS_ENV,
    ReportError,
    compare_report,
    run_sweep,
    worker_count,
)

STUB = """
scenario.technology = stub
scenario.horizon_s = 2
uav.trajectory = orbit
uav.distance_m = 25
uav.altitude_m = 10
"""


@pytest.fixture(autouse=True)
def _serial(monkeypatch):
    monkeypatch.setenv(WORKERS_ENV, "1")


def test_sweep_layout_and_aggregate(tmp_path):
    out = tmp_path / "swp"
    outcome = run_sweep(parse_config(STUB), "uav.speed_mps", ["2", "5"], 2, out)
    assert outcome.ok
    for value in ("2", "5"):
        for seed in (0, 1):
            d = out / "runs" / f"uav.speed_mps={value}" / f"seed{seed}"
            assert (d / "packets.csv").exists()
            assert not d.with_name(d.name + ".staging").exists()
    with open(out / "aggregate.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    metrics = {r["metric"] for r in rows}
    assert {"position_error_m", "delivery_ratio", "telemetry_delay_us"} <= metrics
    by = {(r["value"], r["metric"]): r for r in rows}
    assert all(r["n_seeds"] == "2" for r in rows)
    # hold error scales with speed on the null channel
    slow = float(by[("2", "position_error_m")]["mean"])
    fast = float(by[("5", "position_error_m")]["mean"])
    assert fast == pytest.approx(2.5 * slow, rel=0.01)
    assert outcome.metrics["5"]["position_error_m"]["mean"] == fast
    manifest = (out / "manifest.txt").read_text()
    assert "sweep_param = uav.speed_mps" in manifest
    assert "technology = stub" in manifest


def test_sweep_validation(tmp_path):
    cfg = parse_config(STUB)
    with pytest.raises(ConfigError, match="unknown sweep parameter"):
        run_sweep(cfg, "uav.bogus", ["1"], 1, tmp_path / "a")
    with pytest.raises(ConfigError, match="at least one value"):
        run_sweep(cfg, "uav.speed_mps", [], 1, tmp_path / "b")
    with pytest.raises(ConfigError, match="seed count"):
        run_sweep(cfg, "uav.speed_mps", ["1"], 0, tmp_path / "c")
    with pytest.raises(ConfigError, match="above maximum"):
        run_sweep(cfg, "uav.speed_mps", ["2", "999"], 1, tmp_path / "d")
    assert not (tmp_path / "d").exists()        # bad values die before any run


def test_sweep_isolates_failing_point(tmp_path):
    # distance 15 passes the per-key range check but cannot build an orbit
    # above a base of height 10 with the vehicle at altitude 30
    cfg = parse_config(STUB + "uav.altitude_m = 30\nuav.distance_m = 40\n")
    out = tmp_path / "swp"
    outcome = run_sweep(cfg, "uav.distance_m", ["40", "15"], 2, out)
    assert not outcome.ok
    assert [(v, s) for v, s, _ in outcome.failures] == [("15", 0), ("15", 1)]
    with open(out / "failures.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 2 and rows[0]["value"] == "15"
    with open(out / "aggregate.csv", newline="") as fh:
        agg_values = {r["value"] for r in csv.DictReader(fh)}
    assert agg_values == {"40"}                 # good point still aggregated
    assert (out / "runs" / "uav.distance_m=40" / "seed1" / "packets.csv").exists()
    assert not (out / "runs" / "uav.distance_m=15" / "seed0" / "packets.csv").exists()


def test_worker_count_env(monkeypatch):
    monkeypatch.setenv(WORKERS_ENV, "4")
    assert worker_count() == 4
    monkeypatch.setenv(WORKERS_ENV, "0")
    with pytest.raises(ConfigError):
        worker_count()
    monkeypatch.setenv(WORKERS_ENV, "x")
    with pytest.raises(ConfigError):
        worker_count()
    monkeypatch.delenv(WORKERS_ENV)
    assert worker_count() >= 1


def _fake_sweep(d, tech, means):
    d.mkdir(parents=True)
    rows = [["sweep_param", "value", "metric", "mean", "variance", "p95", "n_seeds"]]
    for value, mean in means.items():
        rows.append(["uav.speed_mps", value, "telemetry_delay_us",
                     repr(mean), "0.0", repr(mean), "3"])
        rows.append(["uav.speed_mps", value, "delivery_ratio", "0.9", "0.0", "0.9", "3"])
    with open(d / "aggregate.csv", "w", newline="") as fh:
        csv.writer(fh).writerows(rows)
    (d / "manifest.txt").write_text(
        f"sweep_param = uav.speed_mps\nvalues = {','.join(means)}\n"
        f"seeds = 3\ntechnology = {tech}\n")


def test_report_winners_and_crossover(tmp_path):
    _fake_sweep(tmp_path / "a", "wifi", {"2": 10.0, "5": 30.0})
    _fake_sweep(tmp_path / "b", "lte", {"2": 20.0, "5": 25.0})
    text = compare_report(tmp_path / "a", tmp_path / "b")
    assert "telemetry_delay_us (lower wins)" in text
    assert "delivery_ratio" not in text         # not a lower-wins scalar
    lines = text.splitlines()
    row2 = next(l for l in lines if l.strip().startswith("2 "))
    row5 = next(l for l in lines if l.strip().startswith("5 "))
    assert row2.rstrip().endswith("wifi")
    assert row5.rstrip().endswith("lte")
    assert "crossover between uav.speed_mps=2 and uav.speed_mps=5" in text


def test_report_tie_and_axis_mismatch(tmp_path):
    _fake_sweep(tmp_path / "a", "wifi", {"2": 10.0})
    _fake_sweep(tmp_path / "b", "wifi", {"2": 10.0})
    text = compare_report(tmp_path / "a", tmp_path / "b")
    assert "tie" in text
    assert "A:wifi" in text and "B:wifi" in text   # same label disambiguated
    _fake_sweep(tmp_path / "c", "lte", {"3": 10.0})
    with pytest.raises(ReportError, match="sweep values differ"):
        compare_report(tmp_path / "a", tmp_path / "c")
    with pytest.raises(ReportError, match="no aggregate.csv"):
        compare_report(tmp_path / "a", tmp_path / "missing")


# -- command line --------------------------------------------------------

def _scenario_file(tmp_path, text=STUB):
    path = tmp_path / "scenario.cfg"
    path.write_text(text)
    return path


def test_cli_simulate(tmp_path, capsys):
    path = _scenario_file(tmp_path)
    rc = cli.main(["simulate", "--scenario", str(path), "--seed", "1",
                   "--out", str(tmp_path / "out")])
    assert rc == 0
    assert (tmp_path / "out" / "packets.csv").exists()
    text = capsys.readouterr().out
    assert "position_error_m" in text and "stub_s1" in text


def test_cli_validation_errors(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("wifi.bogus = 1\n")
    assert cli.main(["simulate", "--scenario", str(bad),
                     "--out", str(tmp_path / "o")]) == 2
    assert cli.main(["simulate", "--scenario", str(tmp_path / "missing.cfg"),
                     "--out", str(tmp_path / "o")]) == 2
    assert cli.main(["report", "--a", str(tmp_path / "x"),
                     "--b", str(tmp_path / "y")]) == 2
    assert "error:" in capsys.readouterr().err


def test_cli_sweep_ok_and_partial(tmp_path, capsys):
    path = _scenario_file(tmp_path)
    rc = cli.main(["sweep", "--scenario", str(path), "--param", "uav.speed_mps",
                   "--values", "2,5", "--seeds", "1", "--out", str(tmp_path / "ok")])
    assert rc == 0
    assert "2/2 runs ok" in capsys.readouterr().out

    bad = _scenario_file(tmp_path, STUB + "uav.altitude_m = 30\nuav.distance_m = 40\n")
    rc = cli.main(["sweep", "--scenario", str(bad), "--param", "uav.distance_m",
                   "--values", "40,15", "--seeds", "1", "--out", str(tmp_path / "part")])
    assert rc == 3
    captured = capsys.readouterr()
    assert "1/2 runs ok" in captured.out
    assert "failed: uav.distance_m=15" in captured.err


def test_cli_report_runs_end_to_end(tmp_path, capsys):
    path = _scenario_file(tmp_path)
    for d in ("ra", "rb"):
        cli.main(["sweep", "--scenario", str(path), "--param", "uav.speed_mps",
                  "--values", "2,5", "--seeds", "1", "--out", str(tmp_path / d)])
    capsys.readouterr()
    rc = cli.main(["report", "--a", str(tmp_path / "ra"), "--b", str(tmp_path / "rb")])
    assert rc == 0
    text = capsys.readouterr().out
    assert "comparison over uav.speed_mps" in text
    assert "tie" in text                        # identical sweeps tie everywhere
