"""Burst ledger, run summaries and the CSV contract shared with external tooling.

Every application emission is a burst of one or more network packets. The
ledger records, per packet, the first time it was handed to the network and
the time its bytes became visible at the receiver; packets that never make it
keep an empty delivery slot and a drop layer. The burst delay is the latest
packet delivery minus the emission instant, undefined while any packet is
missing.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

KINDS = ("telemetry", "task", "exogenous")
DROP_LAYERS = ("queue", "mac", "rlc", "in_flight")

PACKETS_HEADER = ["run_id", "burst_id", "kind", "seq", "tau_us", "emit_us", "deliver_us", "omega", "layer_dropped"]
BURSTS_HEADER = ["run_id", "burst_id", "kind", "size_bytes", "n_packets", "tau_us", "delta_us", "complete"]
ERROR_HEADER = ["run_id", "t_us", "true_x", "true_y", "true_z", "est_x", "est_y", "est_z", "err_m"]
AGGREGATE_HEADER = ["sweep_param", "value", "metric", "mean", "variance", "p95", "n_seeds"]


class MetricsError(Exception):
    """Raised on ledger corruption, e.g. a packet delivered twice."""


class BurstTrack:
    """Mutable per-burst record; one slot per network packet."""

    __slots__ = ("burst_id", "kind", "tau_us", "size_bytes", "n", "emit_us",
                 "deliver_us", "omega", "drop_layer", "on_complete", "_collector")

    def __init__(self, collector: "Collector", burst_id: int, kind: str,
                 tau_us: int, size_bytes: int, n_packets: int):
        if kind not in KINDS:
            raise MetricsError(f"unknown burst kind {kind!r}")
        if n_packets <= 0:
            raise MetricsError("a burst carries at least one packet")
        self._collector = collector
        self.burst_id = burst_id
        self.kind = kind
        self.tau_us = tau_us
        self.size_bytes = size_bytes
        self.n = n_packets
        self.emit_us: list[int | None] = [None] * n_packets
        self.deliver_us: list[int | None] = [None] * n_packets
        self.omega: list[int] = [0] * n_packets
        self.drop_layer: list[str | None] = [None] * n_packets
        self.on_complete = None   # optional (track, t_us) hook, fires once

    def emit(self, seq: int, t_us: int) -> None:
        """First hand-off to the network; retransmissions keep the original stamp."""
        if self.emit_us[seq] is None:
            self.emit_us[seq] = t_us

    def deliver(self, seq: int, t_us: int) -> None:
        if self.omega[seq]:
            raise MetricsError(f"burst {self.burst_id} packet {seq} delivered twice")
        if self.drop_layer[seq] is not None:
            raise MetricsError(f"burst {self.burst_id} packet {seq} delivered after drop")
        self.omega[seq] = 1
        self.deliver_us[seq] = t_us
        self._collector._count(self.kind, "delivered")
        if self.on_complete is not None and self.complete:
            self.on_complete(self, t_us)

    def drop(self, seq: int, layer: str) -> None:
        if layer not in DROP_LAYERS:
            raise MetricsError(f"unknown drop layer {layer!r}")
        if self.omega[seq] or self.drop_layer[seq] is not None:
            raise MetricsError(f"burst {self.burst_id} packet {seq} resolved twice")
        self.drop_layer[seq] = layer
        self._collector._count(self.kind, layer)

    @property
    def complete(self) -> bool:
        return all(self.omega)

    @property
    def delta_us(self) -> int | None:
        if not self.complete:
            return None
        return max(self.deliver_us) - self.tau_us


class Collector:
    """Accumulates burst tracks, error samples and conservation counters for one run."""

    def __init__(self, record_kinds: tuple[str, ...] = KINDS):
        self.record_kinds = record_kinds
        self.bursts: list[BurstTrack] = []
        self.error_rows: list[tuple] = []   # (t_us, truth xyz, est xyz, err_m)
        self.counts: dict[str, dict[str, int]] = {k: {"emitted": 0, "delivered": 0, "queue": 0,
                                                      "mac": 0, "rlc": 0, "in_flight": 0}
                                                  for k in KINDS}
        self._next_burst = 0
        self._finalized = False

    def new_burst(self, kind: str, tau_us: int, size_bytes: int, n_packets: int) -> BurstTrack:
        track = BurstTrack(self, self._next_burst, kind, tau_us, size_bytes, n_packets)
        self._next_burst += 1
        self.counts[kind]["emitted"] += n_packets
        if kind in self.record_kinds:
            self.bursts.append(track)
        return track

    def _count(self, kind: str, bucket: str) -> None:
        self.counts[kind][bucket] += 1

    def add_error_sample(self, t_us: int, truth, est) -> None:
        err = math.dist(truth, est)
        self.error_rows.append((t_us, truth, est, err))

    def finalize(self) -> None:
        """Close the ledger: packets still unresolved become in-flight losses."""
        if self._finalized:
            return
        self._finalized = True
        for b in self.bursts:
            for i in range(b.n):
                if not b.omega[i] and b.drop_layer[i] is None:
                    b.drop(i, "in_flight")
        # Kinds kept out of the row ledger still settle their counters, so the
        # conservation identity holds over every emitted packet.
        for kind in KINDS:
            if kind in self.record_kinds:
                continue
            c = self.counts[kind]
            resolved = sum(c[b] for b in ("delivered", "queue", "mac", "rlc", "in_flight"))
            c["in_flight"] += c["emitted"] - resolved

    def conservation(self, kind: str | None = None) -> tuple[int, int]:
        """(emitted, resolved-sum) for the exact conservation identity."""
        kinds = [kind] if kind else list(KINDS)
        emitted = sum(self.counts[k]["emitted"] for k in kinds)
        resolved = sum(self.counts[k][b] for k in kinds
                       for b in ("delivered", "queue", "mac", "rlc", "in_flight"))
        return emitted, resolved


@dataclass
class DelayStats:
    n_total: int
    n_complete: int
    mean_us: float | None = None
    var_us: float | None = None
    p95_us: float | None = None

    @property
    def incomplete_fraction(self) -> float | None:
        if self.n_total == 0:
            return None
        return 1.0 - self.n_complete / self.n_total


@dataclass
class RunSummary:
    horizon_us: int
    counts: dict
    delivery_ratio: float | None
    error_mean_m: float | None
    error_var_m: float | None
    error_p95_m: float | None
    delays: dict[str, DelayStats] = field(default_factory=dict)

    def metric_values(self) -> dict[str, float]:
        """Flat per-run scalars; the sweep aggregator and figures key off these names."""
        out: dict[str, float] = {}
        if self.error_mean_m is not None:
            out["position_error_m"] = self.error_mean_m
            out["position_error_p95_m"] = self.error_p95_m
        if self.delivery_ratio is not None:
            out["delivery_ratio"] = self.delivery_ratio
        for kind in ("telemetry", "task"):
            st = self.delays.get(kind)
            if st is None or st.n_total == 0:
                continue
            if st.mean_us is not None:
                out[f"{kind}_delay_us"] = st.mean_us
            out[f"{kind}_incomplete_fraction"] = st.incomplete_fraction
        return out


def _delay_stats(tracks: list[BurstTrack]) -> DelayStats:
    deltas = [float(b.delta_us) for b in tracks if b.complete]
    st = DelayStats(n_total=len(tracks), n_complete=len(deltas))
    if deltas:
        arr = np.asarray(deltas)
        st.mean_us = float(arr.mean())
        st.var_us = float(arr.var())
        st.p95_us = float(np.percentile(arr, 95))
    return st


def summarize(collector: Collector, horizon_us: int) -> RunSummary:
    collector.finalize()
    uav_emitted = sum(collector.counts[k]["emitted"] for k in ("telemetry", "task"))
    uav_delivered = sum(collector.counts[k]["delivered"] for k in ("telemetry", "task"))
    ratio = uav_delivered / uav_emitted if uav_emitted else None
    errs = np.asarray([r[3] for r in collector.error_rows]) if collector.error_rows else None
    delays = {kind: _delay_stats([b for b in collector.bursts if b.kind == kind])
              for kind in KINDS}
    return RunSummary(
        horizon_us=horizon_us,
        counts={k: dict(v) for k, v in collector.counts.items()},
        delivery_ratio=ratio,
        error_mean_m=float(errs.mean()) if errs is not None else None,
        error_var_m=float(errs.var()) if errs is not None else None,
        error_p95_m=float(np.percentile(errs, 95)) if errs is not None else None,
        delays=delays,
    )


# -- CSV writers and readers --------------------------------------------

def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def write_packets_csv(path: Path, run_id: str, collector: Collector) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(PACKETS_HEADER)
        for b in collector.bursts:
            for i in range(b.n):
                w.writerow([run_id, b.burst_id, b.kind, i, b.tau_us,
                            _fmt(b.emit_us[i]), _fmt(b.deliver_us[i]),
                            b.omega[i], b.drop_layer[i] or ""])


def write_bursts_csv(path: Path, run_id: str, collector: Collector) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(BURSTS_HEADER)
        for b in collector.bursts:
            w.writerow([run_id, b.burst_id, b.kind, b.size_bytes, b.n, b.tau_us,
                        _fmt(b.delta_us), int(b.complete)])


def write_error_csv(path: Path, run_id: str, collector: Collector) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(ERROR_HEADER)
        for t_us, truth, est, err in collector.error_rows:
            w.writerow([run_id, t_us, _fmt(truth[0]), _fmt(truth[1]), _fmt(truth[2]),
                        _fmt(est[0]), _fmt(est[1]), _fmt(est[2]), _fmt(err)])


def read_csv_rows(path: Path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def recompute_from_csv(out_dir: Path) -> dict[str, float]:
    """Independent re-aggregation of the written tables, for trace-vs-summary checks."""
    out: dict[str, float] = {}
    err_rows = read_csv_rows(Path(out_dir) / "error.csv")
    if err_rows:
        errs = np.asarray([float(r["err_m"]) for r in err_rows])
        out["position_error_m"] = float(errs.mean())
        out["position_error_p95_m"] = float(np.percentile(errs, 95))
    burst_rows = read_csv_rows(Path(out_dir) / "bursts.csv")
    for kind in ("telemetry", "task"):
        deltas = [float(r["delta_us"]) for r in burst_rows
                  if r["kind"] == kind and r["delta_us"] != ""]
        rows = [r for r in burst_rows if r["kind"] == kind]
        if deltas:
            out[f"{kind}_delay_us"] = float(np.asarray(deltas).mean())
        if rows:
            out[f"{kind}_incomplete_fraction"] = 1.0 - len(deltas) / len(rows)
    pkt_rows = read_csv_rows(Path(out_dir) / "packets.csv")
    uav_pkts = [r for r in pkt_rows if r["kind"] in ("telemetry", "task")]
    if uav_pkts:
        out["delivery_ratio"] = sum(int(r["omega"]) for r in uav_pkts) / len(uav_pkts)
    return out
