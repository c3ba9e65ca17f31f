"""Traffic sources and the ground-side state estimator.

Telemetry carries a full vehicle state snapshot taken at the emission instant;
the estimator's error at query time t is therefore the distance the vehicle
has moved since the snapshot behind the latest delivered update.
"""

from __future__ import annotations

from dataclasses import dataclass

from uavnetsim.core import US_PER_S, Engine
from uavnetsim.metrics import Collector
from uavnetsim.mobility import UavState, uav_state
from uavnetsim.transport import DatagramSocket, ReliableSender, segment_count


class TelemetrySource:
    """Periodic state updates: burst i leaves at i/freq with a fresh snapshot."""

    def __init__(self, engine: Engine, collector: Collector, traj, freq_hz: float,
                 payload_bytes: int, sender, estimator: "Estimator | None",
                 battery_drain_per_s: float = 0.001):
        if freq_hz <= 0:
            raise ValueError("telemetry frequency must be positive")
        self.engine = engine
        self.collector = collector
        self.traj = traj
        self.freq = freq_hz
        self.payload_bytes = payload_bytes
        self.sender = sender
        self.estimator = estimator
        self.drain = battery_drain_per_s
        self._i = 0
        self._schedule_next()

    def _schedule_next(self) -> None:
        self._i += 1
        t = int(self._i * US_PER_S / self.freq)
        self.engine.schedule(t, self._emit, label="telemetry.emit")

    def _emit(self) -> None:
        now = self.engine.now
        state = uav_state(self.traj, now, self.drain)
        n = segment_count(self.payload_bytes, getattr(self.sender, "mss", self.payload_bytes))
        track = self.collector.new_burst("telemetry", now, self.payload_bytes, n)
        if isinstance(self.sender, DatagramSocket):
            self.sender.send_burst(track, self.payload_bytes, payload=state)
        else:
            est = self.estimator
            if est is not None:
                track.on_complete = lambda tr, t, s=state: est.ingest(s, t)
            self.sender.send_burst(track, self.payload_bytes)
        self._schedule_next()


class TaskSource:
    """Fixed-size offload bursts on a fixed period, always over the reliable stream."""

    def __init__(self, engine: Engine, collector: Collector, size_bytes: int,
                 period_us: int, sender: ReliableSender):
        if size_bytes <= 0 or period_us <= 0:
            raise ValueError("task size and period must be positive")
        self.engine = engine
        self.collector = collector
        self.size = size_bytes
        self.period = period_us
        self.sender = sender
        self._i = 0
        self._schedule_next()

    def _schedule_next(self) -> None:
        self._i += 1
        self.engine.schedule(self._i * self.period, self._emit, label="task.emit")

    def _emit(self) -> None:
        track = self.collector.new_burst("task", self.engine.now, self.size,
                                         segment_count(self.size, self.sender.mss))
        self.sender.send_burst(track, self.size)
        self._schedule_next()


class ExogenousSource:
    """Background node: constant-bit-rate datagrams with a random phase offset."""

    def __init__(self, engine: Engine, collector: Collector, socket: DatagramSocket,
                 packet_bytes: int, rate_bps: float, phase_rng):
        if rate_bps <= 0 or packet_bytes <= 0:
            raise ValueError("rate and packet size must be positive")
        self.engine = engine
        self.collector = collector
        self.socket = socket
        self.packet_bytes = packet_bytes
        self.interval_us = packet_bytes * 8 * US_PER_S / rate_bps
        self.phase_us = int(phase_rng.random() * self.interval_us)
        self._k = 0
        self._schedule_next()

    def _schedule_next(self) -> None:
        t = self.phase_us + int(round(self._k * self.interval_us))
        self._k += 1
        self.engine.schedule(t, self._emit, label="exogenous.emit")

    def _emit(self) -> None:
        track = self.collector.new_burst("exogenous", self.engine.now, self.packet_bytes, 1)
        self.socket.send_burst(track, self.packet_bytes)
        self._schedule_next()


# -- estimation ---------------------------------------------------------

@dataclass
class Estimator:
    """Ground-side state tracker fed by delivered telemetry.

    zero_order_hold freezes the last snapshot; constant_velocity extrapolates
    the snapshot's velocity from the reception instant.
    """

    mode: str = "zero_order_hold"
    state: UavState | None = None
    rx_us: int | None = None

    def __post_init__(self):
        if self.mode not in ("zero_order_hold", "constant_velocity"):
            raise ValueError(f"unknown estimator mode {self.mode!r}")

    def ingest(self, state: UavState, rx_us: int) -> None:
        # Late datagrams can arrive out of order; never step back in snapshot time.
        if self.state is not None and state.t_us < self.state.t_us:
            return
        self.state = state
        self.rx_us = rx_us

    def estimate(self, t_us: int):
        if self.state is None:
            return None
        if self.mode == "zero_order_hold":
            return self.state.pos
        dt = (t_us - self.rx_us) / US_PER_S
        p, v = self.state.pos, self.state.vel
        return (p[0] + v[0] * dt, p[1] + v[1] * dt, p[2] + v[2] * dt)


class ErrorSampler:
    """Samples truth-vs-estimate distance on a fixed grid, offset half a step.

    The half-step offset keeps samples clear of the emission instants, so the
    sampled mean of the hold error matches the continuous-time average.
    """

    def __init__(self, engine: Engine, collector: Collector, traj,
                 estimator: Estimator, grid_us: int = 10_000, planar: bool = False):
        if grid_us <= 0:
            raise ValueError("sampling grid must be positive")
        self.engine = engine
        self.collector = collector
        self.traj = traj
        self.estimator = estimator
        self.grid = grid_us
        self.planar = planar
        self._k = 0
        self._schedule_next()

    def _schedule_next(self) -> None:
        t = self.grid // 2 + self._k * self.grid
        self._k += 1
        self.engine.schedule(t, self._sample, label="error.sample")

    def _sample(self) -> None:
        est = self.estimator.estimate(self.engine.now)
        if est is not None:
            truth, _ = self.traj.position_at(self.engine.now)
            if self.planar:
                truth = (truth[0], truth[1], 0.0)
                est = (est[0], est[1], 0.0)
            self.collector.add_error_sample(self.engine.now, truth, est)
        self._schedule_next()
