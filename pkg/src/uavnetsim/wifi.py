"""802.11a distributed coordination function over a single collision domain.

Timing follows the OFDM PHY: 9 us slots, SIFS 16 us, DIFS 34 us, 20 us
preamble plus 4 us symbols. Acknowledgements ride at the lowest mandatory
rate inside SIFS, which DIFS spacing protects structurally, so they never
contend. Backoff freezes while the air is busy and the same-slot rule lets
two expiring counters collide rather than serialize.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

from uavnetsim.channel import LinkState, packet_error_prob
from uavnetsim.core import Engine
from uavnetsim.transport import NetPacket

PREAMBLE_US = 20
SYMBOL_US = 4
SERVICE_BITS = 16
TAIL_BITS = 6


@dataclass(frozen=True)
class WifiParams:
    slot_us: int = 9
    sifs_us: int = 16
    difs_us: int = 34
    cw_min: int = 15
    cw_max: int = 1023
    retry_limit: int = 7
    queue_frames: int = 400
    softness_db: float = 1.0

    def __post_init__(self):
        if self.difs_us <= self.sifs_us:
            raise ValueError("DIFS must exceed SIFS")
        if self.cw_min < 1 or self.cw_max < self.cw_min:
            raise ValueError("bad contention window bounds")


def tx_duration_us(payload_bytes: int, bits_per_symbol: int) -> int:
    """Airtime of one frame: preamble plus whole OFDM symbols for service+payload+tail."""
    if payload_bytes < 0 or bits_per_symbol <= 0:
        raise ValueError("payload must be non-negative and symbol size positive")
    bits = SERVICE_BITS + 8 * payload_bytes + TAIL_BITS
    return PREAMBLE_US + SYMBOL_US * math.ceil(bits / bits_per_symbol)


def contention_window(cw_min: int, cw_max: int, failures: int) -> int:
    """Window after k consecutive failures, doubling from cw_min up to cw_max."""
    return min(cw_max, (cw_min + 1) * (2 ** failures) - 1)


class _Tx:
    __slots__ = ("src", "dst", "pkt", "ls", "start", "end", "overlapped", "is_ack")

    def __init__(self, src, dst, pkt, ls, start, end, is_ack=False):
        self.src = src
        self.dst = dst
        self.pkt = pkt
        self.ls = ls
        self.start = start
        self.end = end
        self.overlapped = False
        self.is_ack = is_ack


class Medium:
    """Shared air: every station hears every transmission, no capture effect."""

    def __init__(self, engine: Engine, params: WifiParams, link_fn):
        self.engine = engine
        self.params = params
        self.link_fn = link_fn            # (src_name, dst_name) -> LinkState
        self.stations: list[DcfStation] = []
        self.active: list[_Tx] = []
        self._err_rng = engine.rng("wifi.channel")
        self.successes = 0
        self.collisions = 0
        self.channel_failures = 0

    def register(self, station: "DcfStation") -> None:
        self.stations.append(station)

    @property
    def idle(self) -> bool:
        return not self.active

    def begin(self, tx: _Tx) -> None:
        if self.active:
            tx.overlapped = True
            for other in self.active:
                other.overlapped = True
        was_idle = not self.active
        self.active.append(tx)
        if was_idle:
            t = self.engine.now
            for st in self.stations:
                st.on_medium_busy(t)

    def end(self, tx: _Tx) -> None:
        self.active.remove(tx)
        if not self.active:
            t = self.engine.now
            for st in self.stations:
                st.on_medium_idle(t)

    def decode_ok(self, tx: _Tx) -> bool:
        if tx.overlapped:
            self.collisions += 1
            return False
        per = packet_error_prob(tx.ls, max(tx.pkt.size_bytes, 1), self.params.softness_db)
        if per > 0.0 and (per >= 1.0 or self._err_rng.random() < per):
            self.channel_failures += 1
            return False
        self.successes += 1
        return True


class DcfStation:
    """One DCF transmitter/receiver. The access point is just a station with a bridge."""

    IDLE, CONTEND, TX = range(3)

    def __init__(self, name: str, engine: Engine, medium: Medium, params: WifiParams,
                 table, deliver_up=None):
        self.name = name
        self.engine = engine
        self.medium = medium
        self.params = params
        self.table = table                # RateTable for duration lookup
        self.deliver_up = deliver_up      # callable(pkt, t_us) on decoded data
        self.state = self.IDLE
        self.queue: deque = deque()
        self.frame = None                 # (pkt, dst_station)
        self.retries = 0
        self.slots_left = 0
        self.anchor = 0
        self._pending = None
        self._rng = engine.rng(f"wifi.backoff.{name}")
        self.delivered_bytes = 0
        self.mac_drops = 0
        self.queue_drops = 0
        self.access_delays_us: list[int] = []
        self._head_since = 0
        medium.register(self)

    # -- queueing --------------------------------------------------------

    def enqueue(self, pkt: NetPacket, dst: "DcfStation") -> None:
        if len(self.queue) >= self.params.queue_frames:
            self.queue_drops += 1
            pkt.dropped("queue", self.engine.now)
            return
        self.queue.append((pkt, dst))
        if self.state == self.IDLE:
            self._next_frame()

    def _next_frame(self) -> None:
        if not self.queue:
            self.state = self.IDLE
            self.frame = None
            return
        self.frame = self.queue.popleft()
        self.retries = 0
        self._head_since = self.engine.now
        self._start_contention(contention_window(self.params.cw_min, self.params.cw_max, 0))

    def _start_contention(self, cw: int) -> None:
        self.state = self.CONTEND
        self.slots_left = int(self._rng.integers(0, cw + 1))
        self._pending = None
        if self.medium.idle:
            self._set_anchor(self.engine.now + self.params.difs_us)

    def _set_anchor(self, anchor: int) -> None:
        self.anchor = anchor
        fire = anchor + self.slots_left * self.params.slot_us
        self._pending = self.engine.schedule(fire, self._backoff_done, label="wifi.backoff")

    # -- medium callbacks ------------------------------------------------

    def on_medium_busy(self, t: int) -> None:
        if self.state != self.CONTEND or self._pending is None:
            return
        if self._pending.fire_at <= t:
            # Same-slot rule: this counter already expired at t, the frame goes
            # out regardless and collides with whatever just started.
            return
        if t > self.anchor:
            consumed = (t - self.anchor) // self.params.slot_us
            self.slots_left -= min(consumed, self.slots_left)
        self._pending.cancel()
        self._pending = None

    def on_medium_idle(self, t: int) -> None:
        if self.state == self.CONTEND and self._pending is None:
            self._set_anchor(t + self.params.difs_us)

    # -- transmission ----------------------------------------------------

    def _backoff_done(self) -> None:
        self._pending = None
        pkt, dst = self.frame
        now = self.engine.now
        ls = self.medium.link_fn(self.name, dst.name)
        mcs = ls.mcs if ls.connected else 0
        dur = tx_duration_us(pkt.size_bytes, self.table.bits_per_symbol[mcs])
        tx = _Tx(self, dst, pkt, ls, now, now + dur)
        self.state = self.TX
        self.medium.begin(tx)
        self.engine.schedule(tx.end, self._tx_end, (tx,), label="wifi.txend")

    def _tx_end(self, tx: _Tx) -> None:
        self.medium.end(tx)
        p = self.params
        ack_dur = tx_duration_us(0, self.table.bits_per_symbol[0])
        if self.medium.decode_ok(tx):
            tx.dst.receive_data(tx)
            ack = _Tx(tx.dst, self, None, tx.ls, 0, 0, is_ack=True)
            self.engine.schedule_in(p.sifs_us, self._ack_start, (ack, ack_dur),
                                    label="wifi.ackstart")
        else:
            timeout = p.sifs_us + ack_dur + p.slot_us
            self.engine.schedule_in(timeout, self._retry, label="wifi.retry")

    def _ack_start(self, ack: _Tx, ack_dur: int) -> None:
        ack.start = self.engine.now
        ack.end = ack.start + ack_dur
        self.medium.begin(ack)
        self.engine.schedule(ack.end, self._ack_end, (ack,), label="wifi.ackend")

    def _ack_end(self, ack: _Tx) -> None:
        self.medium.end(ack)
        pkt, _ = self.frame
        self.delivered_bytes += pkt.size_bytes
        self.access_delays_us.append(self.engine.now - self._head_since)
        self._next_frame()

    def _retry(self) -> None:
        self.retries += 1
        if self.retries > self.params.retry_limit:
            pkt, _ = self.frame
            self.mac_drops += 1
            pkt.dropped("mac", self.engine.now)
            self._next_frame()
            return
        cw = contention_window(self.params.cw_min, self.params.cw_max, self.retries)
        self._start_contention(cw)

    def receive_data(self, tx: _Tx) -> None:
        if self.deliver_up is not None:
            self.deliver_up(tx.pkt, self.engine.now)


class WifiNic:
    """NIC adapter: resolves the destination station and feeds the local DCF queue."""

    def __init__(self, station: DcfStation, route):
        self.station = station
        self.route = route                # callable(dst_addr) -> DcfStation

    def send(self, pkt: NetPacket) -> None:
        self.station.enqueue(pkt, self.route(pkt.dst))
