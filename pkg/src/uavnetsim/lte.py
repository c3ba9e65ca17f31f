"""Cellular uplink/downlink with a 1 ms scheduling loop.

The cell grants uplink resource blocks round-robin over users with known
backlog (scheduling-request driven, buffer reports piggybacked on decoded
transport blocks) and picks one downlink winner per interval by
proportional-fair metric. Reliability sits in a byte-stream reassembly
layer: failed blocks retransmit out of band after a fixed round trip, and
after too many tries their byte ranges are declared dead so in-order
release can advance past them.

Link adaptation uses the channel-quality index reported on a slow timer,
so the modulation choice lags the actual signal level; the decode error
draw happens against the current signal, which is where staleness hurts.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

from uavnetsim.channel import RateTable, packet_error_prob, with_mcs
from uavnetsim.core import Engine
from uavnetsim.transport import NetPacket


@dataclass(frozen=True)
class LteParams:
    tti_us: int = 1000
    n_prb_ul: int = 100
    n_prb_dl: int = 100
    re_per_prb: int = 168            # resource elements per PRB per TTI
    overhead_factor: float = 0.75    # share of elements left for data
    sr_period_ttis: int = 5
    sr_grant_lag_ttis: int = 1
    grant_to_tx_ttis: int = 4
    ul_decode_lag_ttis: int = 3
    dl_decode_lag_ttis: int = 2
    cqi_period_ttis: int = 10
    arq_rtt_ttis: int = 8
    max_arq_retx: int = 4
    rlc_buffer_bytes: int = 1_048_576
    pf_alpha: float = 0.01
    softness_db: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.overhead_factor <= 1.0:
            raise ValueError("overhead factor must be in (0, 1]")
        if self.max_arq_retx < 0 or self.n_prb_ul < 1 or self.n_prb_dl < 1:
            raise ValueError("bad cell dimensioning")


def tbs_bits(efficiency: float, n_prb: int, params: LteParams = LteParams()) -> int:
    """Transport block size in bits for one TTI at the given spectral efficiency."""
    if n_prb < 0:
        raise ValueError("negative resource blocks")
    return math.floor(efficiency * params.re_per_prb * n_prb * params.overhead_factor)


def tbs_bytes(efficiency: float, n_prb: int, params: LteParams = LteParams()) -> int:
    return tbs_bits(efficiency, n_prb, params) // 8


def tbs_for_cqi(cqi: int, n_prb: int, table: RateTable,
                params: LteParams = LteParams()) -> int:
    """Block size in bits for a 1-based quality index; rejects out-of-range inputs."""
    if not 1 <= cqi <= len(table.efficiencies):
        raise ValueError(f"quality index {cqi} outside 1..{len(table.efficiencies)}")
    if n_prb < 1:
        raise ValueError("allocation must cover at least one resource block")
    return tbs_bits(table.efficiencies[cqi - 1], n_prb, params)


class RlcStream:
    """One direction of a user's byte stream with packet boundaries.

    The sender appends packets and pulls contiguous fresh bytes into
    transport blocks; the receiver merges arrived ranges and releases an
    in-order prefix, delivering each packet when its last byte clears.
    Dead ranges count as arrived for ordering but their packets drop.
    """

    def __init__(self, capacity_bytes: int):
        self.capacity = capacity_bytes
        self.head = 0                    # total bytes enqueued
        self.pulled = 0                  # fresh bytes handed to blocks
        self.released = 0                # in-order release point at receiver
        self.packets: deque[list] = deque()   # [lo, hi, pkt, dead]
        self._arrived: list[list[int]] = []   # merged [lo, hi) ranges past `released`

    def occupancy(self) -> int:
        return self.head - self.released

    def backlog(self) -> int:
        return self.head - self.pulled

    def enqueue(self, pkt: NetPacket, t_us: int) -> bool:
        if self.occupancy() + pkt.size_bytes > self.capacity:
            pkt.dropped("queue", t_us)
            return False
        self.packets.append([self.head, self.head + pkt.size_bytes, pkt, False])
        self.head += pkt.size_bytes
        return True

    def pull(self, max_bytes: int) -> tuple[int, int]:
        """Reserve up to max_bytes of fresh stream for one block; returns [lo, hi)."""
        take = min(max_bytes, self.backlog())
        lo = self.pulled
        self.pulled += take
        return lo, lo + take

    def _merge(self, lo: int, hi: int) -> None:
        if hi <= self.released:
            return
        lo = max(lo, self.released)
        ranges = self._arrived
        ranges.append([lo, hi])
        ranges.sort()
        merged = [ranges[0]]
        for r in ranges[1:]:
            if r[0] <= merged[-1][1]:
                merged[-1][1] = max(merged[-1][1], r[1])
            else:
                merged.append(r)
        self._arrived = merged

    def arrive(self, lo: int, hi: int, t_us: int, deliver) -> None:
        """Receiver side: range decoded; deliver(pkt, t_us) for each released packet."""
        self._merge(lo, hi)
        self._release(t_us, deliver)

    def mark_dead(self, lo: int, hi: int, t_us: int, deliver) -> None:
        """Range abandoned after exhausted retries; overlapping packets drop."""
        for entry in self.packets:
            if entry[3]:
                continue
            if entry[0] < hi and lo < entry[1]:
                entry[3] = True
                entry[2].dropped("rlc", t_us)
        self._merge(lo, hi)
        self._release(t_us, deliver)

    def _release(self, t_us: int, deliver) -> None:
        while self._arrived and self._arrived[0][0] <= self.released:
            self.released = max(self.released, self._arrived.pop(0)[1])
        while self.packets and self.packets[0][1] <= self.released:
            lo, hi, pkt, dead = self.packets.popleft()
            if not dead:
                deliver(pkt, t_us)


class LteUe:
    """Per-user state held by the cell."""

    def __init__(self, name: str, index: int, params: LteParams, dl_deliver=None):
        self.name = name
        self.index = index
        self.dl_deliver = dl_deliver
        self.ul = RlcStream(params.rlc_buffer_bytes)
        self.dl = RlcStream(params.rlc_buffer_bytes)
        self.cqi_phase = index % params.cqi_period_ttis
        self.sr_phase = index % params.sr_period_ttis if params.sr_period_ttis else 0
        self.sr_armed = False
        # None until the first quality report, or while out of range. Downlink
        # and uplink adapt separately: the two directions differ in tx power.
        self.last_mcs_dl: int | None = None
        self.last_mcs_ul: int | None = None
        self.known_backlog = 0            # cell's view of uplink bytes, from reports
        self.pf_avg = 1.0                 # smoothed served bytes per TTI


@dataclass(frozen=True)
class Grant:
    ue_index: int
    prb_start: int
    n_prb: int
    mcs: int


class LteCell:
    """Base station plus attached users, driven by one event per TTI."""

    def __init__(self, engine: Engine, params: LteParams, table: RateTable,
                 link_fn, deliver_up=None):
        self.engine = engine
        self.params = params
        self.table = table
        self.link_fn = link_fn            # (ue_name, "ul"|"dl") -> LinkState
        self.deliver_up = deliver_up      # callable(pkt, t_us) for decoded uplink packets
        self.ues: list[LteUe] = []
        self._err_rng = engine.rng("lte.channel")
        self._rr_offset = 0
        self.ul_grant_log: list[tuple[int, tuple[Grant, ...]]] | None = None
        self.dl_winner_log: list[tuple[int, int]] | None = None
        self.tb_attempts = 0
        self.tb_failures = 0
        self.rlc_dead_ranges = 0
        engine.schedule(0, self._tti, label="lte.tti")

    def add_ue(self, name: str, dl_deliver=None) -> LteUe:
        ue = LteUe(name, len(self.ues), self.params, dl_deliver)
        self.ues.append(ue)
        return ue

    # -- traffic entry ---------------------------------------------------

    def ul_enqueue(self, ue: LteUe, pkt: NetPacket) -> None:
        had_backlog = ue.ul.backlog() > 0
        if ue.ul.enqueue(pkt, self.engine.now) and not had_backlog:
            ue.sr_armed = True

    def dl_enqueue(self, ue: LteUe, pkt: NetPacket) -> None:
        ue.dl.enqueue(pkt, self.engine.now)

    # -- TTI loop --------------------------------------------------------

    def _tti(self) -> None:
        p = self.params
        tti = self.engine.now // p.tti_us
        for ue in self.ues:
            if tti % p.cqi_period_ttis == ue.cqi_phase:
                dl = self.link_fn(ue.name, "dl")
                ul = self.link_fn(ue.name, "ul")
                ue.last_mcs_dl = dl.mcs if dl.connected else None
                ue.last_mcs_ul = ul.mcs if ul.connected else None
            if ue.sr_armed and (p.sr_period_ttis == 0
                                or tti % p.sr_period_ttis == ue.sr_phase):
                ue.sr_armed = False
                self.engine.schedule_in(p.sr_grant_lag_ttis * p.tti_us,
                                        self._sr_received, (ue,), label="lte.sr")
        self._grant_uplink(tti)
        self._serve_downlink(tti)
        self.engine.schedule_in(p.tti_us, self._tti, label="lte.tti")

    def _sr_received(self, ue: LteUe) -> None:
        ue.known_backlog = max(ue.known_backlog, 1)

    def _grant_uplink(self, tti: int) -> None:
        p = self.params
        cands = [ue for ue in self.ues
                 if ue.known_backlog > 0 and ue.last_mcs_ul is not None]
        if not cands:
            return
        n = len(cands)
        base, rem = divmod(p.n_prb_ul, n)
        offset = self._rr_offset % n
        self._rr_offset += 1
        grants = []
        start = 0
        for i, ue in enumerate(cands):
            extra = 1 if (i - offset) % n < rem else 0
            n_prb = base + extra
            if n_prb == 0:
                continue
            grants.append(Grant(ue.index, start, n_prb, ue.last_mcs_ul))
            start += n_prb
            self.engine.schedule_in(p.grant_to_tx_ttis * p.tti_us,
                                    self._ul_tx, (ue, n_prb, ue.last_mcs_ul),
                                    label="lte.ultx")
        if self.ul_grant_log is not None:
            self.ul_grant_log.append((tti, tuple(grants)))

    def _ul_tx(self, ue: LteUe, n_prb: int, mcs: int) -> None:
        p = self.params
        size = tbs_bytes(self.table.efficiencies[mcs], n_prb, p)
        lo, hi = ue.ul.pull(size)
        bsr = ue.ul.backlog()
        self.engine.schedule_in(p.ul_decode_lag_ttis * p.tti_us,
                                self._ul_decode, (ue, lo, hi, mcs, size, bsr, 0),
                                label="lte.uldec")

    def _ul_decode(self, ue: LteUe, lo: int, hi: int, mcs: int, size: int,
                   bsr: int, tries: int) -> None:
        if lo == hi:
            # Padding-only block: nothing to lose, report still counts.
            ue.known_backlog = bsr
            return
        if self._decode_ok(ue, mcs, size, "ul"):
            ue.known_backlog = bsr
            ue.ul.arrive(lo, hi, self.engine.now, self._deliver_ul)
        elif tries < self.params.max_arq_retx:
            self.engine.schedule_in(self.params.arq_rtt_ttis * self.params.tti_us,
                                    self._ul_decode, (ue, lo, hi, mcs, size, bsr, tries + 1),
                                    label="lte.arq")
        else:
            self.rlc_dead_ranges += 1
            ue.ul.mark_dead(lo, hi, self.engine.now, self._deliver_ul)

    def _deliver_ul(self, pkt: NetPacket, t_us: int) -> None:
        if self.deliver_up is not None:
            self.deliver_up(pkt, t_us)

    def _serve_downlink(self, tti: int) -> None:
        p = self.params
        cands = [ue for ue in self.ues
                 if ue.dl.backlog() > 0 and ue.last_mcs_dl is not None]
        if not cands:
            return
        best, best_metric = None, -1.0
        rates = {}
        for ue in cands:
            inst = tbs_bytes(self.table.efficiencies[ue.last_mcs_dl], p.n_prb_dl, p)
            rates[ue.index] = inst
            metric = inst / ue.pf_avg
            if metric > best_metric:
                best, best_metric = ue, metric
        for ue in cands:
            served = rates[ue.index] if ue is best else 0
            ue.pf_avg = (1.0 - p.pf_alpha) * ue.pf_avg + p.pf_alpha * served
        if self.dl_winner_log is not None:
            self.dl_winner_log.append((tti, best.index))
        size = rates[best.index]
        lo, hi = best.dl.pull(size)
        self.engine.schedule_in(p.dl_decode_lag_ttis * p.tti_us,
                                self._dl_decode, (best, lo, hi, best.last_mcs_dl, size, 0),
                                label="lte.dldec")

    def _dl_decode(self, ue: LteUe, lo: int, hi: int, mcs: int, size: int, tries: int) -> None:
        if lo == hi:
            return
        deliver = ue.dl_deliver or (lambda pkt, t: None)
        if self._decode_ok(ue, mcs, size, "dl"):
            ue.dl.arrive(lo, hi, self.engine.now, deliver)
        elif tries < self.params.max_arq_retx:
            self.engine.schedule_in(self.params.arq_rtt_ttis * self.params.tti_us,
                                    self._dl_decode, (ue, lo, hi, mcs, size, tries + 1),
                                    label="lte.arq")
        else:
            self.rlc_dead_ranges += 1
            ue.dl.mark_dead(lo, hi, self.engine.now, deliver)

    def _decode_ok(self, ue: LteUe, mcs: int, size: int, direction: str) -> bool:
        self.tb_attempts += 1
        ls = with_mcs(self.link_fn(ue.name, direction), mcs)
        per = packet_error_prob(ls, max(size, 1), self.params.softness_db)
        if per > 0.0 and (per >= 1.0 or self._err_rng.random() < per):
            self.tb_failures += 1
            return False
        return True


class LteUlNic:
    """Uplink NIC on a user: packets enter that user's stream at the cell."""

    def __init__(self, cell: LteCell, ue: LteUe):
        self.cell = cell
        self.ue = ue

    def send(self, pkt: NetPacket) -> None:
        self.cell.ul_enqueue(self.ue, pkt)


class LteDlNic:
    """Downlink NIC at the wired side: routes by destination address."""

    def __init__(self, cell: LteCell, route):
        self.cell = cell
        self.route = route                # callable(dst_addr) -> LteUe

    def send(self, pkt: NetPacket) -> None:
        self.cell.dl_enqueue(self.route(pkt.dst), pkt)
