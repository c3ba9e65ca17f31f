"""End-to-end transport: a New Reno reliable stream and a fire-and-forget datagram mode.

Segments ride as network packets over whichever link layer the scenario wires
in. The sender never learns about link-level retries directly; loss shows up
as duplicate or missing acknowledgements, exactly like the real thing.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

from uavnetsim.core import Engine
from uavnetsim.metrics import BurstTrack

logger = logging.getLogger(__name__)


@dataclass
class NetPacket:
    """Unit handed to a link layer; callbacks let the owner observe its fate."""

    src: str
    dst: str
    flow: str
    size_bytes: int
    payload: object = None
    on_dropped: Callable | None = None   # (packet, layer, t_us)

    def dropped(self, layer: str, t_us: int) -> None:
        if self.on_dropped is not None:
            self.on_dropped(self, layer, t_us)


class Stack:
    """Per-node demux from flow id to protocol handler."""

    def __init__(self, name: str):
        self.name = name
        self._handlers: dict[str, Callable] = {}

    def bind(self, flow: str, handler: Callable) -> None:
        if flow in self._handlers:
            raise ValueError(f"flow {flow!r} already bound on {self.name}")
        self._handlers[flow] = handler

    def on_packet(self, pkt: NetPacket, t_us: int) -> None:
        handler = self._handlers.get(pkt.flow)
        if handler is None:
            raise KeyError(f"stack {self.name} has no handler for flow {pkt.flow!r}")
        handler(pkt, t_us)


@dataclass(frozen=True)
class TransportParams:
    mss: int = 1460
    header_bytes: int = 40
    init_cwnd_mss: int = 2
    init_ssthresh: int = 65536
    min_rto_us: int = 200_000
    max_rto_us: int = 60_000_000
    send_buffer: int = 262_144
    max_window: int = 262_144

    def __post_init__(self):
        if self.mss <= 0 or self.min_rto_us <= 0:
            raise ValueError("mss and minimum RTO must be positive")


@dataclass
class _Segment:
    lo: int
    hi: int
    track: BurstTrack
    seq_in_burst: int
    first_tx_us: int | None = None
    retransmitted: bool = False


def segment_count(size_bytes: int, mss: int) -> int:
    if size_bytes <= 0:
        raise ValueError("burst size must be positive")
    return -(-size_bytes // mss)


class ReliableReceiver:
    """Reassembles the byte stream and releases burst packets in order."""

    def __init__(self, engine: Engine, flow: str, nic, peer_addr: str, addr: str,
                 params: TransportParams):
        self.engine = engine
        self.flow = flow
        self.nic = nic
        self.addr = addr
        self.peer_addr = peer_addr
        self.params = params
        self.rcv_next = 0
        self._ranges: list[list[int]] = []      # out-of-order [lo, hi) spans
        self._pending: list[_Segment] = []      # release queue, ordered by lo

    def expect(self, seg: _Segment) -> None:
        self._pending.append(seg)

    def on_packet(self, pkt: NetPacket, t_us: int) -> None:
        kind, lo, hi = pkt.payload
        assert kind == "data"
        if hi > self.rcv_next:
            self._merge(max(lo, self.rcv_next), hi)
            self._advance(t_us)
        self._send_ack()

    def _merge(self, lo: int, hi: int) -> None:
        spans = self._ranges
        spans.append([lo, hi])
        spans.sort()
        merged = [spans[0]]
        for s in spans[1:]:
            if s[0] <= merged[-1][1]:
                merged[-1][1] = max(merged[-1][1], s[1])
            else:
                merged.append(s)
        self._ranges = merged

    def _advance(self, t_us: int) -> None:
        if self._ranges and self._ranges[0][0] <= self.rcv_next:
            head = self._ranges.pop(0)
            self.rcv_next = max(self.rcv_next, head[1])
        while self._pending and self._pending[0].hi <= self.rcv_next:
            seg = self._pending.pop(0)
            seg.track.deliver(seg.seq_in_burst, t_us)

    def _send_ack(self) -> None:
        pkt = NetPacket(src=self.addr, dst=self.peer_addr, flow=self.flow,
                        size_bytes=self.params.header_bytes,
                        payload=("ack", self.rcv_next))
        self.nic.send(pkt)


class ReliableSender:
    """New Reno congestion control over the simulated path.

    States: slow start, congestion avoidance, fast recovery. Fast recovery
    follows the partial-ACK rules: each partial ACK retransmits the next hole
    and deflates the window; only an ACK covering the recovery point exits.
    """

    SLOW_START = "slow_start"
    CONG_AVOID = "congestion_avoidance"
    FAST_RECOVERY = "fast_recovery"

    def __init__(self, engine: Engine, flow: str, nic, addr: str, peer_addr: str,
                 params: TransportParams, receiver: ReliableReceiver):
        self.engine = engine
        self.flow = flow
        self.nic = nic
        self.addr = addr
        self.peer_addr = peer_addr
        self.params = params
        self.receiver = receiver
        self.mss = params.mss
        self.cwnd = params.init_cwnd_mss * params.mss
        self.ssthresh = params.init_ssthresh
        self.state = self.SLOW_START
        self.snd_una = 0
        self.snd_nxt = 0
        self.stream_end = 0
        self.dup_acks = 0
        self.recover = 0
        self.srtt_us: float | None = None
        self.rttvar_us: float | None = None
        self.rto_us = params.min_rto_us
        self.backoff = 1
        self._timer = None
        self._segments: list[_Segment] = []     # all cut segments, by stream order
        self._next_seg = 0                      # index of first never-sent segment
        self._acked_segs = 0                    # segments fully below snd_una
        self._last_send_us = 0
        self.events: list[tuple] = []           # (label, cwnd, ssthresh) transition log

    # -- application side ------------------------------------------------

    def send_burst(self, track: BurstTrack, size_bytes: int) -> bool:
        """Queue one burst; False (with queue drops) when the send buffer is full."""
        if size_bytes == 0 or track.n == 0:
            return True
        if self.stream_end - self.snd_una + size_bytes > self.params.send_buffer:
            for i in range(track.n):
                track.drop(i, "queue")
            return False
        self._restart_after_idle()
        offset = self.stream_end
        for i in range(track.n):
            hi = min(offset + self.mss, self.stream_end + size_bytes)
            seg = _Segment(lo=offset, hi=hi, track=track, seq_in_burst=i)
            self._segments.append(seg)
            self.receiver.expect(seg)
            offset = hi
        self.stream_end += size_bytes
        self._try_send()
        return True

    def _restart_after_idle(self) -> None:
        # Window validation: after a quiet period longer than the timeout the
        # ack clock is gone, so restart from the initial window.
        if self.snd_nxt > self.snd_una:
            return
        if self.engine.now - self._last_send_us <= self.rto_us:
            return
        init = self.params.init_cwnd_mss * self.mss
        if self.cwnd > init:
            self.cwnd = init
            if self.cwnd < self.ssthresh:
                self.state = self.SLOW_START
            self.events.append(("idle_restart", self.cwnd, self.ssthresh))

    # -- sending ---------------------------------------------------------

    def _window(self) -> int:
        return min(self.cwnd, self.params.max_window)

    def _try_send(self) -> None:
        while self._next_seg < len(self._segments):
            seg = self._segments[self._next_seg]
            if seg.hi - self.snd_una > self._window():
                break
            self._transmit(seg)
            self.snd_nxt = seg.hi
            self._next_seg += 1
        if self._timer is None and self.snd_nxt > self.snd_una:
            self._arm_timer()

    def _transmit(self, seg: _Segment, retx: bool = False) -> None:
        now = self.engine.now
        self._last_send_us = now
        if seg.first_tx_us is None:
            seg.first_tx_us = now
            seg.track.emit(seg.seq_in_burst, now)
        if retx:
            seg.retransmitted = True
        pkt = NetPacket(src=self.addr, dst=self.peer_addr, flow=self.flow,
                        size_bytes=(seg.hi - seg.lo) + self.params.header_bytes,
                        payload=("data", seg.lo, seg.hi))
        self.nic.send(pkt)

    def _seg_at(self, offset: int) -> _Segment | None:
        # Acks land on segment boundaries, so a binary scan would do; linear from
        # the unacked head is fine at the window sizes in play.
        for seg in self._segments[self._acked_segs:]:
            if seg.lo == offset:
                return seg
            if seg.lo > offset:
                break
        return None

    # -- timer -----------------------------------------------------------

    def _arm_timer(self) -> None:
        if self._timer is not None:
            self._timer.cancel()
        delay = min(self.rto_us * self.backoff, self.params.max_rto_us)
        self._timer = self.engine.schedule_in(delay, self._on_rto,
                                              label=f"{self.flow}.rto")

    def _cancel_timer(self) -> None:
        if self._timer is not None:
            self._timer.cancel()
            self._timer = None

    def _on_rto(self) -> None:
        self._timer = None
        if self.snd_nxt <= self.snd_una:
            return
        flight = self.snd_nxt - self.snd_una
        self.ssthresh = max(flight // 2, 2 * self.mss)
        self.cwnd = self.mss
        self.state = self.SLOW_START
        self.dup_acks = 0
        self.backoff *= 2
        self.events.append(("rto", self.cwnd, self.ssthresh))
        seg = self._seg_at(self.snd_una)
        if seg is not None:
            self._transmit(seg, retx=True)
        self._arm_timer()

    # -- ack path --------------------------------------------------------

    def on_packet(self, pkt: NetPacket, t_us: int) -> None:
        kind, cum = pkt.payload
        assert kind == "ack"
        if cum > self.snd_una:
            self._on_new_ack(cum)
        elif cum == self.snd_una and self.snd_nxt > self.snd_una:
            self._on_dup_ack()
        self._try_send()

    def _on_new_ack(self, cum: int) -> None:
        acked = cum - self.snd_una
        self._sample_rtt(cum)
        if self.state == self.FAST_RECOVERY:
            if cum >= self.recover:
                self.cwnd = self.ssthresh
                self.state = self.CONG_AVOID
                self.dup_acks = 0
                self.events.append(("fr_exit", self.cwnd, self.ssthresh))
            else:
                # Partial ack: the next hole starts exactly at the cumulative point.
                self.snd_una = cum
                self._drop_acked_segs()
                self.cwnd = max(self.mss, self.cwnd - acked + self.mss)
                self.events.append(("fr_partial", self.cwnd, self.ssthresh))
                seg = self._seg_at(cum)
                if seg is not None:
                    self._transmit(seg, retx=True)
                self.backoff = 1
                self._arm_timer()
                return
        elif self.state == self.SLOW_START:
            self.cwnd += self.mss
            if self.cwnd >= self.ssthresh:
                self.state = self.CONG_AVOID
            self.events.append(("ack_ss", self.cwnd, self.ssthresh))
        else:
            self.cwnd += max(1, self.mss * self.mss // self.cwnd)
            self.events.append(("ack_ca", self.cwnd, self.ssthresh))
        self.snd_una = cum
        self._drop_acked_segs()
        self.dup_acks = 0
        self.backoff = 1
        if self.snd_nxt > self.snd_una:
            self._arm_timer()
        else:
            self._cancel_timer()

    def _on_dup_ack(self) -> None:
        if self.state == self.FAST_RECOVERY:
            self.cwnd += self.mss
            self.events.append(("fr_dup", self.cwnd, self.ssthresh))
            return
        self.dup_acks += 1
        if self.dup_acks == 3:
            flight = self.snd_nxt - self.snd_una
            self.ssthresh = max(flight // 2, 2 * self.mss)
            self.recover = self.snd_nxt
            self.cwnd = self.ssthresh + 3 * self.mss
            self.state = self.FAST_RECOVERY
            self.events.append(("fr_enter", self.cwnd, self.ssthresh))
            seg = self._seg_at(self.snd_una)
            if seg is not None:
                self._transmit(seg, retx=True)
            self._arm_timer()

    def _drop_acked_segs(self) -> None:
        while (self._acked_segs < len(self._segments)
               and self._segments[self._acked_segs].hi <= self.snd_una):
            self._acked_segs += 1

    def _sample_rtt(self, cum: int) -> None:
        # Karn's rule: only segments acked on their first transmission count.
        sample = None
        for seg in self._segments[self._acked_segs:]:
            if seg.hi > cum:
                break
            if seg.first_tx_us is not None and not seg.retransmitted:
                sample = self.engine.now - seg.first_tx_us
        if sample is None:
            return
        if self.srtt_us is None:
            self.srtt_us = float(sample)
            self.rttvar_us = sample / 2.0
        else:
            self.rttvar_us = 0.75 * self.rttvar_us + 0.25 * abs(self.srtt_us - sample)
            self.srtt_us = 0.875 * self.srtt_us + 0.125 * sample
        raw = self.srtt_us + 4.0 * self.rttvar_us
        self.rto_us = int(min(max(raw, self.params.min_rto_us), self.params.max_rto_us))


def make_reliable_pair(engine: Engine, flow: str, sender_nic, receiver_nic,
                       sender_stack: Stack, receiver_stack: Stack,
                       sender_addr: str, receiver_addr: str,
                       params: TransportParams) -> ReliableSender:
    receiver = ReliableReceiver(engine, flow, receiver_nic, peer_addr=sender_addr,
                                addr=receiver_addr, params=params)
    sender = ReliableSender(engine, flow, sender_nic, addr=sender_addr,
                            peer_addr=receiver_addr, params=params, receiver=receiver)
    sender_stack.bind(flow, sender.on_packet)
    receiver_stack.bind(flow, receiver.on_packet)
    return sender


class DatagramSocket:
    """Unreliable mode: one network packet per burst slot, no retransmission."""

    def __init__(self, engine: Engine, flow: str, nic, addr: str, peer_addr: str,
                 mss: int = 1460):
        self.engine = engine
        self.flow = flow
        self.nic = nic
        self.addr = addr
        self.peer_addr = peer_addr
        self.mss = mss

    def send_burst(self, track: BurstTrack, size_bytes: int, payload: object = None) -> None:
        left = size_bytes
        for i in range(track.n):
            chunk = min(self.mss, left)
            left -= chunk
            track.emit(i, self.engine.now)
            pkt = NetPacket(src=self.addr, dst=self.peer_addr, flow=self.flow,
                            size_bytes=chunk, payload=(track, i, payload),
                            on_dropped=_datagram_drop)
            self.nic.send(pkt)


def _datagram_drop(pkt: NetPacket, layer: str, t_us: int) -> None:
    track, i, _ = pkt.payload
    track.drop(i, layer)


class DatagramSink:
    """Receiver side of datagram flows; records delivery and forwards payloads."""

    def __init__(self, on_payload: Callable | None = None):
        self.on_payload = on_payload

    def on_packet(self, pkt: NetPacket, t_us: int) -> None:
        track, i, payload = pkt.payload
        track.deliver(i, t_us)
        if self.on_payload is not None:
            self.on_payload(payload, t_us)
