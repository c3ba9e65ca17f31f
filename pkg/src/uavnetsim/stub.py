"""Null link layer: fixed delay, optional jitter, Bernoulli loss. Isolates everything above the radio."""

from __future__ import annotations

from dataclasses import dataclass

from uavnetsim.core import Engine
from uavnetsim.transport import NetPacket, Stack


@dataclass(frozen=True)
class StubParams:
    delay_us: int = 0
    jitter_us: int = 0
    loss_prob: float = 0.0

    def __post_init__(self):
        if self.delay_us < 0 or self.jitter_us < 0:
            raise ValueError("delay and jitter must be non-negative")
        if not 0.0 <= self.loss_prob <= 1.0:
            raise ValueError("loss probability must lie in [0, 1]")


class StubLink:
    """One direction of the null channel; acts as a NIC for the sending stack."""

    def __init__(self, engine: Engine, peer_stack: Stack, params: StubParams,
                 rng_label: str = "stub"):
        self.engine = engine
        self.peer = peer_stack
        self.params = params
        self._rng = engine.rng(rng_label)

    def send(self, pkt: NetPacket) -> None:
        p = self.params
        if p.loss_prob > 0.0 and self._rng.random() < p.loss_prob:
            pkt.dropped("mac", self.engine.now)
            return
        delay = p.delay_us
        if p.jitter_us > 0:
            delay += int(self._rng.integers(-p.jitter_us, p.jitter_us + 1))
        delay = max(0, delay)
        self.engine.schedule_in(delay, self.peer.on_packet, (pkt, self.engine.now + delay),
                                label="stub.deliver")
