"""Deterministic event engine: integer-microsecond clock, FIFO tie-break, named RNG substreams."""

from __future__ import annotations

import hashlib
import heapq
from typing import Any, Callable

import numpy as np

# Simulation time is an integer count of microseconds from run start.
US_PER_MS = 1_000
US_PER_S = 1_000_000


def s_to_us(seconds: float) -> int:
    return int(round(seconds * US_PER_S))


def ms_to_us(millis: float) -> int:
    return int(round(millis * US_PER_MS))


class SimTimeError(Exception):
    """Raised when an event is scheduled in the past or the clock would move backwards."""


class EventHandle:
    """Cancellation token for a scheduled event."""

    __slots__ = ("_entry",)

    def __init__(self, entry: list):
        self._entry = entry

    def cancel(self) -> None:
        self._entry[4] = False

    @property
    def active(self) -> bool:
        return self._entry[4]

    @property
    def fire_at(self) -> int:
        return self._entry[0]


def _label_entropy(label: str) -> int:
    # Stable across platforms and runs; hash() is salted per process so it cannot be used here.
    return int.from_bytes(hashlib.sha256(label.encode()).digest()[:8], "little")


class Engine:
    """Event queue with a total (fire_at, insertion sequence) dispatch order.

    Events scheduled at the same microsecond run in insertion order, so a
    double run of the same scenario replays byte-identical traces.
    """

    def __init__(self, seed: int = 0):
        self.seed = int(seed)
        self.now: int = 0
        self.events_dispatched: int = 0
        self.trace: list[tuple[int, int, str]] | None = None
        self._heap: list[list] = []
        self._seq: int = 0
        self._streams: dict[str, np.random.Generator] = {}

    # -- scheduling ------------------------------------------------------

    def schedule(self, at: int, callback: Callable, args: tuple = (), label: str = "") -> EventHandle:
        if at < self.now:
            raise SimTimeError(f"schedule at t={at} before current t={self.now}")
        if not callable(callback):
            raise TypeError(f"event callback for {label!r} is not callable")
        entry = [at, self._seq, callback, args, True, label]
        self._seq += 1
        heapq.heappush(self._heap, entry)
        return EventHandle(entry)

    def schedule_in(self, delay: int, callback: Callable, args: tuple = (), label: str = "") -> EventHandle:
        return self.schedule(self.now + delay, callback, args, label)

    def run_until(self, end: int) -> None:
        """Dispatch every event with fire_at <= end, then set the clock to end."""
        if end < self.now:
            raise SimTimeError(f"run_until({end}) behind current t={self.now}")
        heap = self._heap
        pop = heapq.heappop
        trace = self.trace
        while heap and heap[0][0] <= end:
            entry = pop(heap)
            if not entry[4]:
                continue
            self.now = entry[0]
            self.events_dispatched += 1
            if trace is not None:
                trace.append((entry[0], entry[1], entry[5] or getattr(entry[2], "__qualname__", "?")))
            entry[2](*entry[3])
        self.now = end

    def pending(self) -> int:
        return sum(1 for e in self._heap if e[4])

    # -- randomness ------------------------------------------------------

    def rng(self, label: str) -> np.random.Generator:
        """Named substream derived from (root seed, label); same label returns the same object."""
        stream = self._streams.get(label)
        if stream is None:
            seq = np.random.SeedSequence([self.seed, _label_entropy(label)])
            stream = np.random.Generator(np.random.PCG64(seq))
            self._streams[label] = stream
        return stream
