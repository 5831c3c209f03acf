"""Discrete-event core: integer-nanosecond clock, one global event heap, seeded streams."""

from __future__ import annotations

import hashlib
import heapq
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

NS_PER_S = 1_000_000_000


def ns(t_s: float) -> int:
    """Convert seconds to integer nanoseconds (round half to even)."""
    return int(round(t_s * NS_PER_S))


def seconds(t_ns: int) -> float:
    return t_ns / NS_PER_S


class SchedulingInPast(ValueError):
    """Raised when an event is scheduled before the current clock."""


class HandlerFault(RuntimeError):
    """Wraps an exception raised by an event handler, with dispatch context."""


@dataclass(order=True, slots=True)
class Event:
    fire_time: int
    seq: int
    target: Any = field(compare=False, default=None)
    action: Callable[..., Any] | None = field(compare=False, default=None, repr=False)
    payload: Any = field(compare=False, default=None)
    cancelled: bool = field(compare=False, default=False)

    def cancel(self) -> None:
        self.cancelled = True


class RandomStream:
    """A named uniform stream derived from (scenario seed, label).

    The label is hashed with SHA-256 so the derivation does not depend on
    Python's per-process string hashing.
    """

    def __init__(self, seed: int, label: str):
        self.seed = int(seed)
        self.label = label
        digest = hashlib.sha256(label.encode("utf-8")).digest()
        key = int.from_bytes(digest[:8], "little")
        ss = np.random.SeedSequence(entropy=self.seed & 0xFFFF_FFFF_FFFF_FFFF, spawn_key=(key,))
        self._gen = np.random.Generator(np.random.PCG64(ss))

    def draw(self) -> float:
        return float(self._gen.random())

    def uniform(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * self.draw()

    def integers(self, lo: int, hi: int) -> int:
        """Integer in [lo, hi)."""
        return int(self._gen.integers(lo, hi))


class Engine:
    """Single-threaded event loop ordered by (fire_time, seq)."""

    def __init__(self, seed: int = 1):
        self.seed = int(seed)
        self.now = 0
        self._heap: list[Event] = []
        self._seq = 0
        self._streams: dict[str, RandomStream] = {}
        self.dispatched = 0
        self.log: list[tuple[int, int]] | None = None

    @property
    def now_s(self) -> float:
        return self.now / NS_PER_S

    def stream(self, label: str) -> RandomStream:
        s = self._streams.get(label)
        if s is None:
            s = self._streams[label] = RandomStream(self.seed, label)
        return s

    def draw(self, label: str) -> float:
        return self.stream(label).draw()

    def schedule(self, event: Event) -> int:
        if event.fire_time < self.now:
            raise SchedulingInPast(f"fire_time {event.fire_time} ns < clock {self.now} ns")
        event.seq = self._seq
        self._seq += 1
        heapq.heappush(self._heap, event)
        return event.seq

    def at(self, t_ns: int, action: Callable[..., Any], payload: Any = None, target: Any = None) -> Event:
        """Schedule ``action(payload)`` at absolute time ``t_ns``."""
        if t_ns < self.now:
            raise SchedulingInPast(f"fire_time {t_ns} ns < clock {self.now} ns")
        ev = Event(t_ns, self._seq, target, action, payload)
        self._seq += 1
        heapq.heappush(self._heap, ev)
        return ev

    def after(self, delay_ns: int, action: Callable[..., Any], payload: Any = None, target: Any = None) -> Event:
        return self.at(self.now + delay_ns, action, payload, target)

    def pending(self) -> list[Event]:
        return [e for e in self._heap if not e.cancelled]

    def run(self, until: int) -> int:
        """Dispatch every event with fire_time <= until, then set the clock to until."""
        if until < self.now:
            raise SchedulingInPast(f"until {until} ns < clock {self.now} ns")
        heap = self._heap
        pop = heapq.heappop
        log = self.log
        while heap and heap[0].fire_time <= until:
            ev = pop(heap)
            if ev.cancelled:
                continue
            self.now = ev.fire_time
            self.dispatched += 1
            if log is not None:
                log.append((ev.fire_time, ev.seq))
            if ev.action is None:
                continue
            try:
                ev.action(ev.payload)
            except HandlerFault:
                raise
            except Exception as exc:
                raise HandlerFault(
                    f"handler {getattr(ev.action, '__qualname__', ev.action)!r} failed at "
                    f"t={ev.fire_time} ns (seq {ev.seq}, target {ev.target!r})"
                ) from exc
        self.now = until
        return until
