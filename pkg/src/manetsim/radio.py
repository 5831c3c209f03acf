"""Node mobility and the unit-disk radio medium.

Reception is boundary inclusive: a receiver at exactly ``range_m`` hears the
frame. The only delay is serialization (``size_bits / data_rate_bps``); each
sender transmits its frames one after another from a bounded FIFO.
"""

from __future__ import annotations

import bisect
from collections import deque
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any, Sequence

import numpy as np

from manetsim.engine import NS_PER_S, Engine

if TYPE_CHECKING:
    from manetsim.routing_core import Node


class LinkFailure(Exception):
    """Unicast receiver is out of range at send time."""

    def __init__(self, receiver: int):
        super().__init__(receiver)
        self.receiver = receiver


class QueueOverflow(Exception):
    """Sender's transmit FIFO cannot hold the frame."""


class Trajectory:
    """Piecewise-linear path through ``(t, (x, y))`` waypoints, clamped at both ends."""

    __slots__ = ("times", "xs", "ys")

    def __init__(self, waypoints: Sequence[tuple[float, tuple[float, float]]]):
        if not waypoints:
            raise ValueError("trajectory needs at least one waypoint")
        times = [float(t) for t, _ in waypoints]
        for a, b in zip(times, times[1:]):
            if not b > a:
                raise ValueError(f"waypoint times must be strictly increasing ({a} then {b})")
        self.times = times
        self.xs = [float(p[0]) for _, p in waypoints]
        self.ys = [float(p[1]) for _, p in waypoints]

    @classmethod
    def static(cls, x: float, y: float) -> "Trajectory":
        return cls([(0.0, (x, y))])

    @property
    def is_static(self) -> bool:
        return len(self.times) == 1

    @property
    def waypoints(self) -> list[tuple[float, tuple[float, float]]]:
        return [(t, (x, y)) for t, x, y in zip(self.times, self.xs, self.ys)]

    def position_at(self, t: float) -> tuple[float, float]:
        times = self.times
        if t <= times[0]:
            return self.xs[0], self.ys[0]
        if t >= times[-1]:
            return self.xs[-1], self.ys[-1]
        i = bisect.bisect_right(times, t) - 1
        t0, t1 = times[i], times[i + 1]
        f = (t - t0) / (t1 - t0)
        x = self.xs[i] + f * (self.xs[i + 1] - self.xs[i])
        y = self.ys[i] + f * (self.ys[i + 1] - self.ys[i])
        return x, y


@dataclass
class RadioConfig:
    range_m: float = 1500.0
    data_rate_bps: int = 1_000_000
    refresh_interval_s: float = 10.0
    # bits allowed to wait behind the frame in service; None = unbounded
    queue_bits: int | None = 64_000

    def __post_init__(self) -> None:
        if not self.range_m > 0:
            raise ValueError("range_m must be > 0")
        if not self.data_rate_bps > 0:
            raise ValueError("data_rate_bps must be > 0")
        if not self.refresh_interval_s > 0:
            raise ValueError("refresh_interval_s must be > 0")
        if self.queue_bits is not None and self.queue_bits < 0:
            raise ValueError("queue_bits must be >= 0")


@dataclass(slots=True)
class Frame:
    sender: int
    receiver: int | None  # None = broadcast
    size_bits: int
    envelope: Any = None

    @property
    def is_broadcast(self) -> bool:
        return self.receiver is None


@dataclass(slots=True)
class Delivery:
    frame: Frame
    receivers: tuple[int, ...]
    tx_start: int = 0


@dataclass
class _Interface:
    busy_until: int = 0
    # (tx_start, bits) of frames still waiting for the medium
    waiting: deque = field(default_factory=deque)
    waiting_bits: int = 0

    def backlog(self, now: int) -> int:
        w = self.waiting
        while w and w[0][0] <= now:
            self.waiting_bits -= w.popleft()[1]
        return self.waiting_bits


class World:
    """Positions, range queries, frame transmission and periodic neighbor refresh."""

    def __init__(self, engine: Engine, config: RadioConfig, trajectories: Sequence[Trajectory]):
        self.engine = engine
        self.config = config
        self.trajectories = list(trajectories)
        self.n = len(self.trajectories)
        self.nodes: list[Node] = []
        self._r2 = float(config.range_m) ** 2
        self._rate = int(config.data_rate_bps)
        self._ifaces = [_Interface() for _ in range(self.n)]
        self.static = all(tr.is_static for tr in self.trajectories)
        self._pos_t: int | None = None
        self._pos: np.ndarray | None = None
        self._static_adj: list[tuple[int, ...]] | None = None
        self._static_mat: np.ndarray | None = None
        if self.static:
            mat = self._adjacency(self.positions_at(0))
            self._static_mat = mat
            self._static_adj = [tuple(int(j) for j in np.flatnonzero(mat[i])) for i in range(self.n)]
        self.neighbor_sets: list[frozenset[int]] = [frozenset()] * self.n
        self.refresh_ticks = 0
        # hooks set by the simulation shell
        self.on_frame_sent = None
        self.on_frame_received = None

    # ---- geometry ---------------------------------------------------------

    def position_at(self, node: int, t_ns: int) -> tuple[float, float]:
        return self.trajectories[node].position_at(t_ns / NS_PER_S)

    def positions_at(self, t_ns: int) -> np.ndarray:
        if self._pos_t == t_ns and self._pos is not None:
            return self._pos
        t = t_ns / NS_PER_S
        pos = np.array([tr.position_at(t) for tr in self.trajectories], dtype=float).reshape(self.n, 2)
        self._pos_t, self._pos = t_ns, pos
        return pos

    def _adjacency(self, pos: np.ndarray) -> np.ndarray:
        d = pos[:, None, :] - pos[None, :, :]
        d2 = np.einsum("ijk,ijk->ij", d, d)
        mat = d2 <= self._r2
        np.fill_diagonal(mat, False)
        return mat

    def in_range(self, a: int, b: int, t_ns: int, range_m: float | None = None) -> bool:
        if range_m is None and self.static and a != b:
            return bool(self._static_mat[a, b])
        r = self.config.range_m if range_m is None else range_m
        ax, ay = self.position_at(a, t_ns)
        bx, by = self.position_at(b, t_ns)
        dx, dy = ax - bx, ay - by
        return dx * dx + dy * dy <= r * r

    def neighbors(self, a: int, t_ns: int) -> tuple[int, ...]:
        """Nodes other than ``a`` within range of ``a`` at ``t_ns``, ascending id."""
        if self.static:
            return self._static_adj[a]
        pos = self.positions_at(t_ns)
        d = pos - pos[a]
        d2 = d[:, 0] * d[:, 0] + d[:, 1] * d[:, 1]
        mask = d2 <= self._r2
        mask[a] = False
        return tuple(int(j) for j in np.flatnonzero(mask))

    def adjacency(self, t_ns: int) -> np.ndarray:
        if self.static:
            return self._static_mat
        return self._adjacency(self.positions_at(t_ns))

    # ---- transmission -----------------------------------------------------

    def serialization_ns(self, size_bits: int) -> int:
        rate = self._rate
        return (size_bits * NS_PER_S + rate // 2) // rate

    def _enqueue(self, sender: int, size_bits: int) -> int:
        """Reserve the sender's medium; return tx start time."""
        now = self.engine.now
        iface = self._ifaces[sender]
        if iface.busy_until <= now:
            start = now
        else:
            cap = self.config.queue_bits
            if cap is not None and iface.backlog(now) + size_bits > cap:
                raise QueueOverflow()
            start = iface.busy_until
            iface.waiting.append((start, size_bits))
            iface.waiting_bits += size_bits
        iface.busy_until = start + self.serialization_ns(size_bits)
        return start

    def broadcast(self, frame: Frame) -> Delivery:
        """Send to every in-range node; one delivery per receiver, all at the same instant.

        The receivers of one frame are dispatched by a single engine event in
        ascending id order, which is the order separate events with
        consecutive sequence numbers would have.
        """
        now = self.engine.now
        receivers = self.neighbors(frame.sender, now)
        start = self._enqueue(frame.sender, frame.size_bits)
        dv = Delivery(frame, receivers, start)
        if self.on_frame_sent is not None:
            self.on_frame_sent(frame, len(receivers))
        if receivers:
            self.engine.at(start + self.serialization_ns(frame.size_bits), self._deliver, dv, frame.sender)
        return dv

    def unicast(self, frame: Frame) -> Delivery:
        now = self.engine.now
        r = frame.receiver
        if r == frame.sender or not self.in_range(frame.sender, r, now):
            raise LinkFailure(r)
        start = self._enqueue(frame.sender, frame.size_bits)
        dv = Delivery(frame, (r,), start)
        if self.on_frame_sent is not None:
            self.on_frame_sent(frame, 1)
        self.engine.at(start + self.serialization_ns(frame.size_bits), self._deliver, dv, frame.sender)
        return dv

    def _deliver(self, dv: Delivery) -> None:
        frame = dv.frame
        nodes = self.nodes
        hook = self.on_frame_received
        for r in dv.receivers:
            if hook is not None:
                hook(frame, r)
            nodes[r].receive(frame)

    # ---- neighbor service -------------------------------------------------

    def start(self, duration_ns: int) -> None:
        self._duration = duration_ns
        self.engine.at(0, self.neighbor_refresh_tick)

    def neighbor_refresh_tick(self, _payload: Any = None) -> list[tuple[int, int, bool]]:
        """Recompute neighbor sets and notify each node of losses and gains.

        Differences are taken against each node's own neighbor view, which may
        already have dropped a neighbor after a failed unicast.
        """
        now = self.engine.now
        self.refresh_ticks += 1
        mat = self.adjacency(now)
        new_sets = [frozenset(int(j) for j in np.flatnonzero(mat[i])) for i in range(self.n)]
        self.neighbor_sets = new_sets
        changes: list[tuple[int, int, bool]] = []
        for node in self.nodes:
            changes.extend(node.refresh_neighbors(new_sets[node.id]))
        for node in self.nodes:
            node.on_refresh()
        nxt = now + int(round(self.config.refresh_interval_s * NS_PER_S))
        if nxt <= getattr(self, "_duration", nxt):
            self.engine.at(nxt, self.neighbor_refresh_tick)
        return changes
