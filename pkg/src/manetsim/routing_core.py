"""Protocol-agnostic node shell: envelopes, forwarding, buffering, drop accounting."""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable

from manetsim.engine import Engine, ns
from manetsim.metrics import Collector
from manetsim.radio import Frame, LinkFailure, QueueOverflow, World

# control frame sizes, bits
RREQ_BITS = 192
QRY_BITS = 192
RREP_BITS = 160
UPD_BITS = 160
DSR_BASE_BITS = 128
ADDRESS_BITS = 32
RERR_BITS = 128
HELLO_BITS = 96
DATA_HEADER_BITS = 160

DEFAULT_HOP_LIMIT = 32
BUFFER_CAPACITY = 64
BUFFER_TIMEOUT_S = 30.0


class DropReason(str, Enum):
    NO_ROUTE = "no_route"
    BUFFER_OVERFLOW = "buffer_overflow"
    HOP_LIMIT_EXCEEDED = "hop_limit_exceeded"
    BUFFER_TIMEOUT = "buffer_timeout"
    LINK_FAILURE_UNRECOVERABLE = "link_failure_unrecoverable"


class _Buffer:
    def __repr__(self) -> str:
        return "BUFFER"


BUFFER = _Buffer()
DATA = "data"
CONTROL = "control"

_packet_ids = itertools.count()


@dataclass(slots=True)
class PacketEnvelope:
    kind: str
    src: int
    dst: int
    size_bits: int
    hop_limit: int
    created_at: int
    payload: Any = None
    tag: Any = None
    session: Any = None
    trace: list = field(default_factory=list)
    source_route: tuple | None = None
    uid: int = 0

    @property
    def is_data(self) -> bool:
        return self.kind == DATA


class Router:
    """Callbacks every protocol implements.

    ``route`` answers a data packet with a neighbor id, ``BUFFER`` or a
    ``DropReason``.
    """

    name = "base"

    def __init__(self, node: "Node"):
        self.node = node
        self.engine = node.engine

    def start(self) -> None:
        pass

    def route(self, pkt: PacketEnvelope, prev_hop: int | None) -> Any:
        return DropReason.NO_ROUTE

    def on_buffered(self, pkt: PacketEnvelope) -> None:
        pass

    def on_packet(self, env: PacketEnvelope, prev_hop: int) -> None:
        pass

    def on_link_loss(self, neighbor: int) -> None:
        pass

    def on_link_gain(self, neighbor: int) -> None:
        pass

    def on_unicast_failure(self, pkt: PacketEnvelope, neighbor: int) -> Any:
        return self.route(pkt, None)

    def on_refresh(self) -> None:
        pass

    def extra_header_bits(self, pkt: PacketEnvelope) -> int:
        return 0


class PendingBuffer:
    """Per-node FIFO of data packets waiting for a route."""

    def __init__(self, node: "Node", capacity: int = BUFFER_CAPACITY, timeout_s: float = BUFFER_TIMEOUT_S):
        self.node = node
        self.capacity = capacity
        self.timeout_ns = ns(timeout_s)
        self._q: deque[list] = deque()  # [pkt, deadline, timer, alive]

    def __len__(self) -> int:
        return sum(1 for e in self._q if e[3])

    def packets(self) -> list[PacketEnvelope]:
        return [e[0] for e in self._q if e[3]]

    def has(self, dst: int) -> bool:
        return any(e[3] and e[0].dst == dst for e in self._q)

    def add(self, pkt: PacketEnvelope, deadline: int | None = None) -> bool:
        self._compact()
        if len(self._q) >= self.capacity:
            self.node.drop(pkt, DropReason.BUFFER_OVERFLOW)
            return False
        eng = self.node.engine
        if deadline is None:
            deadline = eng.now + self.timeout_ns
        entry = [pkt, deadline, None, True]
        entry[2] = eng.at(max(deadline, eng.now), self._expire, entry, self.node.id)
        self._q.append(entry)
        return True

    def _compact(self) -> None:
        q = self._q
        if any(not e[3] for e in q):
            self._q = deque(e for e in q if e[3])

    def _expire(self, entry: list) -> None:
        if not entry[3]:
            return
        entry[3] = False
        self.node.drop(entry[0], DropReason.BUFFER_TIMEOUT)

    def take(self, dst: int) -> list[tuple[PacketEnvelope, int]]:
        """Remove and return (packet, deadline) for ``dst`` in arrival order."""
        out = []
        for e in self._q:
            if e[3] and e[0].dst == dst:
                e[3] = False
                e[2].cancel()
                out.append((e[0], e[1]))
        if out:
            self._compact()
        return out

    def drop_all(self, dst: int, reason: DropReason) -> int:
        taken = self.take(dst)
        for pkt, _ in taken:
            self.node.drop(pkt, reason)
        return len(taken)


class Node:
    def __init__(self, nid: int, net: "Network"):
        self.id = nid
        self.net = net
        self.engine: Engine = net.engine
        self.world: World = net.world
        self.metrics: Collector = net.metrics
        self.router: Router = Router(self)
        self.pending = PendingBuffer(self, net.buffer_capacity, net.buffer_timeout_s)
        self.neighbors: set[int] = set()

    # ---- data path ----------------------------------------------------------

    def originate_data(self, dst: int, app_bits: int, session: Any = None, tag: Any = None) -> PacketEnvelope:
        net = self.net
        pkt = PacketEnvelope(
            DATA, self.id, dst, app_bits, net.hop_limit, self.engine.now,
            payload=app_bits, tag=tag, session=session, uid=next(_packet_ids),
        )
        if net.keep_packets:
            net.originated.append(pkt)
        m = self.metrics
        m.data_packets_originated += 1
        m.record("app_bits_sent", app_bits, self.engine.now)
        self.deliver_or_forward(pkt, None)
        return pkt

    def receive(self, frame: Frame) -> None:
        env = frame.envelope
        if env.kind == DATA:
            self.net.in_flight -= 1
            self.deliver_or_forward(env, frame.sender)
        else:
            self.router.on_packet(env, frame.sender)

    def deliver_or_forward(self, pkt: PacketEnvelope, prev_hop: int | None) -> str:
        trace = pkt.trace
        if self.id in trace:
            self.net.loop_violations.append(list(trace) + [self.id])
        trace.append(self.id)
        if pkt.dst == self.id:
            self.deliver(pkt)
            return "delivered"
        if pkt.hop_limit <= 0:
            self.drop(pkt, DropReason.HOP_LIMIT_EXCEEDED)
            return "dropped"
        return self.act(pkt, self.router.route(pkt, prev_hop))

    def act(self, pkt: PacketEnvelope, decision: Any, deadline: int | None = None) -> str:
        if decision is BUFFER:
            return self.buffer_pending(pkt, deadline)
        if isinstance(decision, DropReason):
            self.drop(pkt, decision)
            return "dropped"
        return self.forward(pkt, decision)

    def buffer_pending(self, pkt: PacketEnvelope, deadline: int | None = None) -> str:
        if self.pending.add(pkt, deadline):
            self.router.on_buffered(pkt)
            return "buffered"
        return "dropped"

    def forward(self, pkt: PacketEnvelope, next_hop: int, _retry: bool = True) -> str:
        net = self.net
        extra = self.router.extra_header_bits(pkt)
        header = net.data_header_bits + extra
        frame = Frame(self.id, next_hop, pkt.payload + header, pkt)
        pkt.hop_limit -= 1
        try:
            dv = self.world.unicast(frame)
        except LinkFailure:
            pkt.hop_limit += 1
            self.link_lost(next_hop, force=True)
            decision = self.router.on_unicast_failure(pkt, next_hop)
            if not _retry and not (decision is BUFFER or isinstance(decision, DropReason)):
                decision = DropReason.LINK_FAILURE_UNRECOVERABLE
            if decision is BUFFER or isinstance(decision, DropReason):
                return self.act(pkt, decision)
            return self.forward(pkt, decision, _retry=False)
        except QueueOverflow:
            pkt.hop_limit += 1
            self.drop(pkt, DropReason.BUFFER_OVERFLOW)
            return "dropped"
        pkt.size_bits = frame.size_bits
        net.in_flight += 1
        m = self.metrics
        m.data_header_bits_sent += header
        m.data_frames_sent += 1
        if pkt.src == self.id and pkt.session is not None:
            pkt.session.on_first_tx(dv.tx_start)
        return "forwarded"

    def deliver(self, pkt: PacketEnvelope) -> None:
        m = self.metrics
        m.data_packets_delivered += 1
        m.record("app_bits_received", pkt.payload, self.engine.now)
        if self.net.keep_packets:
            self.net.delivered_hops.append(len(pkt.trace) - 1)
        if pkt.session is not None:
            pkt.session.on_delivered(pkt)

    def drop(self, pkt: PacketEnvelope, reason: DropReason) -> None:
        m = self.metrics
        now = self.engine.now
        m.record("data_bits_dropped", pkt.payload, now)
        m.record("data_packets_dropped", 1, now)
        m.drop_reasons[reason.value] += 1
        if pkt.session is not None:
            pkt.session.on_dropped(pkt)

    def flush(self, dst: int) -> int:
        """Re-route every buffered packet for ``dst`` in arrival order."""
        taken = self.pending.take(dst)
        for pkt, deadline in taken:
            decision = self.router.route(pkt, None)
            if decision is BUFFER:
                self.pending.add(pkt, deadline)
            else:
                self.act(pkt, decision)
        return len(taken)

    # ---- control path -------------------------------------------------------

    def send_control(self, tag: str, size_bits: int, payload: Any, to: int | None = None) -> bool:
        """Broadcast (``to=None``) or unicast a control packet; False if it was not sent."""
        env = PacketEnvelope(CONTROL, self.id, -1 if to is None else to, size_bits, 0, self.engine.now,
                             payload=payload, tag=tag)
        frame = Frame(self.id, to, size_bits, env)
        try:
            if to is None:
                self.world.broadcast(frame)
            else:
                self.world.unicast(frame)
        except QueueOverflow:
            self.metrics.control_frames_lost += 1
            return False
        except LinkFailure:
            self.link_lost(to, force=True)
            return False
        self.metrics.control_frames_sent[tag] += 1
        return True

    # ---- link events --------------------------------------------------------

    def refresh_neighbors(self, current: frozenset[int]) -> list[tuple[int, int, bool]]:
        changes = []
        for j in sorted(self.neighbors - current):
            changes.append((self.id, j, False))
        for j in sorted(current - self.neighbors):
            changes.append((self.id, j, True))
        for _, j, gained in changes:
            self.notify_link_event(j, gained)
        return changes

    def notify_link_event(self, neighbor: int, gained: bool) -> None:
        if gained:
            if neighbor in self.neighbors:
                return
            self.neighbors.add(neighbor)
            self.router.on_link_gain(neighbor)
        else:
            self.link_lost(neighbor)

    def link_lost(self, neighbor: int, force: bool = False) -> None:
        had = neighbor in self.neighbors
        self.neighbors.discard(neighbor)
        if had or force:
            self.router.on_link_loss(neighbor)

    def on_refresh(self) -> None:
        self.router.on_refresh()


RouterFactory = Callable[[Node], Router]


class Network:
    """Engine + world + nodes + collector for one run."""

    def __init__(
        self,
        engine: Engine,
        world: World,
        metrics: Collector,
        router_factory: RouterFactory | None = None,
        hop_limit: int = DEFAULT_HOP_LIMIT,
        buffer_capacity: int = BUFFER_CAPACITY,
        buffer_timeout_s: float = BUFFER_TIMEOUT_S,
        data_header_bits: int = DATA_HEADER_BITS,
        keep_packets: bool = False,
    ):
        self.engine = engine
        self.world = world
        self.metrics = metrics
        self.hop_limit = hop_limit
        self.buffer_capacity = buffer_capacity
        self.buffer_timeout_s = buffer_timeout_s
        self.data_header_bits = data_header_bits
        self.keep_packets = keep_packets
        self.originated: list[PacketEnvelope] = []
        self.delivered_hops: list[int] = []
        self.loop_violations: list[list[int]] = []
        self.in_flight = 0
        # called with a destination id whenever a TORA height changes
        self.on_height_change = None
        self.nodes = [Node(i, self) for i in range(world.n)]
        world.nodes = self.nodes
        world.on_frame_sent = self._frame_sent
        world.on_frame_received = self._frame_received
        if router_factory is not None:
            for node in self.nodes:
                node.router = router_factory(node)

    def _frame_sent(self, frame: Frame, n_receivers: int) -> None:
        if frame.envelope is not None and frame.envelope.kind == CONTROL:
            self.metrics.record("routing_bits_sent", frame.size_bits, self.engine.now)

    def _frame_received(self, frame: Frame, receiver: int) -> None:
        if frame.envelope is not None and frame.envelope.kind == CONTROL:
            self.metrics.record("routing_bits_received", frame.size_bits, self.engine.now)

    def start(self, duration_ns: int) -> None:
        self.world.start(duration_ns)
        for node in self.nodes:
            node.router.start()

    def residue(self) -> dict[str, int]:
        """Data packets still buffered or on the air, found by scanning state."""
        buffered = [p for node in self.nodes for p in node.pending.packets()]
        flying = []
        for ev in self.engine.pending():
            dv = ev.payload
            env = getattr(getattr(dv, "frame", None), "envelope", None)
            if env is not None and env.kind == DATA:
                flying.append(env)
        return {
            "buffered_packets": len(buffered),
            "buffered_bits": sum(p.payload for p in buffered),
            "in_flight_packets": len(flying),
            "in_flight_bits": sum(p.payload for p in flying),
        }

    def conservation(self) -> tuple[bool, dict[str, int]]:
        tot = self.metrics.totals()
        res = self.residue()
        lhs = tot["app_bits_sent"]
        rhs = tot["app_bits_received"] + tot["data_bits_dropped"] + res["buffered_bits"] + res["in_flight_bits"]
        info = dict(tot, **res, balance=lhs - rhs)
        return lhs == rhs, info
