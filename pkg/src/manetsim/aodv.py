"""Ad hoc On-demand Distance Vector routing (unicast)."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

from manetsim.engine import ns
from manetsim.routing_core import (
    BUFFER, HELLO_BITS, RERR_BITS, RREP_BITS, RREQ_BITS, DropReason, Node, PacketEnvelope, Router,
)


@dataclass
class AodvParams:
    active_route_timeout_s: float = 3.0
    hello_interval_s: float = 1.0
    gratuitous_reply: bool = False
    rreq_retries: int = 2
    discovery_wait_s: float = 1.0

    def __post_init__(self) -> None:
        if self.active_route_timeout_s <= 0 or self.hello_interval_s < 0 or self.discovery_wait_s <= 0:
            raise ValueError("AODV timers must be positive")
        if self.rreq_retries < 0:
            raise ValueError("rreq_retries must be >= 0")


@dataclass(slots=True)
class AodvRouteEntry:
    dest: int
    next_hop: int
    hop_count: int
    dest_seq: int
    expiry: int
    valid: bool = True


@dataclass(frozen=True, slots=True)
class Rreq:
    orig: int
    orig_seq: int
    rreq_id: int
    dest: int
    dest_seq_known: int
    hop_count: int


@dataclass(frozen=True, slots=True)
class Rrep:
    orig: int
    dest: int
    dest_seq: int
    hop_count: int
    lifetime: int  # ns


@dataclass(frozen=True, slots=True)
class Rerr:
    unreachable: int
    target: int


class AodvRouter(Router):
    name = "aodv"

    def __init__(self, node: Node, params: AodvParams | None = None):
        super().__init__(node)
        self.params = params or AodvParams()
        self.art = ns(self.params.active_route_timeout_s)
        self.hello_ns = ns(self.params.hello_interval_s)
        self.seq = 0
        self.rreq_id = 0
        self.routes: dict[int, AodvRouteEntry] = {}
        self.seen: set[tuple[int, int]] = set()
        self.discovering: dict[int, Any] = {}
        # dest -> {source: last time its data was forwarded through here}
        self.active_sources: dict[int, dict[int, int]] = {}
        self.last_heard: dict[int, int] = {}
        self.hellos_sent = 0

    # ---- helpers -----------------------------------------------------------

    def valid_route(self, dest: int) -> AodvRouteEntry | None:
        e = self.routes.get(dest)
        if e is None or not e.valid:
            return None
        if e.expiry <= self.engine.now:
            e.valid = False
            return None
        return e

    def _update_route(self, dest: int, next_hop: int, hop_count: int, seq: int, expiry: int) -> bool:
        e = self.routes.get(dest)
        if e is None:
            self.routes[dest] = AodvRouteEntry(dest, next_hop, hop_count, seq, expiry)
            return True
        live = e.valid and e.expiry > self.engine.now
        if seq > e.dest_seq or (seq == e.dest_seq and (not live or hop_count < e.hop_count)):
            e.next_hop, e.hop_count, e.dest_seq = next_hop, hop_count, seq
            e.expiry, e.valid = expiry, True
            return True
        if live and seq == e.dest_seq and next_hop == e.next_hop:
            e.expiry = max(e.expiry, expiry)
        return False

    # ---- router contract ---------------------------------------------------

    def start(self) -> None:
        if self.hello_ns > 0:
            phase = int(self.engine.draw("jitter") * self.hello_ns)
            self.engine.at(self.engine.now + phase, self.hello_tick, target=self.node.id)

    def route(self, pkt: PacketEnvelope, prev_hop: int | None) -> Any:
        now = self.engine.now
        me = self.node.id
        if prev_hop is not None:
            self.last_heard[prev_hop] = now
        e = self.valid_route(pkt.dst)
        if e is not None:
            e.expiry = max(e.expiry, now + self.art)
            if pkt.src != me:
                self.active_sources.setdefault(pkt.dst, {})[pkt.src] = now
                back = self.valid_route(pkt.src)
                if back is not None:
                    back.expiry = max(back.expiry, now + self.art)
            return e.next_hop
        if pkt.src == me:
            return BUFFER
        back = self.valid_route(pkt.src)
        if back is not None:
            self.node.send_control("RERR", RERR_BITS, Rerr(pkt.dst, pkt.src), to=back.next_hop)
        return DropReason.NO_ROUTE

    def on_buffered(self, pkt: PacketEnvelope) -> None:
        if pkt.dst not in self.discovering:
            self.originate_discovery(pkt.dst)

    def originate_discovery(self, dest: int, attempt: int = 0) -> Rreq:
        self.seq += 1
        self.rreq_id += 1
        known = self.routes[dest].dest_seq if dest in self.routes else 0
        rreq = Rreq(self.node.id, self.seq, self.rreq_id, dest, known, 0)
        self.seen.add((rreq.orig, rreq.rreq_id))
        self.node.send_control("RREQ", RREQ_BITS, rreq)
        wait = ns(self.params.discovery_wait_s) << attempt
        token = (dest, attempt, rreq.rreq_id)
        self.discovering[dest] = token
        self.engine.after(wait, self._discovery_timeout, token, self.node.id)
        return rreq

    def _discovery_timeout(self, token: tuple[int, int, int]) -> None:
        dest, attempt, _ = token
        if self.discovering.get(dest) != token:
            return
        if self.valid_route(dest) is not None or not self.node.pending.has(dest):
            del self.discovering[dest]
            if self.valid_route(dest) is not None:
                self.node.flush(dest)
            return
        if attempt < self.params.rreq_retries:
            self.originate_discovery(dest, attempt + 1)
        else:
            del self.discovering[dest]
            self.node.pending.drop_all(dest, DropReason.NO_ROUTE)

    def on_packet(self, env: PacketEnvelope, prev_hop: int) -> Any:
        self.last_heard[prev_hop] = self.engine.now
        msg = env.payload
        if env.tag == "RREQ":
            return self.handle_rreq(msg, prev_hop)
        if env.tag == "RREP":
            return self.handle_rrep(msg, prev_hop)
        if env.tag == "RERR":
            return self.handle_rerr(msg, prev_hop)
        return None  # HELLO: last_heard already updated

    def handle_rreq(self, rreq: Rreq, prev_hop: int) -> str:
        key = (rreq.orig, rreq.rreq_id)
        if key in self.seen:
            return "drop"
        self.seen.add(key)
        now = self.engine.now
        me = self.node.id
        self._update_route(rreq.orig, prev_hop, rreq.hop_count + 1, rreq.orig_seq, now + self.art)
        if me == rreq.dest:
            self.seq = max(self.seq, rreq.dest_seq_known)
            rrep = Rrep(rreq.orig, me, self.seq, 0, 2 * self.art)
            self.node.send_control("RREP", RREP_BITS, rrep, to=prev_hop)
            return "reply"
        e = self.valid_route(rreq.dest)
        if self.params.gratuitous_reply and e is not None and e.dest_seq >= rreq.dest_seq_known:
            rrep = Rrep(rreq.orig, rreq.dest, e.dest_seq, e.hop_count, e.expiry - now)
            self.node.send_control("RREP", RREP_BITS, rrep, to=prev_hop)
            return "reply"
        fwd = Rreq(rreq.orig, rreq.orig_seq, rreq.rreq_id, rreq.dest, rreq.dest_seq_known, rreq.hop_count + 1)
        self.node.send_control("RREQ", RREQ_BITS, fwd)
        return "rebroadcast"

    def handle_rrep(self, rrep: Rrep, prev_hop: int) -> str:
        now = self.engine.now
        me = self.node.id
        self._update_route(rrep.dest, prev_hop, rrep.hop_count + 1, rrep.dest_seq, now + max(rrep.lifetime, 1))
        if me == rrep.orig:
            self.discovering.pop(rrep.dest, None)
            self.node.flush(rrep.dest)
            return "consume"
        back = self.valid_route(rrep.orig)
        if back is None:
            return "drop"
        fwd = Rrep(rrep.orig, rrep.dest, rrep.dest_seq, rrep.hop_count + 1, rrep.lifetime)
        self.node.send_control("RREP", RREP_BITS, fwd, to=back.next_hop)
        return "forward"

    def handle_rerr(self, rerr: Rerr, prev_hop: int) -> str:
        e = self.routes.get(rerr.unreachable)
        if e is not None and e.valid and e.next_hop == prev_hop:
            e.valid = False
        if rerr.target == self.node.id:
            if self.node.pending.has(rerr.unreachable) and rerr.unreachable not in self.discovering:
                self.originate_discovery(rerr.unreachable)
            return "consume"
        back = self.valid_route(rerr.target)
        if back is None or back.next_hop == prev_hop:
            return "drop"
        self.node.send_control("RERR", RERR_BITS, rerr, to=back.next_hop)
        return "forward"

    def hello_tick(self, _payload: Any = None) -> None:
        now = self.engine.now
        self.node.send_control("HELLO", HELLO_BITS, (self.node.id, self.seq))
        self.hellos_sent += 1
        self.expire_routes()
        limit = 2 * self.hello_ns
        silent = sorted({
            e.next_hop for e in self.routes.values()
            if e.valid and now - self.last_heard.get(e.next_hop, now) > limit
        })
        for nbr in silent:
            self.handle_link_loss(nbr)
        self.engine.at(now + self.hello_ns, self.hello_tick, target=self.node.id)

    def expire_routes(self) -> None:
        now = self.engine.now
        for e in self.routes.values():
            if e.valid and e.expiry < now:
                e.valid = False

    def on_link_loss(self, neighbor: int) -> None:
        self.handle_link_loss(neighbor)

    def handle_link_loss(self, neighbor: int) -> list[tuple[int, int]]:
        """Invalidate routes through ``neighbor``; notify recent sources. Returns (dest, source) errors sent."""
        now = self.engine.now
        me = self.node.id
        sent = []
        self.last_heard.pop(neighbor, None)
        for dest in sorted(self.routes):
            e = self.routes[dest]
            if not (e.valid and e.next_hop == neighbor):
                continue
            e.valid = False
            sources = self.active_sources.pop(dest, {})
            for src in sorted(sources):
                if src == me or now - sources[src] > self.art:
                    continue
                back = self.valid_route(src)
                if back is None or back.next_hop == neighbor:
                    continue
                self.node.send_control("RERR", RERR_BITS, Rerr(dest, src), to=back.next_hop)
                sent.append((dest, src))
        return sent

    def on_unicast_failure(self, pkt: PacketEnvelope, neighbor: int) -> Any:
        if pkt.src == self.node.id:
            e = self.valid_route(pkt.dst)
            return e.next_hop if e is not None else BUFFER
        return DropReason.LINK_FAILURE_UNRECOVERABLE
