"""Dynamic Source Routing with a per-destination multi-route cache."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Any

from manetsim.engine import ns
from manetsim.routing_core import (
    ADDRESS_BITS, BUFFER, DSR_BASE_BITS, RERR_BITS, DropReason, Node, PacketEnvelope, Router,
)


@dataclass
class DsrParams:
    cache_capacity: int = 8
    request_retries: int = 2
    discovery_wait_s: float = 1.0

    def __post_init__(self) -> None:
        if self.cache_capacity < 1:
            raise ValueError("cache_capacity must be >= 1")
        if self.request_retries < 0 or self.discovery_wait_s <= 0:
            raise ValueError("invalid DSR discovery parameters")


@dataclass(frozen=True, slots=True)
class DsrRequest:
    initiator: int
    request_id: int
    target: int
    accumulated: tuple[int, ...]


@dataclass(frozen=True, slots=True)
class DsrReply:
    route: tuple[int, ...]  # initiator .. target
    path: tuple[int, ...]  # replier .. initiator


@dataclass(frozen=True, slots=True)
class DsrError:
    broken: tuple[int, int]
    dest: int
    path: tuple[int, ...]  # detecting node .. source


def request_bits(n_addresses: int) -> int:
    return DSR_BASE_BITS + ADDRESS_BITS * n_addresses


def is_source_route(route: tuple[int, ...]) -> bool:
    return len(route) >= 2 and len(set(route)) == len(route)


def has_link(route: tuple[int, ...], a: int, b: int) -> bool:
    return any((x, y) in ((a, b), (b, a)) for x, y in zip(route, route[1:]))


class RouteCache:
    """Complete routes from the owner, at most ``capacity`` per destination.

    Selection returns the shortest route, oldest first among equals; eviction
    removes the longest, oldest first.
    """

    def __init__(self, capacity: int = 8):
        self.capacity = capacity
        self._routes: dict[int, list[tuple[tuple[int, ...], int, int]]] = {}
        self._order = itertools.count()

    def add(self, route: tuple[int, ...], t_ns: int) -> bool:
        route = tuple(route)
        if not is_source_route(route):
            raise ValueError(f"not a repeat-free route: {route}")
        lst = self._routes.setdefault(route[-1], [])
        if any(r == route for r, _, _ in lst):
            return False
        lst.append((route, t_ns, next(self._order)))
        if len(lst) > self.capacity:
            victim = max(lst, key=lambda e: (len(e[0]), -e[1], -e[2]))
            lst.remove(victim)
        return True

    def best(self, dest: int) -> tuple[int, ...] | None:
        lst = self._routes.get(dest)
        if not lst:
            return None
        return min(lst, key=lambda e: (len(e[0]), e[1], e[2]))[0]

    def routes(self, dest: int) -> list[tuple[int, ...]]:
        return [r for r, _, _ in self._routes.get(dest, [])]

    def remove_link(self, a: int, b: int) -> int:
        removed = 0
        for dest in list(self._routes):
            lst = self._routes[dest]
            keep = [e for e in lst if not has_link(e[0], a, b)]
            removed += len(lst) - len(keep)
            if keep:
                self._routes[dest] = keep
            else:
                del self._routes[dest]
        return removed

    def __len__(self) -> int:
        return sum(len(v) for v in self._routes.values())


class DsrRouter(Router):
    name = "dsr"

    def __init__(self, node: Node, params: DsrParams | None = None):
        super().__init__(node)
        self.params = params or DsrParams()
        self.cache = RouteCache(self.params.cache_capacity)
        self.request_id = 0
        self.seen: set[tuple[int, int]] = set()
        self.discovering: dict[int, tuple] = {}
        self.attached_routes: list[tuple[int, ...]] | None = None

    # ---- data --------------------------------------------------------------

    def extra_header_bits(self, pkt: PacketEnvelope) -> int:
        return ADDRESS_BITS * len(pkt.source_route) if pkt.source_route else 0

    def _attach(self, pkt: PacketEnvelope) -> Any:
        r = self.cache.best(pkt.dst)
        if r is None:
            return BUFFER
        pkt.source_route = r
        if self.attached_routes is not None:
            self.attached_routes.append(r)
        return r[1]

    def route(self, pkt: PacketEnvelope, prev_hop: int | None) -> Any:
        me = self.node.id
        if pkt.src == me and prev_hop is None:
            return self._attach(pkt)
        sr = pkt.source_route
        if not sr or me not in sr:
            return DropReason.NO_ROUTE
        i = sr.index(me)
        if i == len(sr) - 1:
            return DropReason.NO_ROUTE
        return sr[i + 1]

    def on_buffered(self, pkt: PacketEnvelope) -> None:
        pkt.source_route = None
        if pkt.dst not in self.discovering:
            self.originate_discovery(pkt.dst)

    def on_unicast_failure(self, pkt: PacketEnvelope, neighbor: int) -> Any:
        me = self.node.id
        self.cache.remove_link(me, neighbor)
        if pkt.src == me:
            pkt.source_route = None
            return self._attach(pkt)
        sr = pkt.source_route
        i = sr.index(me)
        err = DsrError((me, neighbor), pkt.dst, tuple(reversed(sr[: i + 1])))
        self.node.send_control("DSR_ERR", RERR_BITS, err, to=err.path[1])
        return DropReason.LINK_FAILURE_UNRECOVERABLE

    def on_link_loss(self, neighbor: int) -> None:
        self.cache.remove_link(self.node.id, neighbor)

    # ---- discovery ---------------------------------------------------------

    def originate_discovery(self, dest: int, attempt: int = 0) -> DsrRequest:
        me = self.node.id
        self.request_id += 1
        req = DsrRequest(me, self.request_id, dest, (me,))
        self.seen.add((me, self.request_id))
        self.node.send_control("DSR_REQ", request_bits(1), req)
        token = (dest, attempt, req.request_id)
        self.discovering[dest] = token
        self.engine.after(ns(self.params.discovery_wait_s) << attempt, self._discovery_timeout, token, me)
        return req

    def _discovery_timeout(self, token: tuple) -> None:
        dest, attempt, _ = token
        if self.discovering.get(dest) != token:
            return
        if self.cache.best(dest) is not None or not self.node.pending.has(dest):
            del self.discovering[dest]
            if self.cache.best(dest) is not None:
                self.node.flush(dest)
            return
        if attempt < self.params.request_retries:
            self.originate_discovery(dest, attempt + 1)
        else:
            del self.discovering[dest]
            self.node.pending.drop_all(dest, DropReason.NO_ROUTE)

    def on_packet(self, env: PacketEnvelope, prev_hop: int) -> Any:
        if env.tag == "DSR_REQ":
            return self.handle_request(env.payload, prev_hop)
        if env.tag == "DSR_REP":
            return self.handle_reply(env.payload, prev_hop)
        if env.tag == "DSR_ERR":
            return self.handle_route_error(env.payload, prev_hop)
        return None

    def handle_request(self, req: DsrRequest, prev_hop: int) -> str:
        me = self.node.id
        key = (req.initiator, req.request_id)
        if key in self.seen or me in req.accumulated:
            return "drop"
        self.seen.add(key)
        here = req.accumulated + (me,)
        if me == req.target:
            self._send_reply(DsrReply(here, tuple(reversed(here))))
            return "reply"
        tail = self.cache.best(req.target)
        if tail is not None:
            full = req.accumulated + tail
            if is_source_route(full):
                self._send_reply(DsrReply(full, tuple(reversed(here))))
                return "reply"
        fwd = DsrRequest(req.initiator, req.request_id, req.target, here)
        self.node.send_control("DSR_REQ", request_bits(len(here)), fwd)
        return "rebroadcast"

    def _send_reply(self, rep: DsrReply) -> None:
        self.learn(rep.route)
        self.node.send_control("DSR_REP", request_bits(len(rep.route)), rep, to=rep.path[1])

    def learn(self, route: tuple[int, ...]) -> None:
        """Cache every sub-route of ``route`` that starts here, in both directions."""
        me = self.node.id
        if me not in route:
            return
        i = route.index(me)
        now = self.engine.now
        for j in range(i + 1, len(route)):
            self.cache.add(route[i : j + 1], now)
        for j in range(i - 1, -1, -1):
            self.cache.add(tuple(reversed(route[j : i + 1])), now)

    def handle_reply(self, rep: DsrReply, prev_hop: int) -> str:
        me = self.node.id
        self.learn(rep.route)
        if me == rep.route[0]:
            target = rep.route[-1]
            self.discovering.pop(target, None)
            self.node.flush(target)
            return "consume"
        i = rep.path.index(me)
        self.node.send_control("DSR_REP", request_bits(len(rep.route)), rep, to=rep.path[i + 1])
        return "forward"

    def handle_route_error(self, err: DsrError, prev_hop: int | None = None) -> str:
        """Purge routes over the broken link; at the source, fail over or rediscover."""
        me = self.node.id
        self.cache.remove_link(*err.broken)
        if me == err.path[-1]:
            if self.cache.best(err.dest) is not None:
                self.node.flush(err.dest)
                return "failover"
            if err.dest not in self.discovering:
                self.originate_discovery(err.dest)
            return "rediscover"
        i = err.path.index(me)
        self.node.send_control("DSR_ERR", RERR_BITS, err, to=err.path[i + 1])
        return "forward"
