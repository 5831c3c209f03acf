"""Link-reversal routing with scalar per-destination heights.

A simplification of TORA: a node's height for a destination is a single
integer, links point from higher to lower, and a node left without any
downstream link raises itself above every neighbor (full reversal).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

from manetsim.engine import ns
from manetsim.routing_core import BUFFER, QRY_BITS, UPD_BITS, DropReason, Node, PacketEnvelope, Router


class NoDownstream(LookupError):
    pass


class CycleDetected(AssertionError):
    pass


@dataclass
class ToraParams:
    query_retries: int = 2
    discovery_wait_s: float = 1.0
    # heights beyond this are treated as a partition from the destination
    max_height: int = 64

    def __post_init__(self) -> None:
        if self.query_retries < 0 or self.discovery_wait_s <= 0 or self.max_height < 1:
            raise ValueError("invalid TORA parameters")


@dataclass(frozen=True, slots=True)
class Qry:
    dest: int
    originator: int
    epoch: int


@dataclass(frozen=True, slots=True)
class Upd:
    dest: int
    sender_height: int


def height_digraph(adjacency: np.ndarray, heights: Sequence[int | None]) -> np.ndarray:
    """Directed links from the higher to the lower of two adjacent set heights."""
    h = np.array([np.nan if x is None else float(x) for x in heights])
    return adjacency & (h[:, None] > h[None, :])


def digraph_acyclic(edges: np.ndarray) -> bool:
    """Sink peeling: repeatedly remove nodes with no outgoing edge."""
    alive = np.ones(len(edges), dtype=bool)
    while alive.any():
        has_out = (edges & alive[None, :]).any(axis=1)
        sinks = alive & ~has_out
        if not sinks.any():
            return False
        alive &= ~sinks
    return True


def acyclic(adjacency: np.ndarray, heights: Sequence[int | None]) -> bool:
    """True iff the height-induced digraph over ``adjacency`` has no cycle."""
    return digraph_acyclic(height_digraph(adjacency, heights))


def view_digraph(routers: Sequence["ToraRouter"], dest: int) -> np.ndarray:
    """Links each node currently believes lead downstream, from its own neighbor records."""
    n = len(routers)
    edges = np.zeros((n, n), dtype=bool)
    for r in routers:
        for _, j in r.downstream(dest):
            edges[r.node.id, j] = True
    return edges


class ToraRouter(Router):
    name = "tora"

    def __init__(self, node: Node, params: ToraParams | None = None):
        super().__init__(node)
        self.params = params or ToraParams()
        self.height: dict[int, int] = {}
        self.nbr_heights: dict[int, dict[int, int]] = {}
        self.route_required: set[int] = set()
        self.seen: set[tuple[int, int, int]] = set()
        self.epoch = 0
        self.discovering: dict[int, tuple] = {}
        self.reversals = 0
        self._dirty: set[int] = set()
        self._nh_cache: dict[int, int | None] = {}

    # ---- height bookkeeping ------------------------------------------------

    def own_height(self, dest: int) -> int | None:
        if dest == self.node.id:
            return 0
        return self.height.get(dest)

    def _set_height(self, dest: int, h: int | None) -> None:
        if h is None:
            self.height.pop(dest, None)
        else:
            self.height[dest] = h
        self._nh_cache.pop(dest, None)
        check = self.node.net.on_height_change
        if check is not None:
            check(dest)

    def _known(self, dest: int) -> list[tuple[int, int]]:
        rec = self.nbr_heights.get(dest)
        if not rec:
            return []
        nbrs = self.node.neighbors
        return [(h, n) for n, h in rec.items() if n in nbrs]

    def downstream(self, dest: int) -> list[tuple[int, int]]:
        h = self.own_height(dest)
        if h is None:
            return []
        return sorted((nh, n) for nh, n in self._known(dest) if nh < h)

    def upstream(self, dest: int) -> list[tuple[int, int]]:
        h = self.own_height(dest)
        if h is None:
            return []
        return sorted((nh, n) for nh, n in self._known(dest) if nh > h)

    def next_hop(self, dest: int) -> int:
        """In-range neighbor with the smallest known height below ours; ties to the smaller id."""
        if dest in self._nh_cache:
            nh = self._nh_cache[dest]
        else:
            down = self.downstream(dest)
            nh = down[0][1] if down else None
            self._nh_cache[dest] = nh
        if nh is None:
            raise NoDownstream(dest)
        return nh

    # ---- router contract ---------------------------------------------------

    def route(self, pkt: PacketEnvelope, prev_hop: int | None) -> Any:
        try:
            return self.next_hop(pkt.dst)
        except NoDownstream:
            return BUFFER

    def on_buffered(self, pkt: PacketEnvelope) -> None:
        if pkt.dst not in self.discovering:
            self.require_route(pkt.dst)

    def require_route(self, dest: int, attempt: int = 0) -> Qry:
        me = self.node.id
        self.epoch += 1
        q = Qry(dest, me, self.epoch)
        self.seen.add((me, self.epoch, dest))
        if self.own_height(dest) is None:
            self.route_required.add(dest)
        self.node.send_control("QRY", QRY_BITS, q)
        token = (dest, attempt, self.epoch)
        self.discovering[dest] = token
        self.engine.after(ns(self.params.discovery_wait_s) << attempt, self._discovery_timeout, token, me)
        return q

    def _has_downstream(self, dest: int) -> bool:
        try:
            self.next_hop(dest)
            return True
        except NoDownstream:
            return False

    def _discovery_timeout(self, token: tuple) -> None:
        dest, attempt, _ = token
        if self.discovering.get(dest) != token:
            return
        if self._has_downstream(dest) or not self.node.pending.has(dest):
            del self.discovering[dest]
            if self._has_downstream(dest):
                self.node.flush(dest)
            return
        if attempt < self.params.query_retries:
            self.require_route(dest, attempt + 1)
        else:
            del self.discovering[dest]
            self.node.pending.drop_all(dest, DropReason.NO_ROUTE)

    def on_packet(self, env: PacketEnvelope, prev_hop: int) -> Any:
        if env.tag == "QRY":
            return self.handle_qry(env.payload, prev_hop)
        if env.tag == "UPD":
            return self.handle_upd(env.payload, prev_hop)
        return None

    def handle_qry(self, q: Qry, prev_hop: int) -> str:
        key = (q.originator, q.epoch, q.dest)
        if key in self.seen:
            return "drop"
        self.seen.add(key)
        h = self.own_height(q.dest)
        if h is not None:
            self.node.send_control("UPD", UPD_BITS, Upd(q.dest, h))
            return "update"
        self.route_required.add(q.dest)
        self.node.send_control("QRY", QRY_BITS, q)
        return "rebroadcast"

    def handle_upd(self, u: Upd, sender: int) -> str:
        dest = u.dest
        if dest == self.node.id:
            return "ignore"
        self.nbr_heights.setdefault(dest, {})[sender] = u.sender_height
        self._nh_cache.pop(dest, None)
        own = self.own_height(dest)
        if own is None:
            if dest not in self.route_required:
                return "record"
            cands = [h for h, _ in self._known(dest)]
            if sender not in self.node.neighbors:
                cands.append(u.sender_height)
            new = 1 + min(cands)
            self.route_required.discard(dest)
            self._set_height(dest, new)
            self.node.send_control("UPD", UPD_BITS, Upd(dest, new))
            self._release(dest)
            return "set"
        if u.sender_height >= own:
            self._dirty.add(dest)
        if self.node.pending.has(dest) and self._has_downstream(dest):
            self._release(dest)
        return "record"

    def _release(self, dest: int) -> None:
        if self.discovering.pop(dest, None) is not None or self.node.pending.has(dest):
            self.node.flush(dest)

    # ---- maintenance -------------------------------------------------------

    def reverse(self, dest: int) -> int | None:
        """Full reversal: rise to one above the highest known neighbor."""
        known = self._known(dest)
        if not known:
            return self.own_height(dest)
        new = 1 + max(h for h, _ in known)
        if new > self.params.max_height:
            self._partitioned(dest)
            return None
        self.reversals += 1
        self._set_height(dest, new)
        self.node.send_control("UPD", UPD_BITS, Upd(dest, new))
        return new

    def _partitioned(self, dest: int) -> None:
        self._set_height(dest, None)
        self.discovering.pop(dest, None)
        self.node.pending.drop_all(dest, DropReason.LINK_FAILURE_UNRECOVERABLE)

    def _maintain(self, dest: int) -> str:
        if dest == self.node.id or self.own_height(dest) is None:
            return "none"
        if not self.node.neighbors:
            self._partitioned(dest)
            return "unset"
        if self.downstream(dest):
            return "ok"
        if self.upstream(dest):
            self.reverse(dest)
            return "reversed"
        return "stuck"

    def on_link_loss(self, neighbor: int) -> None:
        self.handle_link_loss(neighbor)

    def handle_link_loss(self, neighbor: int) -> dict[int, str]:
        self._nh_cache.clear()
        out = {}
        dests = set(self.height)
        for dest, rec in self.nbr_heights.items():
            if rec.pop(neighbor, None) is not None:
                dests.add(dest)
        for dest in sorted(dests):
            out[dest] = self._maintain(dest)
        return out

    def on_link_gain(self, neighbor: int) -> None:
        self._nh_cache.clear()

    def on_refresh(self) -> None:
        if not self._dirty:
            return
        dirty, self._dirty = sorted(self._dirty), set()
        for dest in dirty:
            self._maintain(dest)
            if self.node.pending.has(dest) and self._has_downstream(dest):
                self._release(dest)


def height_vector(routers: Sequence[ToraRouter], dest: int) -> list[int | None]:
    return [r.own_height(dest) for r in routers]
