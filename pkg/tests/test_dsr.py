import pytest
from hypothesis import given, strategies as st

from manetsim.dsr import DsrError, DsrParams, DsrRequest, RouteCache, has_link, is_source_route
from manetsim.engine import ns
from manetsim.radio import Trajectory
from conftest import CHAIN, DIAMOND, make_net
from test_aodv import tap, tags


def dsr_net(positions=None, trajectories=None, **kw):
    net = make_net(positions, "dsr", trajectories=trajectories, duration_s=100, **kw)
    log = tap(net)
    net.engine.run(0)
    for n in net.nodes:
        n.router.attached_routes = []
    return net, log


# ---- cache -------------------------------------------------------------------

def test_cache_prefers_shortest_route():
    c = RouteCache()
    c.add((0, 5, 6, 9), 0)
    c.add((0, 4, 9), 1)
    assert c.best(9) == (0, 4, 9)


def test_cache_tie_goes_to_the_oldest():
    c = RouteCache()
    c.add((0, 2, 9), 5)
    c.add((0, 1, 9), 7)
    assert c.best(9) == (0, 2, 9)


def test_cache_eviction_removes_longest():
    c = RouteCache(capacity=2)
    c.add((0, 1, 9), 0)
    c.add((0, 3, 4, 9), 1)
    c.add((0, 2, 9), 2)
    assert sorted(c.routes(9)) == [(0, 1, 9), (0, 2, 9)]


def test_cache_ignores_duplicates_and_rejects_loops():
    c = RouteCache()
    assert c.add((0, 1), 0)
    assert not c.add((0, 1), 1)
    with pytest.raises(ValueError):
        c.add((0, 1, 0), 0)


def test_removing_a_link_in_no_route_is_a_noop():
    c = RouteCache()
    c.add((0, 1, 2), 0)
    assert c.remove_link(5, 6) == 0
    assert len(c) == 1


@given(st.lists(st.lists(st.integers(1, 6), min_size=1, max_size=5, unique=True), max_size=20),
       st.integers(1, 4))
def test_cache_never_exceeds_capacity(routes, cap):
    c = RouteCache(cap)
    for t, r in enumerate(routes):
        c.add((0,) + tuple(r), t)
    for dest in range(1, 7):
        got = c.routes(dest)
        assert len(got) <= cap
        assert all(is_source_route(r) and r[-1] == dest for r in got)


def test_has_link_is_undirected():
    assert has_link((0, 1, 2), 2, 1)
    assert not has_link((0, 1, 2), 0, 2)


# ---- discovery ---------------------------------------------------------------

def test_empty_cache_broadcasts_request_with_self():
    net, log = dsr_net(CHAIN)
    net.nodes[0].originate_data(2, 100)
    reqs = tags(log, "DSR_REQ")
    assert len(reqs) == 1
    assert reqs[0][4].accumulated == (0,)
    assert reqs[0][2] is None


def test_pending_packets_share_one_discovery():
    net, log = dsr_net(CHAIN)
    net.nodes[0].originate_data(2, 100)
    net.nodes[0].originate_data(2, 100)
    net.engine.run(ns(1))
    assert len([e for e in tags(log, "DSR_REQ") if e[1] == 0]) == 1
    assert net.metrics.data_packets_delivered == 2


def test_chain_reply_carries_full_route():
    # derived: hand trace on the three-node chain
    net, log = dsr_net(CHAIN)
    net.nodes[0].originate_data(2, 100)
    net.engine.run(ns(1))
    reps = tags(log, "DSR_REP")
    assert reps[0][1:3] == (2, 1)
    assert reps[0][4].route == (0, 1, 2)
    assert net.nodes[0].router.cache.best(2) == (0, 1, 2)
    assert net.nodes[0].router.attached_routes == [(0, 1, 2)]


def test_request_revisiting_a_node_is_dropped():
    net, _ = dsr_net(CHAIN)
    r = net.nodes[1].router
    assert r.handle_request(DsrRequest(0, 99, 2, (0, 1)), 0) == "drop"


def test_intermediate_answers_from_cache():
    net, log = dsr_net(CHAIN)
    b = net.nodes[1].router
    b.cache.add((1, 7, 2), 0)
    assert b.handle_request(DsrRequest(0, 5, 2, (0,)), 0) == "reply"
    assert tags(log, "DSR_REP")[-1][4].route == (0, 1, 7, 2)


def test_cached_tail_with_repeat_is_not_used():
    net, log = dsr_net(CHAIN)
    b = net.nodes[1].router
    b.cache.add((1, 0, 2), 0)  # would revisit the initiator
    assert b.handle_request(DsrRequest(0, 6, 2, (0,)), 0) == "rebroadcast"


# ---- data path and maintenance -----------------------------------------------

def test_intermediate_steps_along_source_route():
    net, _ = dsr_net(CHAIN)
    pkt = net.nodes[0].originate_data(2, 100)
    pkt.source_route = (0, 1, 2)
    assert net.nodes[1].router.route(pkt, 0) == 2


def test_node_off_the_route_drops():
    net, _ = dsr_net(DIAMOND)
    pkt = net.nodes[0].originate_data(3, 100)
    net.engine.run(ns(1))
    pkt.source_route = (0, 1, 3)
    assert net.nodes[2].router.route(pkt, 0).value == "no_route"


def walkaway(mover_from, mover_to, t=5.0):
    return Trajectory([(0, mover_from), (t, mover_from), (t + 0.01, mover_to)])


def test_broken_link_reports_error_to_source():
    # derived: failover trace on the chain, C leaves at t=5
    trajs = [Trajectory.static(0, 0), Trajectory.static(100, 0), walkaway((200.0, 0), (200.0, 500.0))]
    net, log = dsr_net(trajectories=trajs)
    net.nodes[0].originate_data(2, 100)
    net.engine.run(ns(6))
    net.nodes[0].originate_data(2, 100)
    net.engine.run(ns(7))
    errs = tags(log, "DSR_ERR")
    assert len(errs) == 1
    _, s, r, _, err = errs[0]
    assert (s, r) == (1, 0)
    assert err.broken == (1, 2)
    assert net.nodes[0].router.cache.best(2) is None


def test_failover_to_second_cached_route():
    net, log = dsr_net(DIAMOND)
    a = net.nodes[0].router
    a.cache.add((0, 1, 3), 0)
    a.cache.add((0, 2, 3), 1)
    before = len(tags(log, "DSR_REQ"))
    assert a.handle_route_error(DsrError((1, 3), 3, (1, 0))) == "failover"
    net.nodes[0].originate_data(3, 100)
    net.engine.run(ns(1))
    assert a.attached_routes[-1] == (0, 2, 3)
    assert len(tags(log, "DSR_REQ")) == before


def test_losing_the_only_route_starts_discovery():
    net, log = dsr_net(CHAIN)
    a = net.nodes[0].router
    a.cache.add((0, 1, 2), 0)
    assert a.handle_route_error(DsrError((1, 2), 2, (1, 0))) == "rediscover"
    assert tags(log, "DSR_REQ")[-1][4].target == 2


def test_header_grows_with_route_length():
    net, _ = dsr_net(CHAIN)
    net.nodes[0].originate_data(2, 1000)
    net.engine.run(ns(1))
    # two hops, each carrying a three-address route
    assert net.metrics.data_header_bits_sent == 2 * (160 + 3 * 32)


def test_params_validation():
    with pytest.raises(ValueError):
        DsrParams(cache_capacity=0)
