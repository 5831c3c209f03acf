import pytest

from manetsim.aodv import AodvParams, Rreq
from manetsim.engine import ns
from manetsim.radio import Trajectory
from conftest import CHAIN, DIAMOND, make_net


def tap(net):
    """Record every control frame as (time, sender, receiver, tag, message)."""
    log = []
    prev = net.world.on_frame_sent

    def hook(frame, n):
        env = frame.envelope
        if env is not None and env.kind == "control":
            log.append((net.engine.now, frame.sender, frame.receiver, env.tag, env.payload))
        prev(frame, n)

    net.world.on_frame_sent = hook
    return log


def aodv_net(positions, **params):
    net = make_net(positions, "aodv", duration_s=100, params=AodvParams(hello_interval_s=0, **params))
    log = tap(net)
    net.engine.run(0)
    return net, log


def tags(log, tag):
    return [e for e in log if e[3] == tag]


def test_chain_discovery_trace():
    # derived: hand trace of the three-node chain discovery
    net, log = aodv_net(CHAIN)
    net.nodes[0].originate_data(2, 1000)
    net.engine.run(ns(1))
    rreqs = tags(log, "RREQ")
    assert [(s, m.hop_count) for _, s, _, _, m in rreqs] == [(0, 0), (1, 1)]
    reps = tags(log, "RREP")
    assert [(s, r, m.hop_count) for _, s, r, _, m in reps] == [(2, 1, 0), (1, 0, 1)]
    e = net.nodes[0].router.routes[2]
    assert (e.next_hop, e.hop_count, e.valid) == (1, 2, True)
    assert net.metrics.data_packets_delivered == 1


def test_destination_does_not_rebroadcast():
    net, log = aodv_net(CHAIN)
    net.nodes[0].originate_data(2, 1000)
    net.engine.run(ns(1))
    assert [s for _, s, _, _, _ in tags(log, "RREQ")] == [0, 1]


def test_valid_route_means_no_new_request():
    net, log = aodv_net(CHAIN)
    net.nodes[0].originate_data(2, 1000)
    net.engine.run(ns(1))
    n = len(tags(log, "RREQ"))
    net.nodes[0].originate_data(2, 1000)
    net.engine.run(ns(1.5))
    assert len(tags(log, "RREQ")) == n


def test_missing_route_emits_one_request_and_bumps_id():
    net, log = aodv_net(CHAIN)
    r = net.nodes[0].router
    before = r.rreq_id
    net.nodes[0].originate_data(2, 1000)
    net.nodes[0].originate_data(2, 1000)
    assert r.rreq_id == before + 1
    assert len(tags(log, "RREQ")) == 1
    assert len(net.nodes[0].pending) == 2


def test_back_to_back_discoveries_use_consecutive_ids():
    net, log = aodv_net(DIAMOND)
    net.nodes[0].originate_data(3, 100)
    net.nodes[0].originate_data(1, 100)
    ids = [m.rreq_id for _, s, _, _, m in tags(log, "RREQ") if s == 0]
    assert ids == [1, 2]


def test_duplicate_request_is_dropped():
    # diamond: C hears A's request via both B and D
    net, log = aodv_net(DIAMOND)
    net.nodes[0].originate_data(3, 1000)
    net.engine.run(ns(1))
    replies_from_c = [e for e in tags(log, "RREP") if e[1] == 3]
    assert len(replies_from_c) == 1
    r = net.nodes[3].router
    assert r.handle_rreq(Rreq(0, 1, 1, 3, 0, 1), 2) == "drop"


def test_gratuitous_reply_from_intermediate():
    net, log = aodv_net(CHAIN, gratuitous_reply=True)
    # B learns a route to C first
    net.nodes[1].originate_data(2, 1000)
    net.engine.run(ns(0.5))
    log.clear()
    net.nodes[0].originate_data(2, 1000)
    net.engine.run(ns(1))
    senders = [s for _, s, _, _, _ in tags(log, "RREQ")]
    assert senders == [0]
    assert [(s, r) for _, s, r, _, _ in tags(log, "RREP")] == [(1, 0)]
    assert net.metrics.data_packets_delivered == 2


def test_use_extends_route_lifetime():
    net, _ = aodv_net(CHAIN, active_route_timeout_s=3)
    net.nodes[0].originate_data(2, 1000)
    net.engine.run(ns(5))  # the reply lifetime (twice the timeout) still holds
    net.nodes[0].originate_data(2, 1000)
    assert net.nodes[0].router.routes[2].expiry == ns(5) + ns(3)


def test_unused_route_expires_and_triggers_rediscovery():
    net, log = aodv_net(CHAIN, active_route_timeout_s=3)
    net.nodes[0].originate_data(2, 1000)
    net.engine.run(ns(20))
    assert net.nodes[0].router.valid_route(2) is None
    n = len(tags(log, "RREQ"))
    net.nodes[0].originate_data(2, 1000)
    assert len(tags(log, "RREQ")) == n + 1


def test_hello_count():
    net = make_net([(i * 100.0, 0) for i in range(5)], "aodv", duration_s=10,
                   params=AodvParams(hello_interval_s=1.0))
    log = tap(net)
    net.engine.run(ns(10) - 1)
    assert len(tags(log, "HELLO")) == 50
    assert net.metrics.totals()["routing_bits_sent"] == 50 * 96


def test_link_loss_without_traffic_is_silent():
    net, log = aodv_net(CHAIN)
    net.nodes[0].originate_data(2, 1000)
    net.engine.run(ns(10))  # traffic long over
    log.clear()
    sent = net.nodes[1].router.handle_link_loss(2)
    assert sent == []
    assert tags(log, "RERR") == []
    assert not net.nodes[1].router.routes[2].valid


def chain_break_net():
    # C walks away from B at t=5; refresh every second
    trajs = [Trajectory.static(0, 0), Trajectory.static(100, 0),
             Trajectory([(0, (200.0, 0)), (5, (200.0, 0)), (5.01, (200.0, 500.0))]),
             Trajectory.static(100, 100)]
    net = make_net(trajectories=trajs, protocol="aodv", duration_s=30, refresh_s=1.0,
                   params=AodvParams(hello_interval_s=0))
    log = tap(net)
    return net, log


def test_chain_break_sends_route_error_to_source():
    # derived: chain-break trace with an active flow
    net, log = chain_break_net()
    for k in range(12):
        net.engine.at(ns(1 + k * 0.5), lambda _: net.nodes[0].originate_data(2, 1000))
    net.engine.run(ns(6.5))
    errs = tags(log, "RERR")
    assert errs and errs[0][1:3] == (1, 0)
    assert errs[0][4].unreachable == 2
    # source invalidated the route and went back to discovery
    assert net.nodes[0].router.valid_route(2) is None
    assert any(s == 0 and t > ns(5) for t, s, _, _, _ in tags(log, "RREQ"))


def test_loss_leaves_unrelated_routes_alone():
    net, _ = aodv_net(DIAMOND)
    net.nodes[0].originate_data(1, 100)
    net.nodes[0].originate_data(2, 100)
    net.engine.run(ns(1))
    r = net.nodes[0].router
    r.handle_link_loss(1)
    assert not r.routes[1].valid
    assert r.valid_route(2) is not None


def test_params_validation():
    with pytest.raises(ValueError):
        AodvParams(active_route_timeout_s=0)
    with pytest.raises(ValueError):
        AodvParams(rreq_retries=-1)
