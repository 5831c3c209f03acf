from manetsim.engine import ns
from manetsim.routing_core import BUFFER, DropReason, Router
from conftest import CHAIN, make_net


class TableRouter(Router):
    """Fixed next-hop table; buffers when the table has no entry."""

    def __init__(self, node, table=None):
        super().__init__(node)
        self.table = dict(table or {})
        self.gains = []

    def route(self, pkt, prev_hop):
        return self.table.get(pkt.dst, BUFFER)

    def on_link_gain(self, nbr):
        self.gains.append(nbr)


def chain_net(tables, **kw):
    net = make_net(CHAIN, duration_s=100, **kw)
    for node, table in zip(net.nodes, tables):
        node.router = TableRouter(node, table)
    net.engine.run(0)
    return net


def test_packet_to_self_is_delivered_untouched():
    net = chain_net([{}, {}, {}])
    pkt = net.nodes[0].originate_data(0, 1000)
    assert pkt.hop_limit == net.hop_limit
    assert net.metrics.data_packets_delivered == 1


def test_exhausted_hop_limit_is_dropped():
    net = chain_net([{2: 1}, {2: 2}, {}], hop_limit=1)
    net.nodes[0].originate_data(2, 1000)
    net.engine.run(ns(1))
    assert dict(net.metrics.drop_reasons) == {"hop_limit_exceeded": 1}
    ok, _ = net.conservation()
    assert ok


def test_chain_forwarding_uses_two_unicasts():
    # derived: hand trace on the three-node chain
    net = chain_net([{2: 1}, {2: 2}, {}], keep_packets=True)
    sends = []
    net.world.on_frame_sent = lambda f, n: sends.append((f.sender, f.receiver))
    pkt = net.nodes[0].originate_data(2, 1000)
    net.engine.run(ns(1))
    assert sends == [(0, 1), (1, 2)]
    assert pkt.trace == [0, 1, 2]
    assert net.delivered_hops == [2]
    assert net.metrics.data_frames_sent == 2


def test_buffer_capacity_overflow():
    net = chain_net([{}, {}, {}])
    for _ in range(65):
        net.nodes[0].originate_data(2, 100)
    assert len(net.nodes[0].pending) == 64
    assert dict(net.metrics.drop_reasons) == {"buffer_overflow": 1}


def test_buffered_packets_flush_in_arrival_order():
    net = chain_net([{}, {2: 2}, {}], keep_packets=True)
    order = []
    for i in range(5):
        net.nodes[0].originate_data(2, 100, tag=i)
    net.nodes[2].deliver = lambda pkt: order.append(pkt.tag)
    net.nodes[0].router.table[2] = 1
    assert net.nodes[0].flush(2) == 5
    net.engine.run(ns(1))
    assert order == [0, 1, 2, 3, 4]


def test_buffered_packets_time_out():
    net = chain_net([{}, {}, {}])
    for _ in range(3):
        net.nodes[0].originate_data(2, 100)
    net.engine.run(ns(29.9))
    assert len(net.nodes[0].pending) == 3
    net.engine.run(ns(31))
    assert len(net.nodes[0].pending) == 0
    assert dict(net.metrics.drop_reasons) == {"buffer_timeout": 3}
    assert net.metrics.totals()["data_bits_dropped"] == 300


def test_failed_discovery_drops_all_buffered_packets():
    # derived: discovery toward a partitioned destination
    net = make_net([(0, 0), (100, 0), (9000, 0)], "aodv", duration_s=60)
    for _ in range(4):
        net.nodes[0].originate_data(2, 100)
    net.engine.run(ns(60))
    assert dict(net.metrics.drop_reasons) == {"no_route": 4}
    assert net.metrics.series.rows()[0][1 + 2] == 400  # dropped-traffic series


def test_gain_without_protocol_state_is_a_noop():
    net = make_net(CHAIN, duration_s=10)
    net.engine.run(0)
    node = net.nodes[0]
    before = set(node.neighbors)
    node.notify_link_event(1, True)
    assert node.neighbors == before


def test_link_loss_reaches_the_router_once():
    net = chain_net([{}, {}, {}])
    calls = []
    net.nodes[1].router.on_link_loss = calls.append
    net.nodes[1].link_lost(2)
    net.nodes[1].link_lost(2)
    assert calls == [2]
    net.nodes[1].link_lost(2, force=True)
    assert calls == [2, 2]


def test_unicast_failure_without_alternative_is_unrecoverable():
    net = chain_net([{2: 1}, {2: 2}, {}])
    net.nodes[0].router.table[2] = 2  # 0 -> 2 is out of range
    net.nodes[0].originate_data(2, 100)
    assert dict(net.metrics.drop_reasons) == {"link_failure_unrecoverable": 1}


def test_drop_reason_values():
    assert {r.value for r in DropReason} == {
        "no_route", "buffer_overflow", "hop_limit_exceeded", "buffer_timeout", "link_failure_unrecoverable",
    }


def test_conservation_counts_in_flight_frames():
    net = chain_net([{2: 1}, {2: 2}, {}])
    net.nodes[0].originate_data(2, 1000)
    ok, info = net.conservation()
    assert ok
    assert info["in_flight_bits"] == 1000
    net.engine.run(ns(1))
    ok, info = net.conservation()
    assert ok and info["in_flight_bits"] == 0
