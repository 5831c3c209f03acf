import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from manetsim.aodv import AodvParams, AodvRouter
from manetsim.dsr import DsrParams, DsrRouter
from manetsim.engine import Engine, ns
from manetsim.metrics import Collector
from manetsim.radio import RadioConfig, Trajectory, World
from manetsim.routing_core import Network
from manetsim.tora import ToraParams, ToraRouter


def make_net(positions=None, protocol=None, trajectories=None, range_m=150.0, seed=1,
             duration_s=100.0, queue_bits=None, refresh_s=10.0, params=None, **net_kw):
    """Small network helper; positions are (x, y) tuples."""
    engine = Engine(seed)
    trajs = trajectories or [Trajectory.static(*p) for p in positions]
    cfg = RadioConfig(range_m=range_m, refresh_interval_s=refresh_s, queue_bits=queue_bits)
    world = World(engine, cfg, trajs)
    metrics = Collector(duration_s, 10.0)
    factory = None
    if protocol == "aodv":
        p = params or AodvParams(hello_interval_s=0)
        factory = lambda node: AodvRouter(node, p)
    elif protocol == "dsr":
        p = params or DsrParams()
        factory = lambda node: DsrRouter(node, p)
    elif protocol == "tora":
        p = params or ToraParams()
        factory = lambda node: ToraRouter(node, p)
    net = Network(engine, world, metrics, factory, **net_kw)
    net.start(ns(duration_s))
    return net


# chain A=0, B=1, C=2 with 100 m spacing and 150 m range
CHAIN = [(0.0, 0.0), (100.0, 0.0), (200.0, 0.0)]
# diamond A=0, B=1, D=2, C=3: A-B, A-D, B-C, D-C
DIAMOND = [(0.0, 0.0), (100.0, 80.0), (100.0, -80.0), (200.0, 0.0)]


@pytest.fixture
def chain_positions():
    return list(CHAIN)


@pytest.fixture
def diamond_positions():
    return list(DIAMOND)


# one line per acceptance criterion, printed at the end of the session
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
