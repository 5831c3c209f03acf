"""Scenario files, node placement, presets and the run driver."""

from __future__ import annotations

import math
import re
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

from manetsim.aodv import AodvParams, AodvRouter
from manetsim.dsr import DsrParams, DsrRouter
from manetsim.engine import Engine, ns
from manetsim.metrics import Collector, CbrSession, FileTransferSession, SessionSpec, TransferReport
from manetsim.radio import RadioConfig, Trajectory, World
from manetsim.routing_core import (
    BUFFER_CAPACITY, BUFFER_TIMEOUT_S, DATA_HEADER_BITS, DEFAULT_HOP_LIMIT, Network,
)
from manetsim.tora import CycleDetected, ToraParams, ToraRouter, acyclic, height_vector

PROTOCOLS = ("aodv", "dsr", "tora")
DEFAULT_SEED = 1


class ConfigError(ValueError):
    def __init__(self, message: str, key: str | None = None, line: int | None = None):
        where = []
        if key:
            where.append(key)
        if line is not None:
            where.append(f"line {line}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)
        self.key = key
        self.line = line


class InvariantViolation(RuntimeError):
    pass


@dataclass
class PlacementSpec:
    kind: str = "two_clouds"  # two_clouds | explicit | random
    per_side: int = 20
    cloud_offset_m: float = 1100.0
    cloud_width_m: float = 500.0
    cloud_height_m: float = 800.0
    grid_pitch_m: float = 100.0
    area_m: float = 2000.0
    count: int | None = None
    positions: dict[int, tuple[float, float]] = field(default_factory=dict)


@dataclass
class MobilitySpec:
    model: str = "none"  # none | sweep
    speed_mps: float = 5.0
    area_m: float = 2000.0
    static_nodes: tuple[int, ...] = (0,)


@dataclass
class TrafficSpec:
    pattern: str = "none"  # none | peer_and_server | to_server
    packet_bits: int = 1024
    interval_s: float = 1.0
    start_s: float = 1.0
    stop_s: float | None = None


@dataclass
class CoreParams:
    hop_limit: int = DEFAULT_HOP_LIMIT
    buffer_capacity: int = BUFFER_CAPACITY
    buffer_timeout_s: float = BUFFER_TIMEOUT_S
    data_header_bits: int = DATA_HEADER_BITS
    file_retries: int = 3


@dataclass
class Scenario:
    name: str = "scenario"
    seed: int = DEFAULT_SEED
    duration_s: float = 1800.0
    protocol: str = "aodv"
    bucket_width_s: float = 60.0
    radio: RadioConfig = field(default_factory=RadioConfig)
    placement: PlacementSpec = field(default_factory=PlacementSpec)
    mobility: MobilitySpec = field(default_factory=MobilitySpec)
    trajectories: dict[int, list[tuple[float, tuple[float, float]]]] = field(default_factory=dict)
    traffic: TrafficSpec = field(default_factory=TrafficSpec)
    sessions: list[SessionSpec] = field(default_factory=list)
    aodv: AodvParams = field(default_factory=AodvParams)
    dsr: DsrParams = field(default_factory=DsrParams)
    tora: ToraParams = field(default_factory=ToraParams)
    core: CoreParams = field(default_factory=CoreParams)
    defaults_applied: list[str] = field(default_factory=list)

    @property
    def node_count(self) -> int:
        p = self.placement
        if p.kind == "two_clouds":
            return 2 * p.per_side + 1
        if p.kind == "explicit":
            return len(p.positions)
        return int(p.count or 0)

    def validate(self) -> "Scenario":
        if self.protocol not in PROTOCOLS:
            raise ConfigError(f"unknown protocol {self.protocol!r}; expected one of {', '.join(PROTOCOLS)}",
                              "scenario.protocol")
        if not self.duration_s > 0:
            raise ConfigError("duration_s must be > 0", "scenario.duration_s")
        n = self.node_count
        if n < 1:
            raise ConfigError("scenario needs at least one node", "nodes.count")
        if self.placement.kind == "explicit" and sorted(self.placement.positions) != list(range(n)):
            raise ConfigError("explicit positions must cover ids 0..n-1", "positions")
        for nid in self.trajectories:
            if not 0 <= nid < n:
                raise ConfigError(f"trajectory for unknown node {nid}", "trajectories")
        for i, s in enumerate(self.sessions):
            for end in (s.src, s.dst):
                if not 0 <= end < n:
                    raise ConfigError(f"session references node {end} >= node count {n}", f"sessions[{i}]")
        return self


# ---- config text -------------------------------------------------------------

_SECTIONS = ("scenario", "radio", "nodes", "positions", "mobility", "trajectories",
             "traffic", "sessions", "aodv", "dsr", "tora", "core")


def _parse_ini(text: str) -> dict[str, dict[str, tuple[str, int]]]:
    data: dict[str, dict[str, tuple[str, int]]] = {}
    section = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            m = re.fullmatch(r"\[\s*([A-Za-z_][\w]*)\s*\]", line)
            if not m:
                raise ConfigError(f"malformed section header {line!r}", None, lineno)
            section = m.group(1).lower()
            if section not in _SECTIONS:
                raise ConfigError(f"unknown section [{section}]", section, lineno)
            data.setdefault(section, {})
            continue
        sep = "=" if "=" in line else (":" if section == "trajectories" and ":" in line else None)
        if section is None or sep is None:
            raise ConfigError(f"expected 'key = value', got {line!r}", section, lineno)
        key, value = (p.strip() for p in line.split(sep, 1))
        if key in data[section]:
            raise ConfigError("duplicate key", f"{section}.{key}", lineno)
        data[section][key] = (value, lineno)
    return data


class _Reader:
    def __init__(self, data: dict[str, dict[str, tuple[str, int]]], defaults: list[str]):
        self.data = data
        self.defaults = defaults
        self.used: set[tuple[str, str]] = set()

    def get(self, section: str, key: str, conv, default: Any = None, required: bool = False):
        entry = self.data.get(section, {}).get(key)
        path = f"{section}.{key}"
        if entry is None:
            if required:
                raise ConfigError("missing required key", path)
            if default is not None:
                self.defaults.append(f"{path}={default}")
            return default
        self.used.add((section, key))
        value, line = entry
        try:
            return conv(value)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"bad value {value!r}: {exc}", path, line) from None

    def unused(self) -> list[tuple[str, int]]:
        skip = {"positions", "trajectories", "sessions"}
        out = []
        for sec, keys in self.data.items():
            if sec in skip:
                continue
            for k, (_, line) in keys.items():
                if (sec, k) not in self.used:
                    out.append((f"{sec}.{k}", line))
        return out


def _bool(v: str) -> bool:
    s = v.strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError("expected a boolean")


def _opt_int(v: str) -> int | None:
    return None if v.strip().lower() in ("none", "inf", "unbounded") else int(v)


def _id_list(v: str) -> tuple[int, ...]:
    return tuple(int(x) for x in v.split(",") if x.strip())


def _point(v: str) -> tuple[float, float]:
    x, y = (float(p) for p in v.split(","))
    return x, y


def _waypoints(v: str) -> list[tuple[float, tuple[float, float]]]:
    out = []
    for chunk in v.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        m = re.fullmatch(r"\(\s*([^,]+),([^,]+),([^,]+)\)", chunk)
        if not m:
            raise ValueError(f"waypoint {chunk!r} is not (t,x,y)")
        t, x, y = (float(g) for g in m.groups())
        out.append((t, (x, y)))
    Trajectory(out)  # validates ordering
    return out


def _session(v: str) -> SessionSpec:
    parts = [p.strip() for p in v.split(",")]
    kind = parts[0]
    if kind == "cbr":
        if len(parts) not in (6, 7):
            raise ValueError("cbr needs: cbr, src, dst, start_s, packet_bits, interval_s[, stop_s]")
        stop = float(parts[6]) if len(parts) == 7 else math.inf
        return SessionSpec("cbr", int(parts[1]), int(parts[2]), float(parts[3]), int(parts[4]),
                           interval_s=float(parts[5]), stop_s=stop)
    if kind == "file_transfer":
        if len(parts) != 6:
            raise ValueError("file_transfer needs: file_transfer, src, dst, start_s, packet_bits, file_bits")
        return SessionSpec("file_transfer", int(parts[1]), int(parts[2]), float(parts[3]), int(parts[4]),
                           file_bits=int(parts[5]))
    raise ValueError(f"unknown session kind {kind!r}")


def parse_scenario(text: str) -> Scenario:
    data = _parse_ini(text)
    defaults: list[str] = []
    r = _Reader(data, defaults)
    sc = Scenario(defaults_applied=defaults)
    sc.name = r.get("scenario", "name", str, "scenario")
    sc.seed = r.get("scenario", "seed", int, DEFAULT_SEED)
    sc.duration_s = r.get("scenario", "duration_s", float, 1800.0)
    sc.protocol = r.get("scenario", "protocol", lambda v: v.strip().lower(), required=True)
    sc.bucket_width_s = r.get("scenario", "bucket_width_s", float, 60.0)
    if sc.protocol not in PROTOCOLS:
        line = data["scenario"]["protocol"][1]
        raise ConfigError(f"unknown protocol {sc.protocol!r}; expected one of {', '.join(PROTOCOLS)}",
                          "scenario.protocol", line)

    rd = RadioConfig()
    try:
        sc.radio = RadioConfig(
            range_m=r.get("radio", "range_m", float, rd.range_m),
            data_rate_bps=r.get("radio", "data_rate_bps", int, rd.data_rate_bps),
            refresh_interval_s=r.get("radio", "refresh_interval_s", float, rd.refresh_interval_s),
            queue_bits=r.get("radio", "queue_bits", _opt_int, rd.queue_bits),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc), "radio") from None

    pd = PlacementSpec()
    kind = r.get("nodes", "placement", str, pd.kind)
    if kind not in ("two_clouds", "explicit", "random"):
        raise ConfigError(f"unknown placement {kind!r}", "nodes.placement")
    pl = PlacementSpec(kind=kind)
    if kind == "two_clouds":
        pl.per_side = r.get("nodes", "per_side", int, pd.per_side)
        pl.cloud_offset_m = r.get("nodes", "cloud_offset_m", float, pd.cloud_offset_m)
        pl.cloud_width_m = r.get("nodes", "cloud_width_m", float, pd.cloud_width_m)
        pl.cloud_height_m = r.get("nodes", "cloud_height_m", float, pd.cloud_height_m)
        pl.grid_pitch_m = r.get("nodes", "grid_pitch_m", float, pd.grid_pitch_m)
    elif kind == "random":
        pl.count = r.get("nodes", "count", int, required=True)
        pl.area_m = r.get("nodes", "area_m", float, pd.area_m)
    else:
        for key, (value, line) in data.get("positions", {}).items():
            try:
                pl.positions[int(key)] = _point(value)
            except ValueError:
                raise ConfigError(f"bad position {value!r}", f"positions.{key}", line) from None
    sc.placement = pl
    count = r.get("nodes", "count", int) if kind != "random" else pl.count
    if count is not None and count != sc.node_count:
        line = data["nodes"]["count"][1]
        raise ConfigError(f"count {count} disagrees with placement ({sc.node_count} nodes)", "nodes.count", line)

    md = MobilitySpec()
    sc.mobility = MobilitySpec(
        model=r.get("mobility", "model", str, md.model),
        speed_mps=r.get("mobility", "speed_mps", float, md.speed_mps),
        area_m=r.get("mobility", "area_m", float, md.area_m),
        static_nodes=r.get("mobility", "static_nodes", _id_list, md.static_nodes),
    )
    if sc.mobility.model not in ("none", "sweep"):
        raise ConfigError(f"unknown mobility model {sc.mobility.model!r}", "mobility.model")
    for key, (value, line) in data.get("trajectories", {}).items():
        try:
            sc.trajectories[int(key)] = _waypoints(value)
        except ValueError as exc:
            raise ConfigError(str(exc), f"trajectories.{key}", line) from None

    td = TrafficSpec()
    sc.traffic = TrafficSpec(
        pattern=r.get("traffic", "pattern", str, td.pattern),
        packet_bits=r.get("traffic", "packet_bits", int, td.packet_bits),
        interval_s=r.get("traffic", "interval_s", float, td.interval_s),
        start_s=r.get("traffic", "start_s", float, td.start_s),
        stop_s=r.get("traffic", "stop_s", float),
    )
    if sc.traffic.pattern not in ("none", "peer_and_server", "to_server"):
        raise ConfigError(f"unknown traffic pattern {sc.traffic.pattern!r}", "traffic.pattern")
    for key, (value, line) in data.get("sessions", {}).items():
        try:
            sc.sessions.append(_session(value))
        except ValueError as exc:
            raise ConfigError(str(exc), f"sessions.{key}", line) from None

    try:
        ad, dd, tdp = AodvParams(), DsrParams(), ToraParams()
        sc.aodv = AodvParams(
            active_route_timeout_s=r.get("aodv", "active_route_timeout_s", float, ad.active_route_timeout_s),
            hello_interval_s=r.get("aodv", "hello_interval_s", float, ad.hello_interval_s),
            gratuitous_reply=r.get("aodv", "gratuitous_reply", _bool, ad.gratuitous_reply),
            rreq_retries=r.get("aodv", "rreq_retries", int, ad.rreq_retries),
        )
        sc.dsr = DsrParams(
            cache_capacity=r.get("dsr", "cache_capacity", int, dd.cache_capacity),
            request_retries=r.get("dsr", "request_retries", int, dd.request_retries),
        )
        sc.tora = ToraParams(
            query_retries=r.get("tora", "query_retries", int, tdp.query_retries),
            max_height=r.get("tora", "max_height", int, tdp.max_height),
        )
        cd = CoreParams()
        sc.core = CoreParams(
            hop_limit=r.get("core", "hop_limit", int, cd.hop_limit),
            buffer_capacity=r.get("core", "buffer_capacity", int, cd.buffer_capacity),
            buffer_timeout_s=r.get("core", "buffer_timeout_s", float, cd.buffer_timeout_s),
            data_header_bits=r.get("core", "data_header_bits", int, cd.data_header_bits),
            file_retries=r.get("core", "file_retries", int, cd.file_retries),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from None

    leftovers = r.unused()
    if leftovers:
        key, line = leftovers[0]
        raise ConfigError("unknown key", key, line)
    return sc.validate()


def load_scenario(source: str | Path) -> Scenario:
    """Load a preset by name or a scenario file by path."""
    name = str(source)
    if name in PRESETS:
        return preset(name)
    path = Path(source)
    if not path.exists():
        raise ConfigError(f"no such scenario file or preset: {name}")
    return parse_scenario(path.read_text(encoding="utf-8"))


# ---- placement and mobility ------------------------------------------------------


def place_nodes(spec: PlacementSpec, seed: int) -> list[tuple[float, float]]:
    """Initial coordinates; node 0 is the server for two_clouds."""
    engine = Engine(seed)
    rs = engine.stream("placement")
    if spec.kind == "explicit":
        return [spec.positions[i] for i in range(len(spec.positions))]
    if spec.kind == "random":
        a = spec.area_m
        pts = [(a / 2, a / 2)]
        pts += [(rs.uniform(0, a), rs.uniform(0, a)) for _ in range(int(spec.count) - 1)]
        return pts
    k = spec.per_side
    w, h, pitch = spec.cloud_width_m, spec.cloud_height_m, spec.grid_pitch_m
    cols = max(1, math.ceil(math.sqrt(k * w / h)))
    rows = math.ceil(k / cols)
    if cols * pitch > w or rows * pitch > h:
        raise ConfigError(
            f"cloud {w:g}x{h:g} m cannot hold a {cols}x{rows} grid at {pitch:g} m pitch", "nodes.grid_pitch_m"
        )
    cw, ch = w / cols, h / rows
    pts = [(0.0, 0.0)]
    for sign in (-1.0, 1.0):
        cx = sign * spec.cloud_offset_m
        x0, y0 = cx - w / 2, -h / 2
        for i in range(k):
            c, rr = i % cols, i // cols
            pts.append((x0 + (c + rs.draw()) * cw, y0 + (rr + rs.draw()) * ch))
    return pts


def sweep_trajectory(start: tuple[float, float], heading: tuple[int, int], speed: float,
                     area: float, duration: float) -> list[tuple[float, tuple[float, float]]]:
    """Straight diagonal motion reflecting off the walls of a square area."""
    x, y = start
    vx = heading[0] * speed / math.sqrt(2)
    vy = heading[1] * speed / math.sqrt(2)
    t = 0.0
    pts = [(0.0, (x, y))]
    while t < duration:
        tx = ((area - x) / vx if vx > 0 else -x / vx) if vx else math.inf
        ty = ((area - y) / vy if vy > 0 else -y / vy) if vy else math.inf
        dt = min(tx, ty, duration - t)
        if dt <= 0:
            dt = min(duration - t, 1e-9) if t < duration else 0
        x, y, t = x + vx * dt, y + vy * dt, t + dt
        x, y = min(max(x, 0.0), area), min(max(y, 0.0), area)
        if pts[-1][0] < t:
            pts.append((t, (x, y)))
        if tx <= dt + 1e-12:
            vx = -vx
        if ty <= dt + 1e-12:
            vy = -vy
    return pts


def build_trajectories(sc: Scenario) -> list[Trajectory]:
    pts = place_nodes(sc.placement, sc.seed)
    trajs = [Trajectory.static(*p) for p in pts]
    m = sc.mobility
    if m.model == "sweep":
        rs = Engine(sc.seed).stream("mobility")
        for i, p in enumerate(pts):
            if i in m.static_nodes:
                continue
            heading = (1 if rs.draw() < 0.5 else -1, 1 if rs.draw() < 0.5 else -1)
            trajs[i] = Trajectory(sweep_trajectory(p, heading, m.speed_mps, m.area_m, sc.duration_s))
    for nid, wps in sc.trajectories.items():
        trajs[nid] = Trajectory(wps)
    return trajs


def generated_sessions(sc: Scenario) -> list[SessionSpec]:
    tr = sc.traffic
    if tr.pattern == "none":
        return []
    stop = tr.stop_s if tr.stop_s is not None else sc.duration_s
    workstations = list(range(1, sc.node_count))
    out = []
    half = len(workstations) // 2
    for i, w in enumerate(workstations):
        if tr.pattern == "peer_and_server" and half:
            peer = workstations[(i + half) % len(workstations)]
            out.append(SessionSpec("cbr", w, peer, tr.start_s, tr.packet_bits, tr.interval_s, stop))
        out.append(SessionSpec("cbr", w, 0, tr.start_s, tr.packet_bits, tr.interval_s, stop))
    return out


# ---- running -----------------------------------------------------------------------


@dataclass
class RunResult:
    scenario: Scenario
    csv: str
    totals: dict[str, int]
    drop_reasons: dict[str, int]
    transfers: list[TransferReport]
    conservation_ok: bool
    conservation: dict[str, int]
    loop_violations: int
    static: bool
    wall_clock_s: float
    events: int
    extra: dict[str, Any]
    network: Network | None = None

    @property
    def ok(self) -> bool:
        return self.conservation_ok and not (self.static and self.loop_violations)

    def summary(self) -> dict[str, Any]:
        sc = self.scenario
        return {
            "scenario": sc.name,
            "protocol": sc.protocol,
            "seed": sc.seed,
            "duration_s": sc.duration_s,
            "nodes": sc.node_count,
            "range_m": sc.radio.range_m,
            "defaults_applied": list(sc.defaults_applied),
            "totals": self.totals,
            "drop_reasons": self.drop_reasons,
            "transfers": [
                {"session": t.session, "packets": t.packets, "completion_time_s": t.completion_time_s,
                 "retransmissions": t.retransmissions}
                for t in self.transfers
            ],
            "conservation": dict(self.conservation, ok=self.conservation_ok),
            "loop_violations": self.loop_violations,
            "events": self.events,
            "wall_clock_s": round(self.wall_clock_s, 3),
            **self.extra,
        }


def _router_factory(sc: Scenario):
    if sc.protocol == "aodv":
        return lambda node: AodvRouter(node, sc.aodv)
    if sc.protocol == "dsr":
        return lambda node: DsrRouter(node, sc.dsr)
    return lambda node: ToraRouter(node, sc.tora)


def build_network(sc: Scenario, keep_packets: bool = False, check_dag: bool = False) -> tuple[Network, list]:
    sc.validate()
    engine = Engine(sc.seed)
    world = World(engine, sc.radio, build_trajectories(sc))
    metrics = Collector(sc.duration_s, sc.bucket_width_s)
    c = sc.core
    net = Network(engine, world, metrics, _router_factory(sc), hop_limit=c.hop_limit,
                  buffer_capacity=c.buffer_capacity, buffer_timeout_s=c.buffer_timeout_s,
                  data_header_bits=c.data_header_bits, keep_packets=keep_packets)
    if check_dag and sc.protocol == "tora":
        routers = [n.router for n in net.nodes]
        net.dag_checks = 0

        def _check(dest: int) -> None:
            net.dag_checks += 1
            if not acyclic(world.adjacency(engine.now), height_vector(routers, dest)):
                raise CycleDetected(f"height graph for destination {dest} has a cycle at t={engine.now} ns")

        net.on_height_change = _check
    sessions = []
    for i, spec in enumerate(generated_sessions(sc) + list(sc.sessions)):
        if spec.kind == "cbr":
            sessions.append(CbrSession(i, spec, net))
        else:
            sessions.append(FileTransferSession(i, spec, net, retries=c.file_retries))
    return net, sessions


def run(sc: Scenario, keep_packets: bool = False, check_dag: bool = False, keep_network: bool = False) -> RunResult:
    t0 = time.perf_counter()
    net, sessions = build_network(sc, keep_packets=keep_packets, check_dag=check_dag)
    end = ns(sc.duration_s)
    net.start(end)
    for s in sessions:
        s.start()
    net.engine.run(end)
    ok, info = net.conservation()
    m = net.metrics
    extra = {
        "data_packets_originated": m.data_packets_originated,
        "data_packets_delivered": m.data_packets_delivered,
        "data_frames_sent": m.data_frames_sent,
        "data_header_bits_sent": m.data_header_bits_sent,
        "control_frames_sent": dict(sorted(m.control_frames_sent.items())),
        "control_frames_lost": m.control_frames_lost,
    }
    if hasattr(net, "dag_checks"):
        extra["dag_checks"] = net.dag_checks
    transfers = [s.report() for s in sessions if isinstance(s, FileTransferSession)]
    return RunResult(
        scenario=sc,
        csv=m.series.series_csv(),
        totals=m.totals(),
        drop_reasons=dict(sorted(m.drop_reasons.items())),
        transfers=transfers,
        conservation_ok=ok,
        conservation=info,
        loop_violations=len(net.loop_violations),
        static=net.world.static,
        wall_clock_s=time.perf_counter() - t0,
        events=net.engine.dispatched,
        extra=extra,
        network=net if keep_network else None,
    )


# ---- presets ---------------------------------------------------------------------

_PERF_TEMPLATE = """\
[scenario]
name = {name}
seed = 1
duration_s = 1800
protocol = {protocol}

[radio]
range_m = 1500
data_rate_bps = 1000000
refresh_interval_s = 10
queue_bits = 64000

[nodes]
placement = two_clouds
per_side = {per_side}
cloud_offset_m = 1100
cloud_width_m = 500
cloud_height_m = 800
grid_pitch_m = 100

[traffic]
pattern = peer_and_server
packet_bits = 1024
interval_s = 1
start_s = 1
{extra}"""

_MOB_TEMPLATE = """\
[scenario]
name = {name}
seed = 1
duration_s = 1800
protocol = {protocol}

[radio]
range_m = {range_m}
data_rate_bps = 1000000
refresh_interval_s = {refresh}
queue_bits = 64000

[nodes]
placement = random
count = 21
area_m = 2000

[mobility]
model = sweep
speed_mps = 5
area_m = 2000
static_nodes = 0

[traffic]
pattern = peer_and_server
packet_bits = 1024
interval_s = 1
start_s = 1
"""

_LT = """
[aodv]
gratuitous_reply = true
active_route_timeout_s = 30
"""

PRESET_TEXT: dict[str, str] = {
    "dsr40": _PERF_TEMPLATE.format(name="dsr40", protocol="dsr", per_side=20, extra=""),
    "dsr80": _PERF_TEMPLATE.format(name="dsr80", protocol="dsr", per_side=40, extra=""),
    "tora40": _PERF_TEMPLATE.format(name="tora40", protocol="tora", per_side=20, extra=""),
    "tora80": _PERF_TEMPLATE.format(name="tora80", protocol="tora", per_side=40, extra=""),
    "aodv40_default": _PERF_TEMPLATE.format(name="aodv40_default", protocol="aodv", per_side=20, extra=""),
    "aodv40_lt": _PERF_TEMPLATE.format(name="aodv40_lt", protocol="aodv", per_side=20, extra=_LT),
    "mob_dsr_500": _MOB_TEMPLATE.format(name="mob_dsr_500", protocol="dsr", range_m=500, refresh=10),
    "mob_dsr_1000": _MOB_TEMPLATE.format(name="mob_dsr_1000", protocol="dsr", range_m=1000, refresh=10),
    "mob_aodv_500": _MOB_TEMPLATE.format(name="mob_aodv_500", protocol="aodv", range_m=500, refresh=5),
    "mob_aodv_1000": _MOB_TEMPLATE.format(name="mob_aodv_1000", protocol="aodv", range_m=1000, refresh=5),
    "mob_aodv_1500": _MOB_TEMPLATE.format(name="mob_aodv_1500", protocol="aodv", range_m=1500, refresh=5),
}

PRESET_DESCRIPTIONS: dict[str, str] = {
    "dsr40": "static two-cloud topology, DSR, 40 workstations + server, 1500 m range",
    "dsr80": "static two-cloud topology, DSR, 80 workstations + server, 1500 m range",
    "tora40": "static two-cloud topology, TORA, 40 workstations + server, 1500 m range",
    "tora80": "static two-cloud topology, TORA, 80 workstations + server, 1500 m range",
    "aodv40_default": "static two-cloud topology, AODV defaults (3 s route timeout), 40 workstations",
    "aodv40_lt": "static two-cloud topology, AODV light-traffic tuning (gratuitous reply, 30 s timeout)",
    "mob_dsr_500": "mobility sweep, DSR, 20 mobile nodes + server, 500 m elimination, 10 s refresh",
    "mob_dsr_1000": "mobility sweep, DSR, 20 mobile nodes + server, 1000 m elimination, 10 s refresh",
    "mob_aodv_500": "mobility sweep, AODV, 20 mobile nodes + server, 500 m elimination, 5 s refresh",
    "mob_aodv_1000": "mobility sweep, AODV, 20 mobile nodes + server, 1000 m elimination, 5 s refresh",
    "mob_aodv_1500": "mobility sweep, AODV, 20 mobile nodes + server, 1500 m elimination, 5 s refresh",
}
PRESETS = tuple(PRESET_TEXT)


def preset(name: str, seed: int | None = None) -> Scenario:
    if name not in PRESET_TEXT:
        raise ConfigError(f"unknown preset {name!r}")
    sc = parse_scenario(PRESET_TEXT[name])
    sc.defaults_applied = [d for d in sc.defaults_applied if not d.startswith("scenario.seed")]
    if seed is not None:
        sc.seed = seed
    return sc


def with_protocol(sc: Scenario, protocol: str) -> Scenario:
    return replace(sc, protocol=protocol, name=f"{sc.name}_{protocol}").validate()
