"""Application traffic sources and the bucketed measurement series."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import TYPE_CHECKING, Any

import numpy as np

from manetsim.engine import NS_PER_S, ns

if TYPE_CHECKING:
    from manetsim.routing_core import Network, PacketEnvelope

CATEGORIES = (
    "app_bits_sent",
    "app_bits_received",
    "data_bits_dropped",
    "data_packets_dropped",
    "routing_bits_sent",
    "routing_bits_received",
)
CSV_HEADER = "time_s," + ",".join(CATEGORIES)


class MetricSeries:
    """Per-bucket integer counters; bucket index is floor(t / width).

    Samples at or past the end of the run fall into the last bucket, so a run
    of 1800 s with 60 s buckets always has exactly 30 rows.
    """

    def __init__(self, duration_s: float, bucket_width_s: float = 60.0):
        if bucket_width_s <= 0:
            raise ValueError("bucket_width_s must be > 0")
        self.bucket_ns = ns(bucket_width_s)
        self.bucket_width_s = bucket_width_s
        self.n_buckets = max(1, math.ceil(ns(duration_s) / self.bucket_ns))
        self.counts = {c: np.zeros(self.n_buckets, dtype=np.int64) for c in CATEGORIES}

    def bucket(self, t_ns: int) -> int:
        return min(t_ns // self.bucket_ns, self.n_buckets - 1)

    def record(self, category: str, amount: int, t_ns: int) -> None:
        if category not in self.counts:
            raise KeyError(f"unknown metric category {category!r}")
        self.counts[category][self.bucket(t_ns)] += amount

    def totals(self) -> dict[str, int]:
        return {c: int(a.sum()) for c, a in self.counts.items()}

    def rows(self) -> list[list[int]]:
        out = []
        for b in range(self.n_buckets):
            t = b * self.bucket_ns // NS_PER_S
            out.append([t] + [int(self.counts[c][b]) for c in CATEGORIES])
        return out

    def series_csv(self) -> str:
        lines = [CSV_HEADER]
        lines.extend(",".join(str(v) for v in row) for row in self.rows())
        return "\n".join(lines) + "\n"


class Collector:
    """Sink for every counted occurrence in one run."""

    def __init__(self, duration_s: float, bucket_width_s: float = 60.0):
        self.series = MetricSeries(duration_s, bucket_width_s)
        self.drop_reasons: Counter[str] = Counter()
        self.data_header_bits_sent = 0
        self.data_frames_sent = 0
        self.data_packets_originated = 0
        self.data_packets_delivered = 0
        self.control_frames_lost = 0
        self.control_frames_sent: Counter[str] = Counter()

    def record(self, category: str, amount: int, t_ns: int) -> None:
        self.series.record(category, amount, t_ns)

    def totals(self) -> dict[str, int]:
        return self.series.totals()


# ---- traffic -------------------------------------------------------------------


@dataclass
class SessionSpec:
    kind: str  # "cbr" | "file_transfer"
    src: int
    dst: int
    start_s: float
    packet_bits: int
    interval_s: float = 1.0
    stop_s: float = math.inf
    file_bits: int = 0

    def __post_init__(self) -> None:
        if self.kind not in ("cbr", "file_transfer"):
            raise ValueError(f"unknown session kind {self.kind!r}")
        if self.packet_bits <= 0:
            raise ValueError("packet_bits must be positive")
        if self.start_s < 0:
            raise ValueError("start_s must be >= 0")
        if self.kind == "cbr":
            if self.interval_s <= 0:
                raise ValueError("interval_s must be positive")
            if not self.start_s < self.stop_s:
                raise ValueError("start_s must be < stop_s")
        elif self.file_bits <= 0:
            raise ValueError("file_bits must be positive")


@dataclass
class TransferReport:
    session: int
    packets: int
    completion_time_s: float | None  # None = unfinished
    retransmissions: int = 0

    @property
    def finished(self) -> bool:
        return self.completion_time_s is not None


class CbrSession:
    """Fire-and-forget constant-rate source."""

    def __init__(self, sid: int, spec: SessionSpec, net: "Network"):
        self.sid, self.spec, self.net = sid, spec, net
        self.sent = 0
        self._interval = ns(spec.interval_s)
        self._stop = ns(spec.stop_s) if math.isfinite(spec.stop_s) else None

    def start(self) -> None:
        self.net.engine.at(ns(self.spec.start_s), self.tick)

    def tick(self, _payload: Any = None) -> None:
        eng = self.net.engine
        if self._stop is not None and eng.now >= self._stop:
            return
        self.sent += 1
        self.net.nodes[self.spec.src].originate_data(self.spec.dst, self.spec.packet_bits, session=self)
        nxt = eng.now + self._interval
        if self._stop is None or nxt < self._stop:
            eng.at(nxt, self.tick)

    def on_first_tx(self, t_ns: int) -> None:
        pass

    def on_delivered(self, pkt: "PacketEnvelope") -> None:
        pass

    def on_dropped(self, pkt: "PacketEnvelope") -> None:
        pass


class FileTransferSession:
    """Sends a file as back-to-back packets; each dropped packet is re-sent up to
    ``retries`` times. Completion is measured from the first data frame put
    on the air to the last delivery."""

    def __init__(self, sid: int, spec: SessionSpec, net: "Network", retries: int = 3):
        self.sid, self.spec, self.net = sid, spec, net
        self.retries = retries
        self.n_packets = math.ceil(spec.file_bits / spec.packet_bits)
        self.delivered: set[int] = set()
        self.attempts: dict[int, int] = {}
        self.failed = False
        self.first_tx_ns: int | None = None
        self.last_delivery_ns: int | None = None
        self.retransmissions = 0

    def start(self) -> None:
        self.net.engine.at(ns(self.spec.start_s), self._launch)

    def _payload_bits(self, idx: int) -> int:
        last = self.spec.file_bits - self.spec.packet_bits * (self.n_packets - 1)
        return last if idx == self.n_packets - 1 else self.spec.packet_bits

    def _launch(self, _payload: Any = None) -> None:
        for idx in range(self.n_packets):
            self._send(idx)

    def _send(self, idx: int) -> None:
        self.attempts[idx] = self.attempts.get(idx, 0) + 1
        self.net.nodes[self.spec.src].originate_data(
            self.spec.dst, self._payload_bits(idx), session=self, tag=idx
        )

    def on_first_tx(self, t_ns: int) -> None:
        if self.first_tx_ns is None:
            self.first_tx_ns = t_ns

    def on_delivered(self, pkt: "PacketEnvelope") -> None:
        if pkt.tag in self.delivered:
            return
        self.delivered.add(pkt.tag)
        if len(self.delivered) == self.n_packets:
            self.last_delivery_ns = self.net.engine.now

    def on_dropped(self, pkt: "PacketEnvelope") -> None:
        idx = pkt.tag
        if idx in self.delivered:
            return
        if self.attempts.get(idx, 0) <= self.retries:
            self.retransmissions += 1
            self._send(idx)
        else:
            self.failed = True

    def report(self) -> TransferReport:
        done = self.last_delivery_ns is not None and self.first_tx_ns is not None
        t = (self.last_delivery_ns - self.first_tx_ns) / NS_PER_S if done else None
        return TransferReport(self.sid, self.n_packets, t, self.retransmissions)
