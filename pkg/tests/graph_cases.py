"""Seeded random connected unit-disk graphs shared by the property suites."""

import random

from oracles import is_connected, unit_disk_graph

RANGE_M = 150.0


def connected_layouts(count=100, max_nodes=12, seed=2024):
    rng = random.Random(seed)
    out = []
    while len(out) < count:
        n = rng.randint(2, max_nodes)
        side = rng.choice([200.0, 300.0, 450.0])
        pts = [(round(rng.uniform(0, side), 1), round(rng.uniform(0, side), 1)) for _ in range(n)]
        if is_connected(unit_disk_graph(pts, RANGE_M)):
            out.append(pts)
    return out
