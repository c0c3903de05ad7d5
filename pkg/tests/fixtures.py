"""Hand-built networks and routes for simulator tests.

Fixture networks carry arbitrary (not necessarily Euclidean) branch lengths;
the coordinates are placeholders.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from evdetour.demandgen import EvParams, Route
from evdetour.netgraph import Branch, Network, Node, Zone


def make_network(n: int, branches: list[tuple[int, int, float]]) -> Network:
    nodes = tuple(Node(i, float(i), 0.0, Zone.OTHER) for i in range(n))
    return Network(nodes, tuple(Branch(u, v, float(w)) for u, v, w in branches))


def make_route(nodes, soc: float) -> Route:
    return Route(tuple(nodes), Zone.OTHER, Zone.OTHER, soc)


@dataclass
class Scenario:
    name: str
    n: int
    branches: list[tuple[int, int, float]]
    stations: list[int]
    route: list[int]
    soc: float
    ev: EvParams = field(default_factory=EvParams)
    expect_ls: list[float] | None = None


# line A-B-C-D (4 km each) with station E hanging off C and D (3 km each)
A, B, C, D, E = range(5)
LINE = [(A, B, 4), (B, C, 4), (C, D, 4), (C, E, 3), (D, E, 3)]

# star around x: c1..c5 accessible, d1 out of range; c2/c3 tie on both rules
X, Y, C1, C2, C3, C4, C5, D1 = range(8)
STAR = [
    (X, Y, 10),
    (X, C1, 4), (C1, Y, 8),
    (X, C2, 6), (C2, Y, 6),
    (X, C3, 6), (C3, Y, 6),
    (X, C4, 3), (C4, Y, 11),
    (X, C5, 2), (C5, Y, 13),
    (X, D1, 20), (D1, Y, 1),
]

SMALL_BATTERY = EvParams(battery_kwh=1.0, consumption_kwh_per_km=0.25)

SCENARIOS: list[Scenario] = [
    Scenario("line-detour", 5, LINE, [E], [A, B, C, D], 2.8, expect_ls=[4.0, 2.0]),
    Scenario("line-stranded", 5, LINE, [], [A, B, C, D], 2.2, expect_ls=[4.0]),
    Scenario("line-enough-charge", 5, LINE, [E], [A, B, C, D], 3.0, expect_ls=[0.0]),
    Scenario("star-tie", 8, STAR, [C1, C2, C3, C4, C5, D1], [X, Y], 1.75, expect_ls=[10.0, 2.0]),
    # station at the deficit node itself: zero detour
    Scenario("station-at-node", 4, [(0, 1, 5), (1, 2, 5), (2, 3, 5)], [1], [0, 1, 2, 3], 1.5,
             expect_ls=[10.0, 0.0]),
    # two deficits; the second one strands the EV
    Scenario("double-deficit", 5, [(0, 1, 3), (1, 2, 3), (2, 3, 3), (3, 4, 3)], [1, 3],
             [0, 1, 2, 3, 4], 0.8, SMALL_BATTERY, expect_ls=[9.0, 6.0]),
    # two deficits, both served
    Scenario("double-served", 6, [(0, 1, 3), (1, 2, 3), (2, 3, 3), (3, 4, 3), (1, 5, 0.5), (5, 3, 0.5)],
             [1, 2], [0, 1, 2, 3, 4], 0.8, SMALL_BATTERY),
    # a station within reach whose onward leg exceeds a full battery is excluded
    Scenario("infeasible-onward", 3, [(0, 1, 3.5), (0, 2, 1), (2, 1, 5)], [2],
             [0, 1], 0.5, SMALL_BATTERY, expect_ls=[3.5]),
    # detour reaches the station through a multi-hop shortest path
    Scenario("multi-hop", 7, [(0, 1, 2), (1, 2, 2), (2, 3, 2), (1, 4, 1), (4, 5, 1), (5, 6, 1), (6, 2, 1)],
             [5], [0, 1, 2, 3], 0.75),
    # triangle: the branch is longer than the two-hop path, stations on both sides
    Scenario("triangle", 3, [(0, 1, 1), (1, 2, 2), (0, 2, 4)], [1], [0, 2], 0.5),
    # grid-ish network with several stations and a long route
    Scenario("grid", 8, [(0, 1, 2), (1, 2, 2), (2, 3, 2), (4, 5, 2), (5, 6, 2), (6, 7, 2),
                         (0, 4, 2), (1, 5, 2), (2, 6, 2), (3, 7, 2)],
             [4, 6], [0, 1, 2, 3, 7], 0.6, EvParams(battery_kwh=1.2, consumption_kwh_per_km=0.25)),
    # stranded before the first branch even with stations far away
    Scenario("far-stations", 6, [(0, 1, 6), (1, 2, 6), (2, 3, 6), (3, 4, 6), (4, 5, 6)], [5],
             [0, 1, 2], 1.0, expect_ls=[12.0]),
]
