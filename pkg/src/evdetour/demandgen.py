"""Synthetic travel demand: route growth through special areas, SOC assignment, flows.

A route grows node by node from a random origin towards a destination zone.
The next node must be a neighbour of the current node, unvisited, and lie in
a "special area" polygon spanned by the current node and the bounding box of
the destination zone, which keeps routes heading towards their destination.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DegenerateAreaError, DemandExhaustedError, InvalidRouteError, UnknownBranchError
from .geometry import Point, points_in_polygon
from .netgraph import MAX_BRANCH_KM, ZONES, DistanceMatrix, Network, Zone, branch_key

AREA_SHARE_THRESHOLD = 0.4
DEFAULT_ZONE_PROBS = {
    Zone.RESIDENTIAL: 0.45,
    Zone.COMMERCIAL: 0.30,
    Zone.INDUSTRIAL: 0.15,
    Zone.OTHER: 0.10,
}


@dataclass(frozen=True)
class EvParams:
    battery_kwh: float = 50.0
    consumption_kwh_per_km: float = 0.25

    def __post_init__(self):
        if self.battery_kwh <= 0 or self.consumption_kwh_per_km <= 0:
            raise ValueError("battery capacity and consumption must be positive")

    @property
    def full_range_km(self) -> float:
        return self.battery_kwh / self.consumption_kwh_per_km


@dataclass
class Route:
    nodes: tuple[int, ...]
    origin_zone: Zone
    dest_zone: Zone
    initial_soc_kwh: float = float("nan")

    def __post_init__(self):
        self.nodes = tuple(int(v) for v in self.nodes)
        self.origin_zone = Zone.parse(self.origin_zone)
        self.dest_zone = Zone.parse(self.dest_zone)

    def to_dict(self) -> dict:
        return {
            "nodes": list(self.nodes),
            "origin_zone": self.origin_zone.value,
            "dest_zone": self.dest_zone.value,
            "initial_soc_kwh": self.initial_soc_kwh,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Route":
        return cls(tuple(d["nodes"]), d["origin_zone"], d["dest_zone"], float(d["initial_soc_kwh"]))


def _normalize_probs(probs: dict, name: str) -> dict[Zone, float]:
    out = {z: 0.0 for z in ZONES}
    for z, p in probs.items():
        out[Zone.parse(z)] = float(p)
    if any(p < 0 for p in out.values()) or not math.isclose(sum(out.values()), 1.0, abs_tol=1e-9):
        raise ValueError(f"{name} must be non-negative and sum to 1, got {out}")
    return out


@dataclass
class DemandConfig:
    n_routes: int = 10000
    origin_zone_probs: dict = field(default_factory=lambda: dict(DEFAULT_ZONE_PROBS))
    dest_zone_probs: dict | None = None
    min_nodes: int = 2
    max_nodes: int = 24
    continue_prob: float = 0.5
    max_attempts_per_route: int = 50

    def __post_init__(self):
        self.origin_zone_probs = _normalize_probs(self.origin_zone_probs, "origin_zone_probs")
        if self.dest_zone_probs is None:
            self.dest_zone_probs = dict(self.origin_zone_probs)
        self.dest_zone_probs = _normalize_probs(self.dest_zone_probs, "dest_zone_probs")
        if self.n_routes < 0:
            raise ValueError("n_routes must be non-negative")
        if self.min_nodes < 2 or self.max_nodes < self.min_nodes:
            raise ValueError(f"need 2 <= min_nodes <= max_nodes, got {self.min_nodes}, {self.max_nodes}")
        if not 0.0 <= self.continue_prob <= 1.0:
            raise ValueError("continue_prob must lie in [0, 1]")


@dataclass(frozen=True)
class SpecialArea:
    """Polygon constraining the next node of a growing route.

    ``region`` is the position of the current node relative to the
    destination box: a corner ("I", "III", "V", "VII"), an edge ("II", "IV",
    "VI", "VIII") or "inside". ``fallback`` marks an inside-box choice made
    because fewer than two quadrilaterals passed the share threshold.
    """

    polygon: tuple[Point, ...]
    region: str
    fallback: bool = False


def route_length_km(net: Network, nodes: Sequence[int]) -> float:
    total = 0.0
    for a, b in zip(nodes, nodes[1:]):
        try:
            total += net.lengths[branch_key(a, b)]
        except KeyError:
            raise UnknownBranchError(f"route uses missing branch ({a}, {b})") from None
    return total


# --------------------------------------------------------------------------
# special areas
# --------------------------------------------------------------------------

def _box_corners(pts: np.ndarray) -> list[Point]:
    x0, y0 = pts.min(axis=0).tolist()
    x1, y1 = pts.max(axis=0).tolist()
    if x0 == x1 and y0 == y1:
        raise DegenerateAreaError(f"destination nodes collapse to the single point ({x0}, {y0})")
    # counter-clockwise from bottom-left
    return [(x0, y0), (x1, y0), (x1, y1), (x0, y1)]


def _replace_corner(corners: list[Point], m: int, p: Point) -> tuple[Point, ...]:
    return tuple(p if i == m else c for i, c in enumerate(corners))


def area_candidates(
    current_xy: Point, dest_pts: np.ndarray
) -> tuple[str, list[tuple[Point, ...]], bool]:
    """All admissible special areas for a current position and destination node set.

    Returns ``(region, polygons, fallback)``; only the inside-box case yields
    more than one polygon.
    """
    corners = _box_corners(dest_pts)
    (x0, y0), _, (x1, y1), _ = corners
    x, y = current_xy
    p = (float(x), float(y))
    col = 0 if x < x0 else (2 if x > x1 else 1)
    row = 0 if y < y0 else (2 if y > y1 else 1)
    if (col, row) == (1, 1):
        polys = [_replace_corner(corners, m, p) for m in range(4)]
        counts = [int(points_in_polygon(dest_pts, poly).sum()) for poly in polys]
        keep = [i for i, c in enumerate(counts) if c > AREA_SHARE_THRESHOLD * len(dest_pts)]
        fallback = len(keep) < 2
        if fallback:
            keep = sorted(sorted(range(4), key=lambda i: -counts[i])[:2])
        return "inside", [polys[i] for i in keep], fallback
    if col != 1 and row != 1:
        # corner region: the nearest box corner is swapped for the current node
        nearest = {(0, 0): 0, (2, 0): 1, (2, 2): 2, (0, 2): 3}[(col, row)]
        region = {0: "VII", 1: "V", 2: "III", 3: "I"}[nearest]
        return region, [_replace_corner(corners, nearest, p)], False
    # edge region: the current node is spliced in front of the facing box edge
    edge, region = {(1, 0): (0, "VI"), (2, 1): (1, "IV"), (1, 2): (2, "II"), (0, 1): (3, "VIII")}[(col, row)]
    poly = tuple(corners[: edge + 1]) + (p,) + tuple(corners[edge + 1:])
    return region, [poly], False


def special_area(net: Network, current: int, dest_zone: Zone, rng: np.random.Generator) -> SpecialArea:
    members = net.zone_members[Zone.parse(dest_zone)]
    if not members:
        raise DegenerateAreaError(f"destination zone {dest_zone} has no nodes")
    region, polys, fallback = area_candidates(tuple(net.coords[current].tolist()), net.coords[list(members)])
    pick = polys[int(rng.integers(len(polys)))] if len(polys) > 1 else polys[0]
    return SpecialArea(pick, region, fallback)


def eligible_next_nodes(net: Network, prefix: Sequence[int], area: SpecialArea) -> list[int]:
    """Unvisited neighbours of the last prefix node lying inside (or on) the area, ascending."""
    if not prefix:
        raise ValueError("prefix must be non-empty")
    visited = set(prefix)
    nbrs = [v for v in net.adjacency[prefix[-1]] if v not in visited]
    if not nbrs:
        return []
    inside = points_in_polygon(net.coords[nbrs], area.polygon)
    return [v for v, ok in zip(nbrs, inside.tolist()) if ok]


class _AreaCache:
    """Memoizes per (current node, destination zone) polygons and the neighbours inside them."""

    def __init__(self, net: Network):
        self.net = net
        self._cache: dict[tuple[int, Zone], list[tuple[int, ...]]] = {}

    def neighbours_inside(self, current: int, dest_zone: Zone) -> list[tuple[int, ...]]:
        key = (current, dest_zone)
        hit = self._cache.get(key)
        if hit is None:
            net = self.net
            members = list(net.zone_members[dest_zone])
            _, polys, _ = area_candidates(tuple(net.coords[current].tolist()), net.coords[members])
            nbrs = list(net.adjacency[current])
            hit = []
            for poly in polys:
                inside = points_in_polygon(net.coords[nbrs], poly) if nbrs else np.zeros(0, bool)
                hit.append(tuple(v for v, ok in zip(nbrs, inside.tolist()) if ok))
            self._cache[key] = hit
        return hit


# --------------------------------------------------------------------------
# route generation
# --------------------------------------------------------------------------

def generate_routes(
    net: Network,
    dm: DistanceMatrix | None,
    cfg: DemandConfig | None = None,
    seed: int = 0,
    ev: EvParams | None = None,
) -> list[Route]:
    """Grow ``cfg.n_routes`` distinct routes and give each an initial SOC.

    A route that satisfies all requirements (ends in the destination zone,
    node count within bounds, not seen before) enters the pool and keeps
    growing with probability ``cfg.continue_prob``.
    """
    cfg = cfg or DemandConfig()
    ev = ev or EvParams()
    grow_rng, soc_rng = np.random.default_rng(seed).spawn(2)
    zone_list = list(ZONES)
    p_origin = np.array([cfg.origin_zone_probs[z] for z in zone_list])
    p_dest = np.array([cfg.dest_zone_probs[z] for z in zone_list])
    members = net.zone_members
    zone_of = [nd.zone for nd in net.nodes]
    areas = _AreaCache(net)

    # origin-zone counts are drawn up front so every route's origin zone follows
    # the configured distribution, regardless of how many routes an attempt yields
    quota = grow_rng.multinomial(cfg.n_routes, p_origin)
    pool: list[Route] = []
    seen: set[tuple[int, ...]] = set()
    budget = cfg.max_attempts_per_route * max(cfg.n_routes, 1)
    attempts = 0
    while len(pool) < cfg.n_routes:
        if attempts >= budget:
            raise DemandExhaustedError(len(pool), cfg.n_routes, attempts)
        attempts += 1
        open_p = np.where(quota > 0, p_origin, 0.0)
        zi = int(grow_rng.choice(len(zone_list), p=open_p / open_p.sum()))
        oz = zone_list[zi]
        dz = zone_list[int(grow_rng.choice(len(zone_list), p=p_dest))]
        if not members[oz] or not members[dz]:
            continue
        origin = members[oz][int(grow_rng.integers(len(members[oz])))]
        nodes = [origin]
        visited = {origin}
        while True:
            key = tuple(nodes)
            if zone_of[nodes[-1]] is dz and cfg.min_nodes <= len(nodes) <= cfg.max_nodes and key not in seen:
                seen.add(key)
                pool.append(Route(key, oz, dz))
                quota[zi] -= 1
                if quota[zi] == 0 or grow_rng.random() >= cfg.continue_prob:
                    break
            if len(nodes) >= cfg.max_nodes:
                break  # any extension exceeds the node-count bound
            options = areas.neighbours_inside(nodes[-1], dz)
            area_nbrs = options[int(grow_rng.integers(len(options)))] if len(options) > 1 else options[0]
            eligible = [v for v in area_nbrs if v not in visited]
            if not eligible:
                break
            nxt = eligible[int(grow_rng.integers(len(eligible)))]
            nodes.append(nxt)
            visited.add(nxt)

    for route in pool:
        assign_initial_soc(route, net, dm, ev, soc_rng)
    return pool


def assign_initial_soc(
    route: Route,
    net: Network,
    dm: DistanceMatrix | None,
    ev: EvParams,
    rng: np.random.Generator,
    reach_margin_km: float = MAX_BRANCH_KM,
) -> float:
    """Draw an initial SOC that cannot finish the route but can start it.

    Uniform on ``[a, b)`` with ``b`` the energy for the whole route and ``a``
    the energy for the first branch plus ``reach_margin_km``, capped at
    ``0.99 * b``.
    """
    c = ev.consumption_kwh_per_km
    b = min(c * route_length_km(net, route.nodes), ev.battery_kwh)
    a = min(c * (net.branch_length(route.nodes[0], route.nodes[1]) + reach_margin_km), 0.99 * b)
    soc = float(rng.uniform(a, b))
    if soc >= b:
        soc = math.nextafter(b, 0.0)
    route.initial_soc_kwh = soc
    return soc


def traffic_flow(net: Network, routes: Sequence[Route]) -> dict[tuple[int, int], int]:
    """Number of routes traversing each branch, keyed by ``(min id, max id)`` in branch order."""
    counts = {b.key: 0 for b in net.branches}
    for i, r in enumerate(routes):
        for a, b in zip(r.nodes, r.nodes[1:]):
            k = branch_key(a, b)
            if k not in counts:
                raise UnknownBranchError(f"route {i} uses missing branch {k}")
            counts[k] += 1
    return counts


def route_violations(
    net: Network,
    route: Route,
    min_nodes: int = 2,
    max_nodes: int = 24,
    battery_kwh: float = 50.0,
    require_soc: bool = False,
) -> list[str]:
    """Human-readable reasons a route is not valid on ``net`` (empty if valid)."""
    problems = []
    nodes = route.nodes
    if not min_nodes <= len(nodes) <= max_nodes:
        problems.append(f"{len(nodes)} nodes outside [{min_nodes}, {max_nodes}]")
    if len(set(nodes)) != len(nodes):
        problems.append("repeated node")
    if any(not 0 <= v < net.n_nodes for v in nodes):
        return problems + ["unknown node id"]
    for a, b in zip(nodes, nodes[1:]):
        if not net.has_branch(a, b):
            problems.append(f"no branch ({a}, {b})")
    if nodes and net.nodes[nodes[0]].zone is not route.origin_zone:
        problems.append("origin not in origin zone")
    if nodes and net.nodes[nodes[-1]].zone is not route.dest_zone:
        problems.append("last node not in destination zone")
    soc = route.initial_soc_kwh
    if math.isfinite(soc) and not 0 < soc <= battery_kwh:
        problems.append(f"initial SOC {soc} outside (0, {battery_kwh}]")
    elif require_soc and not math.isfinite(soc):
        problems.append("initial SOC missing")
    return problems


# --------------------------------------------------------------------------
# files
# --------------------------------------------------------------------------

def write_routes(routes: Sequence[Route], path: str | Path) -> None:
    text = "[\n" + ",\n".join(json.dumps(r.to_dict()) for r in routes) + ("\n]\n" if routes else "]\n")
    Path(path).write_text(text, encoding="utf-8")


def read_routes(path: str | Path, net: Network | None = None) -> list[Route]:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    routes = [Route.from_dict(d) for d in data]
    if net is not None:
        for i, r in enumerate(routes):
            bad = route_violations(net, r, require_soc=True)
            if bad:
                raise InvalidRouteError(f"{path}: route {i}: {'; '.join(bad)}")
    return routes


def write_routes_csv(routes: Sequence[Route], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["route", "origin_zone", "dest_zone", "initial_soc_kwh", "nodes"])
        for i, r in enumerate(routes):
            w.writerow([i, r.origin_zone.value, r.dest_zone.value, repr(r.initial_soc_kwh),
                        "-".join(map(str, r.nodes))])


def write_flow_csv(flow: dict[tuple[int, int], int], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["u", "v", "count"])
        for (u, v), c in flow.items():
            w.writerow([u, v, c])
