"""Road network model, synthetic planar network generation and shortest paths.

Networks are undirected straight-line graphs embedded in a square region.
Every branch length is the Euclidean distance between its endpoints, which
makes each branch the shortest connection between the nodes it joins.
"""

from __future__ import annotations

import enum
import json
import math
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable

import numpy as np
from scipy.spatial import Delaunay

from .errors import (
    DisconnectedNetworkError,
    InvalidNetworkError,
    InvalidNodeError,
    NetworkGenerationError,
)
from .geometry import branches_conflict

REGION_KM = 30.0
MAX_BRANCH_KM = 7.0
LENGTH_TOL_KM = 1e-9


class Zone(str, enum.Enum):
    RESIDENTIAL = "residential"
    COMMERCIAL = "commercial"
    INDUSTRIAL = "industrial"
    OTHER = "other"

    @classmethod
    def parse(cls, value: "str | Zone") -> "Zone":
        if isinstance(value, Zone):
            return value
        try:
            return cls(value.lower())
        except ValueError:
            raise ValueError(f"unknown zone {value!r}") from None


ZONES: tuple[Zone, ...] = tuple(Zone)


@dataclass(frozen=True)
class Node:
    id: int
    x: float
    y: float
    zone: Zone


@dataclass(frozen=True)
class Branch:
    u: int
    v: int
    length_km: float

    @property
    def key(self) -> tuple[int, int]:
        return (self.u, self.v) if self.u < self.v else (self.v, self.u)


def branch_key(u: int, v: int) -> tuple[int, int]:
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True)
class Network:
    nodes: tuple[Node, ...]
    branches: tuple[Branch, ...]
    region_km: float = REGION_KM

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "branches", tuple(self.branches))
        n = len(self.nodes)
        for b in self.branches:
            if not (0 <= b.u < n and 0 <= b.v < n):
                raise InvalidNodeError(f"branch ({b.u}, {b.v}) references a missing node")

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @cached_property
    def adjacency(self) -> tuple[tuple[int, ...], ...]:
        adj: list[list[int]] = [[] for _ in self.nodes]
        for b in self.branches:
            adj[b.u].append(b.v)
            adj[b.v].append(b.u)
        return tuple(tuple(sorted(a)) for a in adj)

    @cached_property
    def lengths(self) -> dict[tuple[int, int], float]:
        return {b.key: b.length_km for b in self.branches}

    @cached_property
    def coords(self) -> np.ndarray:
        return np.array([(nd.x, nd.y) for nd in self.nodes], dtype=float).reshape(-1, 2)

    @cached_property
    def zone_members(self) -> dict[Zone, tuple[int, ...]]:
        members: dict[Zone, list[int]] = {z: [] for z in ZONES}
        for nd in self.nodes:
            members[nd.zone].append(nd.id)
        return {z: tuple(ids) for z, ids in members.items()}

    def branch_length(self, u: int, v: int) -> float:
        return self.lengths[branch_key(u, v)]

    def has_branch(self, u: int, v: int) -> bool:
        return branch_key(u, v) in self.lengths

    def to_dict(self) -> dict:
        return {
            "region_km": self.region_km,
            "nodes": [
                {"id": nd.id, "x": nd.x, "y": nd.y, "zone": nd.zone.value} for nd in self.nodes
            ],
            "branches": [
                {"u": b.u, "v": b.v, "length_km": b.length_km} for b in self.branches
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Network":
        nodes = [
            Node(int(d["id"]), float(d["x"]), float(d["y"]), Zone.parse(d["zone"]))
            for d in data["nodes"]
        ]
        nodes.sort(key=lambda nd: nd.id)
        branches = [Branch(int(d["u"]), int(d["v"]), float(d["length_km"])) for d in data["branches"]]
        return cls(tuple(nodes), tuple(branches), float(data.get("region_km", REGION_KM)))


def write_network(net: Network, path: str | Path) -> None:
    Path(path).write_text(json.dumps(net.to_dict(), indent=1) + "\n", encoding="utf-8")


def read_network(path: str | Path, validate: bool = True) -> Network:
    """Load a network file, rejecting it if any invariant is violated."""
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    try:
        net = Network.from_dict(data)
    except (KeyError, TypeError, ValueError, InvalidNodeError) as exc:
        raise InvalidNetworkError([Violation("format", f"{path}: {exc}")]) from exc
    if validate:
        report = validate_network(net)
        if not report.ok:
            raise InvalidNetworkError(report.violations)
    return net


# --------------------------------------------------------------------------
# validation
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Violation:
    kind: str
    message: str
    nodes: tuple[int, ...] = ()
    branches: tuple[tuple[int, int], ...] = ()


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def kinds(self) -> set[str]:
        return {v.kind for v in self.violations}

    def __len__(self) -> int:
        return len(self.violations)

    def __iter__(self):
        return iter(self.violations)


def connected_components(n: int, edges: Iterable[tuple[int, int]]) -> list[list[int]]:
    adj: list[list[int]] = [[] for _ in range(n)]
    for u, v in edges:
        adj[u].append(v)
        adj[v].append(u)
    seen = [False] * n
    comps = []
    for s in range(n):
        if seen[s]:
            continue
        seen[s] = True
        comp, queue = [], deque([s])
        while queue:
            u = queue.popleft()
            comp.append(u)
            for w in adj[u]:
                if not seen[w]:
                    seen[w] = True
                    queue.append(w)
        comps.append(sorted(comp))
    return comps


def _crossing_pairs(coords: np.ndarray, keys: list[tuple[int, int]]) -> list[tuple[int, int]]:
    if len(keys) < 2:
        return []
    e = np.array(keys)
    a, b = coords[e[:, 0]], coords[e[:, 1]]
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    # bounding-box prefilter, exact orientation test on the survivors
    overlap = (
        (lo[:, None, 0] <= hi[None, :, 0]) & (lo[None, :, 0] <= hi[:, None, 0])
        & (lo[:, None, 1] <= hi[None, :, 1]) & (lo[None, :, 1] <= hi[:, None, 1])
    )
    ii, jj = np.nonzero(np.triu(overlap, k=1))
    xy = coords.tolist()
    bad = []
    for i, j in zip(ii.tolist(), jj.tolist()):
        (u1, v1), (u2, v2) = keys[i], keys[j]
        shared = bool({u1, v1} & {u2, v2})
        p1, p2 = tuple(xy[u1]), tuple(xy[v1])
        q1, q2 = tuple(xy[u2]), tuple(xy[v2])
        if branches_conflict(p1, p2, q1, q2, shared):
            bad.append((i, j))
    return bad


def validate_network(
    net: Network,
    max_branch_km: float = MAX_BRANCH_KM,
    check_euclidean: bool = True,
) -> ValidationReport:
    """Check ids, region bounds, branch lengths, duplicates, connectivity and planarity."""
    out: list[Violation] = []
    n = net.n_nodes
    for i, nd in enumerate(net.nodes):
        if nd.id != i:
            out.append(Violation("node-id", f"node at position {i} has id {nd.id}", (nd.id,)))
        if not (0.0 <= nd.x <= net.region_km and 0.0 <= nd.y <= net.region_km):
            out.append(Violation(
                "region", f"node {nd.id} at ({nd.x}, {nd.y}) outside [0, {net.region_km}]^2", (nd.id,)
            ))

    seen: dict[tuple[int, int], int] = {}
    keys: list[tuple[int, int]] = []
    for b in net.branches:
        k = b.key
        if b.u == b.v:
            out.append(Violation("self-loop", f"branch ({b.u}, {b.v}) is a self-loop", (b.u,), (k,)))
            continue
        if k in seen:
            out.append(Violation("duplicate", f"branch {k} appears more than once", k, (k,)))
            continue
        seen[k] = 1
        keys.append(k)
        if not (0.0 < b.length_km < max_branch_km):
            out.append(Violation(
                "length", f"branch {k} length {b.length_km} km not in (0, {max_branch_km})", k, (k,)
            ))
        if check_euclidean:
            (x1, y1), (x2, y2) = net.coords[b.u].tolist(), net.coords[b.v].tolist()
            euclid = math.hypot(x2 - x1, y2 - y1)
            if abs(euclid - b.length_km) > LENGTH_TOL_KM:
                out.append(Violation(
                    "euclidean", f"branch {k} length {b.length_km} != endpoint distance {euclid}", k, (k,)
                ))

    comps = connected_components(n, keys)
    if len(comps) > 1:
        out.append(Violation(
            "connectivity",
            f"network has {len(comps)} components; smallest has nodes {min(comps, key=len)}",
            tuple(min(comps, key=len)),
        ))

    for i, j in _crossing_pairs(net.coords, keys):
        out.append(Violation(
            "planarity", f"branches {keys[i]} and {keys[j]} intersect away from a shared node",
            tuple(sorted(set(keys[i]) | set(keys[j]))), (keys[i], keys[j]),
        ))
    return ValidationReport(out)


# --------------------------------------------------------------------------
# generation
# --------------------------------------------------------------------------

@dataclass
class NetworkConfig:
    n_nodes: int = 100
    n_branches: int = 203
    region_km: float = REGION_KM
    max_branch_km: float = MAX_BRANCH_KM
    zone_counts: dict[Zone, int] | None = None
    cluster_spread_km: float | None = None
    min_separation_km: float = 0.3
    max_attempts: int = 200

    def __post_init__(self):
        if self.zone_counts is None:
            base, extra = divmod(self.n_nodes, len(ZONES))
            self.zone_counts = {z: base + (i < extra) for i, z in enumerate(ZONES)}
        else:
            self.zone_counts = {Zone.parse(z): int(c) for z, c in self.zone_counts.items()}
        if self.cluster_spread_km is None:
            self.cluster_spread_km = self.region_km / 4.0

    @classmethod
    def scaled(cls, n_nodes: int, n_branches: int, **kw) -> "NetworkConfig":
        """Config whose region shrinks with node count to keep the case-study density."""
        region = REGION_KM * math.sqrt(n_nodes / 100.0)
        kw.setdefault("min_separation_km", min(0.3, region / 20))
        return cls(n_nodes=n_nodes, n_branches=n_branches, region_km=region, **kw)

    def check(self) -> None:
        if self.n_nodes < 1:
            raise ValueError("n_nodes must be positive")
        if self.n_branches < self.n_nodes - 1:
            raise ValueError(
                f"n_branches={self.n_branches} < n_nodes-1={self.n_nodes - 1}; cannot be connected"
            )
        if sum(self.zone_counts.values()) != self.n_nodes:
            raise ValueError(
                f"zone_counts sum to {sum(self.zone_counts.values())}, expected {self.n_nodes}"
            )
        if self.n_nodes >= 3 and self.n_branches > 3 * self.n_nodes - 6:
            raise ValueError(f"a planar graph on {self.n_nodes} nodes has at most {3 * self.n_nodes - 6} branches")


def _cluster_centers(region: float) -> dict[Zone, tuple[float, float]]:
    q, h = region / 4.0, 3.0 * region / 4.0
    return {
        Zone.RESIDENTIAL: (q, q),
        Zone.COMMERCIAL: (h, q),
        Zone.INDUSTRIAL: (q, h),
        Zone.OTHER: (h, h),
    }


def _scatter(cfg: NetworkConfig, rng: np.random.Generator) -> tuple[np.ndarray, list[Zone]]:
    centers = _cluster_centers(cfg.region_km)
    pts: list[tuple[float, float]] = []
    zones: list[Zone] = []
    for zone in ZONES:
        cx, cy = centers[zone]
        for _ in range(cfg.zone_counts[zone]):
            for _try in range(1000):
                r = cfg.cluster_spread_km * math.sqrt(rng.random())
                t = 2.0 * math.pi * rng.random()
                x = min(max(cx + r * math.cos(t), 0.0), cfg.region_km)
                y = min(max(cy + r * math.sin(t), 0.0), cfg.region_km)
                if all(math.hypot(x - px, y - py) >= cfg.min_separation_km for px, py in pts):
                    break
            pts.append((x, y))
            zones.append(zone)
    return np.array(pts, dtype=float).reshape(-1, 2), zones


def _candidate_edges(pts: np.ndarray) -> set[tuple[int, int]]:
    n = len(pts)
    if n < 2:
        return set()
    if n <= 3:
        return {(i, j) for i in range(n) for j in range(i + 1, n)}
    tri = Delaunay(pts)
    edges = set()
    for s in tri.simplices:
        a, b, c = (int(v) for v in s)
        edges.update({branch_key(a, b), branch_key(b, c), branch_key(a, c)})
    return edges


def _prune(n: int, edges: list[tuple[int, int]], target: int, rng: np.random.Generator) -> list[tuple[int, int]]:
    kept = list(edges)
    for idx in rng.permutation(len(edges)).tolist():
        if len(kept) <= target:
            break
        e = edges[idx]
        trial = [f for f in kept if f != e]
        if len(connected_components(n, trial)) == 1:
            kept = trial
    return kept


def generate_network(cfg: NetworkConfig | None = None, seed: int = 0) -> Network:
    """Random clustered planar network.

    Zone clusters sit at the quadrant centres of the region; a Delaunay
    triangulation provides a crossing-free candidate set, over-long edges are
    dropped, and random non-bridge edges are removed until the branch count
    matches.
    """
    cfg = cfg or NetworkConfig()
    cfg.check()
    rng = np.random.default_rng(seed)
    reason = ""
    for attempt in range(1, cfg.max_attempts + 1):
        pts, zones = _scatter(cfg, rng)
        try:
            cand = _candidate_edges(pts)
        except Exception as exc:  # qhull failure on degenerate input
            reason = f"triangulation failed: {exc}"
            continue
        lens = {e: math.hypot(*(pts[e[0]] - pts[e[1]])) for e in cand}
        edges = sorted(e for e in cand if 0.0 < lens[e] < cfg.max_branch_km)
        if len(edges) < cfg.n_branches:
            reason = f"only {len(edges)} short edges available"
            continue
        if len(connected_components(cfg.n_nodes, edges)) != 1:
            reason = "short edges do not connect all nodes"
            continue
        edges = _prune(cfg.n_nodes, edges, cfg.n_branches, rng)
        if len(edges) != cfg.n_branches:
            reason = f"could not prune below {len(edges)} branches without disconnecting"
            continue
        nodes = tuple(
            Node(i, float(pts[i, 0]), float(pts[i, 1]), zones[i]) for i in range(cfg.n_nodes)
        )
        branches = tuple(Branch(u, v, lens[(u, v)]) for u, v in sorted(edges))
        net = Network(nodes, branches, cfg.region_km)
        report = validate_network(net, cfg.max_branch_km)
        if report.ok:
            return net
        reason = report.violations[0].message
    raise NetworkGenerationError(cfg.max_attempts, reason)


# --------------------------------------------------------------------------
# shortest paths
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class DistanceMatrix:
    """All-pairs shortest-path lengths plus a successor table.

    ``next_hop[i, j]`` is the node following ``i`` on a shortest path to ``j``.
    """

    d: np.ndarray
    next_hop: np.ndarray
    weights: dict[tuple[int, int], float]

    @property
    def n(self) -> int:
        return self.d.shape[0]


def all_pairs_shortest_paths(net: Network) -> DistanceMatrix:
    n = net.n_nodes
    d = np.full((n, n), np.inf)
    nxt = np.full((n, n), -1, dtype=np.int64)
    idx = np.arange(n)
    d[idx, idx] = 0.0
    nxt[idx, idx] = idx
    for b in net.branches:
        if b.length_km < d[b.u, b.v]:
            d[b.u, b.v] = d[b.v, b.u] = b.length_km
            nxt[b.u, b.v], nxt[b.v, b.u] = b.v, b.u
    # Floyd-Warshall, one pivot row/column at a time
    for k in range(n):
        via = d[:, k, None] + d[None, k, :]
        better = via < d
        if better.any():
            d = np.where(better, via, d)
            nxt = np.where(better, nxt[:, k, None], nxt)
    if n and not np.isfinite(d).all():
        i, j = map(int, np.argwhere(~np.isfinite(d))[0])
        raise DisconnectedNetworkError(f"no path between nodes {i} and {j}")
    d.setflags(write=False)
    nxt.setflags(write=False)
    return DistanceMatrix(d, nxt, dict(net.lengths))


def path_between(dm: DistanceMatrix, i: int, j: int) -> tuple[list[int], float]:
    """Shortest node sequence from i to j and its summed branch length."""
    n = dm.n
    for v in (i, j):
        if not (isinstance(v, (int, np.integer)) and 0 <= v < n):
            raise InvalidNodeError(f"node id {v!r} not in 0..{n - 1}")
    path = [int(i)]
    length = 0.0
    cur = int(i)
    while cur != j:
        step = int(dm.next_hop[cur, j])
        length += dm.weights[branch_key(cur, step)]
        path.append(step)
        cur = step
    return path, length
