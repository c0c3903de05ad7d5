"""Independent reference computations used as test oracles.

Nothing here imports the package's shortest-path or simulation code; the
only shared inputs are raw branch lists and plain numbers.
"""

from __future__ import annotations

import heapq
import itertools
import math


def dijkstra_all(n: int, branches: list[tuple[int, int, float]]) -> list[list[float]]:
    adj = [[] for _ in range(n)]
    for u, v, w in branches:
        adj[u].append((v, w))
        adj[v].append((u, w))
    out = []
    for s in range(n):
        dist = [math.inf] * n
        dist[s] = 0.0
        heap = [(0.0, s)]
        while heap:
            d, u = heapq.heappop(heap)
            if d > dist[u]:
                continue
            for v, w in adj[u]:
                if d + w < dist[v]:
                    dist[v] = d + w
                    heapq.heappush(heap, (dist[v], v))
        out.append(dist)
    return out


def brute_force_walks(
    n: int,
    branches: list[tuple[int, int, float]],
    stations: list[int],
    route: list[int],
    soc0: float,
    battery: float = 50.0,
    cons: float = 0.25,
    tol: float = 1e-9,
) -> set[tuple[float, ...]]:
    """Every recorded-L sequence the detour rules allow, over all tie choices.

    The walk is enumerated as a tree: each deficit node contributes a give-up
    value, and every optimal station (after both tie-break rules) spawns a
    branch of the tree.
    """
    dist = dijkstra_all(n, branches)
    blen = {}
    for u, v, w in branches:
        blen[(u, v)] = blen[(v, u)] = w
    legs = [blen[(a, b)] for a, b in zip(route, route[1:])]
    results: set[tuple[float, ...]] = set()

    def go(i: int, soc: float, detours: list[float], rec: list[float]) -> None:
        if i == len(route) - 1:
            results.add(tuple(rec + [sum(detours)]))
            return
        x, y = route[i], route[i + 1]
        if cons * legs[i] <= soc:
            go(i + 1, soc - cons * legs[i], detours, rec)
            return
        remaining = sum(legs[i:])
        rec = rec + [remaining + sum(detours)]
        options = [
            s for s in stations
            if cons * dist[x][s] <= soc and cons * dist[s][y] <= battery
        ]
        if not options:
            results.add(tuple(rec))
            return
        via = {s: dist[x][s] + dist[s][y] for s in options}
        lo = min(via.values())
        tied = [s for s in options if via[s] <= lo + tol]
        near = min(dist[s][y] for s in tied)
        for s in tied:
            if dist[s][y] <= near + tol:
                go(i + 1, battery - cons * dist[s][y], detours + [max(0.0, via[s] - dist[x][y])], rec)

    go(0, soc0, [], [])
    return results


def matches_any(recorded: list[float], options: set[tuple[float, ...]], tol: float = 1e-9) -> bool:
    return any(
        len(opt) == len(recorded) and all(abs(a - b) <= tol for a, b in zip(opt, recorded))
        for opt in options
    )


def all_plans(n: int, k: int):
    return itertools.combinations(range(n), k)
