"""Detour-to-recharge simulation of single routes and plan scoring.

An EV walks its route node by node. Whenever the remaining charge cannot
cover the next branch it records the "give up here" score (remaining route
length plus detours so far) and, if some station is reachable, detours via
the station minimizing the detour, charges to full and rejoins the route at
the next node. A route's score is the smallest recorded value; a plan's
fitness is the sum of route scores.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .demandgen import EvParams, Route
from .errors import InvalidPlanError, RouteSimulationError
from .netgraph import DistanceMatrix, Network

TIE_TOL_KM = 1e-9
# kWh of slack required before the vectorized evaluator trusts a one-detour outcome
_SAFE_MARGIN_KWH = 1e-6


@dataclass(frozen=True)
class StationPlan:
    stations: tuple[int, ...]

    def __post_init__(self):
        st = tuple(int(s) for s in self.stations)
        if any(b <= a for a, b in zip(st, st[1:])):
            raise InvalidPlanError(f"station ids must be strictly ascending, got {list(st)}")
        object.__setattr__(self, "stations", st)

    @classmethod
    def of(cls, ids: Iterable[int]) -> "StationPlan":
        ids = [int(i) for i in ids]
        if len(set(ids)) != len(ids):
            raise InvalidPlanError(f"duplicate station ids in {ids}")
        return cls(tuple(sorted(ids)))

    @property
    def k(self) -> int:
        return len(self.stations)

    def check(self, n_nodes: int) -> None:
        bad = [s for s in self.stations if not 0 <= s < n_nodes]
        if bad:
            raise InvalidPlanError(f"station ids {bad} not in 0..{n_nodes - 1}")


def write_plan(plan: StationPlan, path: str | Path) -> None:
    Path(path).write_text(json.dumps({"stations": list(plan.stations)}) + "\n", encoding="utf-8")


def read_plan(path: str | Path, n_nodes: int | None = None) -> StationPlan:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    try:
        plan = StationPlan(tuple(data["stations"]))
    except (KeyError, TypeError) as exc:
        raise InvalidPlanError(f"{path}: expected an object with a 'stations' list") from exc
    if n_nodes is not None:
        plan.check(n_nodes)
    return plan


@dataclass(frozen=True)
class SimParams:
    ev: EvParams = field(default_factory=EvParams)
    charge_to_full: bool = True
    tie_tol_km: float = TIE_TOL_KM

    def __post_init__(self):
        if not self.charge_to_full:
            raise ValueError("only full charging is modelled (charge_to_full must be True)")


@dataclass
class NodeEvent:
    n: int
    node: int
    soc_kwh: float
    deficit: bool
    accessible: tuple[int, ...] = ()
    excluded_infeasible: tuple[int, ...] = ()
    chosen: int | None = None
    tie_set: tuple[int, ...] = ()
    l_detour_km: float = 0.0
    l_rest_km: float | None = None


@dataclass
class RouteOutcome:
    recorded_ls: list[float]
    l_min_km: float
    completed: bool
    events: list[NodeEvent] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


# --------------------------------------------------------------------------
# station choice
# --------------------------------------------------------------------------

def accessible_stations(
    dm: DistanceMatrix,
    plan: StationPlan | Sequence[int],
    x_n: int,
    soc_kwh: float,
    ev: EvParams,
    x_next: int | None = None,
) -> list[int]:
    """Stations reachable from ``x_n`` on the remaining charge.

    With ``x_next`` given, stations from which a full battery cannot reach
    ``x_next`` are dropped as well.
    """
    stations = plan.stations if isinstance(plan, StationPlan) else plan
    c = ev.consumption_kwh_per_km
    d = dm.d
    out = [s for s in stations if c * d[x_n, s] <= soc_kwh]
    if x_next is not None:
        out = [s for s in out if c * d[s, x_next] <= ev.battery_kwh]
    return out


def station_ties(
    dm: DistanceMatrix, candidates: Sequence[int], x_n: int, x_next: int, tol: float = TIE_TOL_KM
) -> tuple[list[int], float]:
    """Stations tied for best after both tie-break rules, and the best detour path length."""
    if not candidates:
        raise ValueError("no candidate stations")
    d = dm.d
    via = [d[x_n, s] + d[s, x_next] for s in candidates]
    best = min(via)
    c_min = [s for s, v in zip(candidates, via) if v <= best + tol]
    onward = [d[s, x_next] for s in c_min]
    closest = min(onward)
    return [s for s, o in zip(c_min, onward) if o <= closest + tol], best


def select_station(
    dm: DistanceMatrix,
    candidates: Sequence[int],
    x_n: int,
    x_next: int,
    rng: np.random.Generator | None = None,
    tol: float = TIE_TOL_KM,
) -> tuple[int, float, list[int]]:
    """Pick the station with the shortest detour path, then the shortest onward leg,
    then uniformly at random. Returns ``(station, l_detour_km, tie_set)``."""
    ties, best = station_ties(dm, candidates, x_n, x_next, tol)
    if len(ties) == 1:
        chosen = ties[0]
    else:
        if rng is None:
            raise ValueError(f"stations {ties} are tied; an rng is required")
        chosen = ties[int(rng.integers(len(ties)))]
    return chosen, max(0.0, best - dm.d[x_n, x_next]), ties


# --------------------------------------------------------------------------
# route walk
# --------------------------------------------------------------------------

def _suffix_lengths(lens: Sequence[float]) -> list[float]:
    return [sum(lens[n:]) for n in range(len(lens) + 1)]


def _tie_rng(seed: int, route_index: int, n: int) -> np.random.Generator:
    return np.random.default_rng([seed, route_index, n])


def simulate_route(
    net: Network,
    dm: DistanceMatrix,
    plan: StationPlan,
    route: Route,
    sim: SimParams | None = None,
    rng: np.random.Generator | None = None,
    *,
    seed: int = 0,
    route_index: int = 0,
) -> RouteOutcome:
    """Walk one route under ``plan``.

    Random tie-breaks use ``rng`` when given, otherwise a generator derived
    from ``(seed, route_index, node index)`` so results do not depend on
    evaluation order.
    """
    sim = sim or SimParams()
    c = sim.ev.consumption_kwh_per_km
    battery = sim.ev.battery_kwh
    d = dm.d
    nodes = route.nodes
    lens = [net.branch_length(a, b) for a, b in zip(nodes, nodes[1:])]
    rest = _suffix_lengths(lens)
    soc = route.initial_soc_kwh
    detour_sum = 0.0
    recorded: list[float] = []
    events: list[NodeEvent] = []

    for n in range(len(nodes) - 1):
        x, y = nodes[n], nodes[n + 1]
        need = c * lens[n]
        if need <= soc:
            events.append(NodeEvent(n, x, soc, False))
            soc -= need
            continue
        recorded.append(rest[n] + detour_sum)
        reachable = [s for s in plan.stations if c * d[x, s] <= soc]
        feasible = [s for s in reachable if c * d[s, y] <= battery]
        ev = NodeEvent(
            n, x, soc, True, tuple(feasible),
            tuple(s for s in reachable if s not in feasible), l_rest_km=rest[n],
        )
        events.append(ev)
        if not feasible:
            return RouteOutcome(recorded, min(recorded), False, events)
        ties, best = station_ties(dm, feasible, x, y, sim.tie_tol_km)
        if len(ties) == 1:
            chosen = ties[0]
        else:
            tie_rng = rng if rng is not None else _tie_rng(seed, route_index, n)
            chosen = ties[int(tie_rng.integers(len(ties)))]
        l_detour = max(0.0, best - d[x, y])
        ev.chosen, ev.tie_set, ev.l_detour_km = chosen, tuple(ties), l_detour
        detour_sum += l_detour
        soc = battery - c * d[chosen, y]

    recorded.append(0.0 + detour_sum)
    return RouteOutcome(recorded, min(recorded), True, events)


def evaluate_plan(
    net: Network,
    dm: DistanceMatrix,
    plan: StationPlan,
    routes: Sequence[Route],
    sim: SimParams | None = None,
    seed: int = 0,
) -> float:
    """Plan fitness in km: sum of route scores via the reference walker."""
    sim = sim or SimParams()
    scores = []
    for i, r in enumerate(routes):
        try:
            scores.append(simulate_route(net, dm, plan, r, sim, seed=seed, route_index=i).l_min_km)
        except Exception as exc:
            raise RouteSimulationError(i, exc) from exc
    return math.fsum(scores)


class PlanEvaluator:
    """Vectorized plan scorer, equal to :func:`evaluate_plan` route by route.

    The walk up to a route's first deficit does not depend on the plan, so it
    is done once. Per plan, station choice at that deficit is vectorized over
    all routes; routes with a tie, or whose charge after the detour leaves
    too little slack to rule out a second deficit, are re-run through
    :func:`simulate_route`.
    """

    def __init__(
        self,
        net: Network,
        dm: DistanceMatrix,
        routes: Sequence[Route],
        sim: SimParams | None = None,
        seed: int = 0,
    ):
        self.net, self.dm, self.routes = net, dm, list(routes)
        self.sim = sim or SimParams()
        self.seed = seed
        c = self.sim.ev.consumption_kwh_per_km
        idx, xs, ys, socs, rests, after = [], [], [], [], [], []
        for i, r in enumerate(self.routes):
            nodes = r.nodes
            lens = [net.branch_length(a, b) for a, b in zip(nodes, nodes[1:])]
            soc = r.initial_soc_kwh
            for n in range(len(nodes) - 1):
                need = c * lens[n]
                if need <= soc:
                    soc -= need
                    continue
                rest = _suffix_lengths(lens)
                idx.append(i)
                xs.append(nodes[n])
                ys.append(nodes[n + 1])
                socs.append(soc)
                rests.append(rest[n])
                after.append(rest[n + 1])
                break
        self._idx = np.array(idx, dtype=np.int64)
        self._x = np.array(xs, dtype=np.int64)
        self._y = np.array(ys, dtype=np.int64)
        self._soc = np.array(socs, dtype=float)
        self._rest = np.array(rests, dtype=float)
        self._after = np.array(after, dtype=float)
        self._dxy = dm.d[self._x, self._y] if len(idx) else np.zeros(0)

    def __call__(self, plan: StationPlan | Sequence[int]) -> float:
        return math.fsum(self.route_scores(plan).tolist())

    def route_scores(self, plan: StationPlan | Sequence[int]) -> np.ndarray:
        if not isinstance(plan, StationPlan):
            plan = StationPlan(tuple(plan))
        scores = np.zeros(len(self.routes))
        if not len(self._idx):
            return scores
        ev = self.sim.ev
        c, battery = ev.consumption_kwh_per_km, ev.battery_kwh
        d = self.dm.d
        st = np.asarray(plan.stations, dtype=np.int64)
        if not len(st):
            scores[self._idx] = self._rest
            return scores
        d_xs = d[np.ix_(self._x, st)]
        d_sy = d[np.ix_(st, self._y)].T
        feas = (c * d_xs <= self._soc[:, None]) & (c * d_sy <= battery)
        via = np.where(feas, d_xs + d_sy, np.inf)
        j = np.argmin(via, axis=1)
        rows = np.arange(len(j))
        best = via[rows, j]
        any_feas = np.isfinite(best)
        n_tied = ((via <= (best + self.sim.tie_tol_km)[:, None]) & feas).sum(axis=1)
        l_det = np.maximum(0.0, best - self._dxy)
        soc_next = battery - c * d_sy[rows, j]
        safe = soc_next - c * self._after >= _SAFE_MARGIN_KWH
        lmin = np.minimum(self._rest, l_det)  # l_det is inf where no station is feasible
        scores[self._idx] = lmin
        redo = any_feas & ((n_tied > 1) | ~safe)
        for k in np.nonzero(redo)[0].tolist():
            i = int(self._idx[k])
            out = simulate_route(
                self.net, self.dm, plan, self.routes[i], self.sim, seed=self.seed, route_index=i
            )
            scores[i] = out.l_min_km
        return scores


def write_outcomes(outcomes: Sequence[RouteOutcome], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for i, out in enumerate(outcomes):
            rec = {"route": i, **out.to_dict()}
            fh.write(json.dumps(rec) + "\n")
