"""Command-line pipeline: gen-network, gen-demand, evaluate, optimize, report.

Every subcommand writes its outputs plus a run manifest (resolved config,
seed, SHA-256 digests of inputs and outputs, wall-clock duration). File
outputs get a ``<file>.manifest.json`` sidecar; directory outputs get a
single ``manifest.json`` inside.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import math
import shutil
import sys
import time
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from .demandgen import (
    DemandConfig,
    EvParams,
    generate_routes,
    read_routes,
    route_violations,
    traffic_flow,
    write_flow_csv,
    write_routes,
    write_routes_csv,
)
from .detoursim import PlanEvaluator, SimParams, read_plan, simulate_route, write_outcomes, write_plan
from .errors import EvDetourError
from .gaopt import GaConfig, run_ga
from .netgraph import (
    NetworkConfig,
    all_pairs_shortest_paths,
    generate_network,
    read_network,
    validate_network,
    write_network,
)
from .report import render_report

try:  # Python 3.11+
    import tomllib
except ModuleNotFoundError:  # pragma: no cover - exercised on 3.10
    import tomli as tomllib


class CliError(EvDetourError):
    """User-facing failure; printed without a traceback."""


# --------------------------------------------------------------------------
# config and manifest helpers
# --------------------------------------------------------------------------

def load_config(path: str | None) -> dict[str, dict[str, Any]]:
    if path is None:
        return {}
    p = Path(path)
    if not p.is_file():
        raise CliError(f"missing config file: {p}")
    try:
        data = tomllib.loads(p.read_text(encoding="utf-8"))
    except tomllib.TOMLDecodeError as exc:
        raise CliError(f"malformed config {p}: {exc}") from exc
    for section, body in data.items():
        if section not in SECTIONS:
            raise CliError(f"malformed config {p}: unknown section [{section}]")
        if not isinstance(body, dict):
            raise CliError(f"malformed config {p}: [{section}] must be a table")
    return data


def _build(cls, section: str, cfg: dict, overrides: dict[str, Any], source: str = "config"):
    values = dict(cfg.get(section, {}))
    known = {f.name for f in dataclasses.fields(cls)}
    for key in values:
        if key not in known:
            raise CliError(f"malformed {source}: unknown field {section}.{key}")
    values.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return cls(**values)
    except (TypeError, ValueError) as exc:
        raise CliError(f"malformed {source}: [{section}] {exc}") from exc


SECTIONS = {"network", "demand", "ev", "ga"}


def _jsonable(obj: Any) -> Any:
    if dataclasses.is_dataclass(obj):
        return _jsonable(dataclasses.asdict(obj))
    if isinstance(obj, dict):
        return {str(getattr(k, "value", k)): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return getattr(obj, "value", obj)


def sha256_of(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def write_manifest(
    target: Path,
    subcommand: str,
    config: dict[str, Any],
    seed: int | None,
    inputs: list[Path],
    outputs: list[Path],
    started: float,
) -> Path:
    manifest = {
        "tool": "evdetour",
        "version": __version__,
        "subcommand": subcommand,
        "config": _jsonable(config),
        "seed": seed,
        "inputs": {str(p): sha256_of(p) for p in inputs},
        "outputs": {str(p): sha256_of(p) for p in outputs},
        "finished_at": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "duration_s": round(time.perf_counter() - started, 3),
    }
    target.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    return target


def _sidecar(path: Path) -> Path:
    return path.with_name(path.name + ".manifest.json")


def _require(path: str | Path, what: str) -> Path:
    p = Path(path)
    if not p.is_file():
        raise CliError(f"missing {what} file: {p}")
    return p


def _load_network(path: str):
    p = _require(path, "network")
    try:
        return p, read_network(p)
    except EvDetourError as exc:
        raise CliError(f"invariant violation in {p}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise CliError(f"malformed network file {p}: {exc}") from exc


def _load_routes(path: str, net):
    p = _require(path, "routes")
    try:
        return p, read_routes(p, net)
    except EvDetourError as exc:
        raise CliError(f"invariant violation in {p}: {exc}") from exc
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise CliError(f"malformed routes file {p}: {exc}") from exc


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------

def cmd_gen_network(args) -> int:
    t0 = time.perf_counter()
    cfg = load_config(args.config)
    ncfg = _build(NetworkConfig, "network", cfg, {"n_nodes": args.n_nodes, "n_branches": args.n_branches})
    if "region_km" not in cfg.get("network", {}) and ncfg.n_nodes != NetworkConfig().n_nodes:
        # keep the default node density when only the size changes
        extra = {k: v for k, v in cfg.get("network", {}).items() if k not in ("n_nodes", "n_branches")}
        try:
            ncfg = NetworkConfig.scaled(ncfg.n_nodes, ncfg.n_branches, **extra)
        except (TypeError, ValueError) as exc:
            raise CliError(f"malformed config: [network] {exc}") from exc
    try:
        net = generate_network(ncfg, seed=args.seed)
    except ValueError as exc:
        raise CliError(f"malformed config: [network] {exc}") from exc
    report = validate_network(net, ncfg.max_branch_km)
    if not report.ok:
        raise CliError("generated network violates invariants: " + "; ".join(v.message for v in report))
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_network(net, out)
    write_manifest(_sidecar(out), "gen-network", {"network": ncfg}, args.seed, [], [out], t0)
    print(f"wrote {out}: {net.n_nodes} nodes, {len(net.branches)} branches")
    return 0


def cmd_gen_demand(args) -> int:
    t0 = time.perf_counter()
    cfg = load_config(args.config)
    dcfg = _build(DemandConfig, "demand", cfg, {"n_routes": args.n_routes})
    ev = _build(EvParams, "ev", cfg, {})
    net_path, net = _load_network(args.network)
    dm = all_pairs_shortest_paths(net)
    routes = generate_routes(net, dm, dcfg, seed=args.seed, ev=ev)
    for i, r in enumerate(routes):
        bad = route_violations(net, r, dcfg.min_nodes, dcfg.max_nodes, ev.battery_kwh, require_soc=True)
        if bad:
            raise CliError(f"generated route {i} violates invariants: {'; '.join(bad)}")
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    csv_path = out.with_suffix(".csv")
    flow_path = out.with_name(out.stem + "_flow.csv")
    write_routes(routes, out)
    write_routes_csv(routes, csv_path)
    write_flow_csv(traffic_flow(net, routes), flow_path)
    write_manifest(
        _sidecar(out), "gen-demand", {"demand": dcfg, "ev": ev}, args.seed,
        [net_path], [out, csv_path, flow_path], t0,
    )
    print(f"wrote {out}: {len(routes)} routes")
    return 0


def cmd_evaluate(args) -> int:
    t0 = time.perf_counter()
    cfg = load_config(args.config)
    ev = _build(EvParams, "ev", cfg, {})
    net_path, net = _load_network(args.network)
    routes_path, routes = _load_routes(args.routes, net)
    plan_path = _require(args.plan, "plan")
    try:
        plan = read_plan(plan_path, net.n_nodes)
    except EvDetourError as exc:
        raise CliError(f"invariant violation in {plan_path}: {exc}") from exc
    dm = all_pairs_shortest_paths(net)
    sim = SimParams(ev=ev)
    outcomes = [
        simulate_route(net, dm, plan, r, sim, seed=args.seed, route_index=i) for i, r in enumerate(routes)
    ]
    fitness = math.fsum(o.l_min_km for o in outcomes)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    dump = out_dir / "outcomes.jsonl"
    write_outcomes(outcomes, dump)
    summary = out_dir / "fitness.json"
    summary.write_text(json.dumps({"fitness_km": fitness, "n_routes": len(routes)}) + "\n", encoding="utf-8")
    write_manifest(
        out_dir / "manifest.json", "evaluate", {"ev": ev}, args.seed,
        [net_path, routes_path, plan_path], [dump, summary], t0,
    )
    print(repr(fitness))
    return 0


def cmd_optimize(args) -> int:
    t0 = time.perf_counter()
    cfg = load_config(args.config)
    ga_over = {
        "pop_size": args.pop_size, "k": args.stations, "max_iter": args.max_iter,
        "p_cross": args.p_cross, "p_mut": args.p_mut, "seed": args.seed,
    }
    gcfg = _build(GaConfig, "ga", cfg, ga_over)
    ev = _build(EvParams, "ev", cfg, {})
    net_path, net = _load_network(args.network)
    routes_path, routes = _load_routes(args.routes, net)
    try:
        gcfg.check(net.n_nodes)
    except ValueError as exc:
        raise CliError(f"malformed config: [ga] {exc}") from exc
    dm = all_pairs_shortest_paths(net)
    evaluator = PlanEvaluator(net, dm, routes, SimParams(ev=ev), seed=gcfg.seed)
    best, history = run_ga(
        evaluator, gcfg, np.random.default_rng(gcfg.seed), n_candidates=net.n_nodes, verbose=args.verbose
    )
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    hist_path, plan_path = out_dir / "history.csv", out_dir / "best_plan.json"
    history.write_csv(hist_path)
    write_plan(best, plan_path)
    copies = []
    for src, name in ((net_path, "network.json"), (routes_path, "routes.json")):
        dst = out_dir / name
        if dst.resolve() != src.resolve():
            shutil.copyfile(src, dst)
        copies.append(dst)
    write_manifest(
        out_dir / "manifest.json", "optimize", {"ga": gcfg, "ev": ev}, gcfg.seed,
        [net_path, routes_path], [hist_path, plan_path, *copies], t0,
    )
    print(f"best fitness {history.rows[-1].best_so_far_km!r} km with stations {list(best.stations)}")
    return 0


def cmd_report(args) -> int:
    t0 = time.perf_counter()
    run_dir = Path(args.run_dir)
    out_dir = Path(args.out) if args.out else run_dir / "report"
    written = render_report(run_dir, out_dir)
    inputs = [run_dir / n for n in ("network.json", "routes.json", "history.csv", "best_plan.json")]
    write_manifest(out_dir / "manifest.json", "report", {}, None, inputs, written, t0)
    for p in written:
        print(f"wrote {p}")
    return 0


# --------------------------------------------------------------------------
# entry point
# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="evdetour", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out_default: str, seed: bool = True):
        if seed:
            p.add_argument("--seed", type=int, help="master seed (default 0, or [ga].seed for optimize)")
        p.add_argument("--config", help="TOML config with [network]/[demand]/[ev]/[ga] tables")
        p.add_argument("--out", default=out_default, help=f"output path (default {out_default})")
        p.add_argument("--verbose", action="store_true")

    p = sub.add_parser("gen-network", help="generate a clustered planar road network")
    common(p, "network.json")
    p.add_argument("--n-nodes", type=int)
    p.add_argument("--n-branches", type=int)
    p.set_defaults(func=cmd_gen_network)

    p = sub.add_parser("gen-demand", help="generate routes with initial SOC")
    common(p, "routes.json")
    p.add_argument("--network", default="network.json")
    p.add_argument("--n-routes", type=int)
    p.set_defaults(func=cmd_gen_demand)

    p = sub.add_parser("evaluate", help="score a station plan and dump per-route outcomes")
    common(p, "evaluation")
    p.add_argument("--network", default="network.json")
    p.add_argument("--routes", default="routes.json")
    p.add_argument("--plan", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("optimize", help="search for a station plan with the genetic algorithm")
    common(p, "run")
    p.add_argument("--network", default="network.json")
    p.add_argument("--routes", default="routes.json")
    p.add_argument("--pop-size", type=int)
    p.add_argument("--stations", type=int, help="plan size k")
    p.add_argument("--max-iter", type=int)
    p.add_argument("--p-cross", type=float)
    p.add_argument("--p-mut", type=float)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("report", help="render flow map, convergence chart and summary")
    p.add_argument("--run-dir", default="run")
    p.add_argument("--out", help="output directory (default <run-dir>/report)")
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "seed", None) is None and args.command != "optimize":
        args.seed = 0
    try:
        return args.func(args)
    except (EvDetourError, OSError) as exc:
        print(f"evdetour {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
