"""SVG/text reporting for a finished optimization run."""

from __future__ import annotations

import math
from collections import Counter
from pathlib import Path

from .demandgen import read_routes, traffic_flow
from .detoursim import read_plan
from .errors import EvDetourError
from .gaopt import GaHistory
from .netgraph import ZONES, Network, read_network

REPORT_INPUTS = ("network.json", "routes.json", "history.csv", "best_plan.json")

_JET = [(0.0, (0, 0, 143)), (0.125, (0, 0, 255)), (0.375, (0, 255, 255)),
        (0.625, (255, 255, 0)), (0.875, (255, 0, 0)), (1.0, (128, 0, 0))]


class MissingInputError(EvDetourError, FileNotFoundError):
    def __init__(self, missing: list[str]):
        self.missing = missing
        super().__init__(f"missing report input(s): {', '.join(missing)}")


def flow_color(count: float, lo: float, hi: float) -> str:
    """Jet-like blue-to-red colour for ``count`` on the linear scale [lo, hi]."""
    t = 0.0 if hi <= lo else min(max((count - lo) / (hi - lo), 0.0), 1.0)
    for (t0, c0), (t1, c1) in zip(_JET, _JET[1:]):
        if t <= t1:
            f = (t - t0) / (t1 - t0)
            rgb = [round(a + (b - a) * f) for a, b in zip(c0, c1)]
            return "#{:02x}{:02x}{:02x}".format(*rgb)
    return "#800000"


def network_svg(net: Network, flow: dict[tuple[int, int], int], stations, px_per_km: float = 20.0) -> str:
    pad = 20.0
    size = net.region_km * px_per_km + 2 * pad

    def xy(i: int) -> tuple[float, float]:
        nd = net.nodes[i]
        return pad + nd.x * px_per_km, pad + (net.region_km - nd.y) * px_per_km

    counts = list(flow.values()) or [0]
    lo, hi = min(counts), max(counts)
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size:.0f}" height="{size:.0f}" '
        f'viewBox="0 0 {size:.0f} {size:.0f}">',
        '<rect width="100%" height="100%" fill="white"/>',
        f'<!-- flow scale: {lo} (blue) .. {hi} (red) passages -->',
    ]
    for (u, v), c in flow.items():
        (x1, y1), (x2, y2) = xy(u), xy(v)
        out.append(
            f'<line x1="{x1:.2f}" y1="{y1:.2f}" x2="{x2:.2f}" y2="{y2:.2f}" '
            f'stroke="{flow_color(c, lo, hi)}" stroke-width="3"><title>{u}-{v}: {c}</title></line>'
        )
    for nd in net.nodes:
        x, y = xy(nd.id)
        out.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="3" fill="#333"><title>{nd.id} {nd.zone.value}</title></circle>')
    for s in stations:
        x, y = xy(s)
        out.append(f'<circle class="station" cx="{x:.2f}" cy="{y:.2f}" r="8" fill="none" stroke="red" stroke-width="2"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def convergence_svg(history: GaHistory, width: int = 640, height: int = 400) -> str:
    left, right, top, bottom = 70, 20, 20, 45
    ys = history.best_so_far()
    xs = [r.iteration for r in history.rows]
    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = min(ys), max(ys)
    if x_hi == x_lo:
        x_hi = x_lo + 1
    if y_hi == y_lo:
        y_lo, y_hi = y_lo - 1.0, y_hi + 1.0
    sx = (width - left - right) / (x_hi - x_lo)
    sy = (height - top - bottom) / (y_hi - y_lo)

    def px(x: float, y: float) -> tuple[float, float]:
        return left + (x - x_lo) * sx, height - bottom - (y - y_lo) * sy

    pts = " ".join("{:.2f},{:.2f}".format(*px(x, y)) for x, y in zip(xs, ys))
    x0, y0 = px(x_lo, y_lo)
    x1, y1 = px(x_hi, y_hi)
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        '<rect width="100%" height="100%" fill="white"/>',
        f'<line x1="{x0:.2f}" y1="{y0:.2f}" x2="{x1:.2f}" y2="{y0:.2f}" stroke="black"/>',
        f'<line x1="{x0:.2f}" y1="{y0:.2f}" x2="{x0:.2f}" y2="{y1:.2f}" stroke="black"/>',
        f'<text x="{(x0 + x1) / 2:.2f}" y="{height - 10}" text-anchor="middle" font-size="12">iteration</text>',
        f'<text x="15" y="{(y0 + y1) / 2:.2f}" font-size="12" transform="rotate(-90 15 {(y0 + y1) / 2:.2f})" '
        'text-anchor="middle">best fitness so far (km)</text>',
        f'<text x="{x0 - 5:.2f}" y="{y0:.2f}" text-anchor="end" font-size="10">{y_lo:.1f}</text>',
        f'<text x="{x0 - 5:.2f}" y="{y1 + 10:.2f}" text-anchor="end" font-size="10">{y_hi:.1f}</text>',
        f'<text x="{x0:.2f}" y="{y0 + 15:.2f}" text-anchor="middle" font-size="10">{x_lo}</text>',
        f'<text x="{x1:.2f}" y="{y0 + 15:.2f}" text-anchor="middle" font-size="10">{history.rows[-1].iteration}</text>',
        f'<polyline points="{pts}" fill="none" stroke="#1f77b4" stroke-width="2"/>',
    ]
    if len(xs) == 1:
        cx, cy = px(xs[0], ys[0])
        out.append(f'<circle cx="{cx:.2f}" cy="{cy:.2f}" r="3" fill="#1f77b4"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def summary_text(net: Network, history: GaHistory, stations, flow: dict[tuple[int, int], int]) -> str:
    last = history.rows[-1]
    zone_counts = Counter(net.nodes[s].zone for s in stations)
    station_flow = {s: sum(c for (u, v), c in flow.items() if s in (u, v)) for s in stations}
    lines = [
        f"iterations           {last.iteration}",
        f"initial best (km)    {history.rows[0].best_fitness_km:.3f}",
        f"final best (km)      {last.best_so_far_km:.3f}",
        f"stations ({len(stations)})         {' '.join(map(str, stations))}",
        "",
        "zone         stations",
    ]
    lines += [f"{z.value:<12} {zone_counts.get(z, 0):>8}" for z in ZONES]
    lines += ["", "station  zone         incident flow"]
    lines += [f"{s:>7}  {net.nodes[s].zone.value:<12} {station_flow[s]:>13}" for s in stations]
    return "\n".join(lines) + "\n"


def render_report(run_dir: str | Path, out_dir: str | Path | None = None) -> list[Path]:
    """Write the flow map, convergence chart and summary table; returns the written paths."""
    run_dir = Path(run_dir)
    missing = [name for name in REPORT_INPUTS if not (run_dir / name).is_file()]
    if missing:
        raise MissingInputError([str(run_dir / m) for m in missing])
    out_dir = Path(out_dir) if out_dir is not None else run_dir / "report"
    out_dir.mkdir(parents=True, exist_ok=True)

    net = read_network(run_dir / "network.json")
    routes = read_routes(run_dir / "routes.json", net)
    history = GaHistory.read_csv(run_dir / "history.csv")
    plan = read_plan(run_dir / "best_plan.json", net.n_nodes)
    flow = traffic_flow(net, routes)
    if not history.rows or not all(math.isfinite(v) for v in history.best_so_far()):
        raise EvDetourError(f"{run_dir / 'history.csv'}: no usable history rows")

    files = {
        "flow_map.svg": network_svg(net, flow, plan.stations),
        "convergence.svg": convergence_svg(history),
        "summary.txt": summary_text(net, history, plan.stations, flow),
    }
    written = []
    for name, text in files.items():
        path = out_dir / name
        path.write_text(text, encoding="utf-8")
        written.append(path)
    return written

