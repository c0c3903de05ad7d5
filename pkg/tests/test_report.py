import re

import pytest

from evdetour.demandgen import traffic_flow, write_routes
from evdetour.detoursim import StationPlan, write_plan
from evdetour.gaopt import GaHistory, HistoryRow
from evdetour.netgraph import write_network
from evdetour.report import MissingInputError, convergence_svg, flow_color, network_svg, render_report


def _history(values):
    return GaHistory([HistoryRow(i, v, v + 1, min(values[: i + 1]), ()) for i, v in enumerate(values)])


def test_flow_color_scale_ends():
    assert flow_color(0, 0, 100) == "#00008f"
    assert flow_color(100, 0, 100) == "#800000"
    assert flow_color(5, 5, 5) == "#00008f"  # flat scale maps to the low end
    assert flow_color(-3, 0, 10) == flow_color(0, 0, 10)


def test_zero_flow_branch_uses_scale_minimum(small_net, small_routes):
    flow = traffic_flow(small_net, small_routes)
    flow[next(iter(flow))] = 0
    svg = network_svg(small_net, flow, [0, 3])
    assert "#00008f" in svg
    assert svg.count('class="station"') == 2


def test_single_iteration_chart():
    svg = convergence_svg(_history([12.5]))
    assert "<circle" in svg and "<polyline" in svg
    assert svg.startswith("<svg") and svg.rstrip().endswith("</svg>")


def test_multi_iteration_chart_is_monotone():
    svg = convergence_svg(_history([9.0, 7.0, 8.0, 5.0]))
    pts = re.search(r'points="([^"]+)"', svg).group(1).split()
    ys = [float(p.split(",")[1]) for p in pts]
    # screen y grows downwards, so a non-increasing series climbs on screen
    assert all(b >= a for a, b in zip(ys, ys[1:]))


def _run_dir(tmp_path, net, routes):
    write_network(net, tmp_path / "network.json")
    write_routes(routes, tmp_path / "routes.json")
    _history([30.0, 20.0]).write_csv(tmp_path / "history.csv")
    write_plan(StationPlan((1, 4)), tmp_path / "best_plan.json")
    return tmp_path


def test_render_report(tmp_path, small_net, small_routes):
    run = _run_dir(tmp_path, small_net, small_routes)
    written = render_report(run)
    assert sorted(p.name for p in written) == ["convergence.svg", "flow_map.svg", "summary.txt"]
    summary = (run / "report" / "summary.txt").read_text()
    assert "20.000" in summary and "1 4" in summary


def test_missing_inputs(tmp_path, small_net, small_routes):
    run = _run_dir(tmp_path, small_net, small_routes)
    (run / "history.csv").unlink()
    with pytest.raises(MissingInputError) as info:
        render_report(run)
    assert any(m.endswith("history.csv") for m in info.value.missing)
