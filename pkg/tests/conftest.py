from __future__ import annotations

import pytest

from evdetour.demandgen import DemandConfig, generate_routes
from evdetour.netgraph import NetworkConfig, all_pairs_shortest_paths, generate_network

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def case_net():
    return generate_network(NetworkConfig(), seed=1)


@pytest.fixture(scope="session")
def case_dm(case_net):
    return all_pairs_shortest_paths(case_net)


@pytest.fixture(scope="session")
def case_routes(case_net, case_dm):
    return generate_routes(case_net, case_dm, DemandConfig(), seed=3)


@pytest.fixture(scope="session")
def small_net():
    return generate_network(NetworkConfig.scaled(12, 20), seed=5)


@pytest.fixture(scope="session")
def small_routes(small_net):
    return generate_routes(small_net, all_pairs_shortest_paths(small_net), DemandConfig(n_routes=50), seed=1)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
