"""Shared fixtures plus a per-criterion summary for the acceptance module."""

import numpy as np
import pytest

from sdcf.graph import complete_graph, graph_from_edges
from sdcf.harness import resolve, scenario_from_dict

_acceptance_outcomes = []


def pytest_runtest_logreport(report):
    if report.when == "call" and "test_acceptance" in report.nodeid:
        name = report.nodeid.split("::")[-1]
        _acceptance_outcomes.append((name, report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_outcomes:
        return
    terminalreporter.write_line("")
    terminalreporter.write_line("acceptance criteria:")
    for name, outcome in _acceptance_outcomes:
        word = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"  {name}: {word}")


@pytest.fixture
def rng():
    return np.random.default_rng(0)


def cycle_edges(n):
    return [[i, i + 1] for i in range(1, n)] + [[n, 1]]


def complete_edges(n):
    return [[i, j] for i in range(1, n + 1) for j in range(i + 1, n + 1)]


ORTHO_SIX_ROWS = [[1.0, 0.0]] * 3 + [[0.0, 1.0]] * 3


def bound_scenario_complete6() -> dict:
    """Complete graph, one scaled-replacement attacker; the growth condition
    holds, so the asymptotic error bound is a certificate for the runs."""
    return {
        "plant": {
            "A": [[1.01, 0.0], [0.0, 1.01]],
            "C": ORTHO_SIX_ROWS,
            "noise_mode": "ball",
            "b_w": 0.005,
            "b_v": 0.005,
            "eta": 1.0,
        },
        "graph": {"n_nodes": 6, "edges": complete_edges(6)},
        "filter": {"beta": 0.6, "L": 2},
        "attack": {"policy": "scale_replace", "kappa": 2.0, "agents": [3]},
        "sim": {"T": 100, "runs": 100, "master_seed": 7},
    }


def bound_scenario_cycle6() -> dict:
    """Attack-free ring with deep consensus; growth condition holds."""
    return {
        "plant": {
            "A": [[1.05, 0.0], [0.0, 1.05]],
            "C": ORTHO_SIX_ROWS,
            "noise_mode": "ball",
            "b_w": 0.01,
            "b_v": 0.01,
            "eta": 1.0,
        },
        "graph": {"n_nodes": 6, "edges": cycle_edges(6)},
        "filter": {"beta": 2.0, "L": 8},
        "attack": {"policy": "none", "s": 0},
        "sim": {"T": 100, "runs": 100, "master_seed": 7},
    }


@pytest.fixture
def resolved_complete6():
    return resolve(scenario_from_dict(bound_scenario_complete6()))


@pytest.fixture
def resolved_cycle6():
    return resolve(scenario_from_dict(bound_scenario_cycle6()))


def random_connected_topology(rng, n_nodes, p=0.6):
    """Rejection-sample a connected graph directly from edge coin flips."""
    from sdcf.graph import is_connected

    while True:
        edges = [
            (i, j)
            for i in range(1, n_nodes + 1)
            for j in range(i + 1, n_nodes + 1)
            if rng.random() < p
        ]
        g = graph_from_edges(n_nodes, edges)
        if is_connected(g):
            return g


def random_unit_rows(rng, n_rows, dim):
    c = rng.normal(size=(n_rows, dim))
    norms = np.linalg.norm(c, axis=1)
    while np.any(norms < 1e-6):
        c = rng.normal(size=(n_rows, dim))
        norms = np.linalg.norm(c, axis=1)
    return c / norms[:, None]


def k4_graph():
    return complete_graph(4)
