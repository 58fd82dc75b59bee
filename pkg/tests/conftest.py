import math
import os
import pathlib
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from epiqueue import branching, epidemic, queue  # noqa: E402
from epiqueue.analytic import ModelParams, solve_pi  # noqa: E402
from epiqueue.lifetimes import Deterministic, Exponential, Gamma  # noqa: E402

ALPHA = 0.001
TARGET_CONDITIONED = 100_000

PARAM_SETS = {
    "exp": ModelParams(2.0, 0.5, Exponential(1.0)),
    "det": ModelParams(1.0, 1.0, Deterministic(1.0)),
    "gamma": ModelParams(1.0, 1.0, Gamma(2.0, 0.5)),
}

# pinned seeds; one per batch so batches never share streams
SEEDS = {
    ("branching", "exp"): 101, ("branching", "det"): 102, ("branching", "gamma"): 103,
    ("ps_from_empty", "exp"): 201, ("ps_from_empty", "det"): 202, ("ps_from_empty", "gamma"): 203,
    ("ps_busy", "exp"): 301, ("ps_busy", "det"): 302,
    ("lifo_busy", "exp"): 401, ("lifo_busy", "det"): 402,
}

REPORT_DIR = pathlib.Path(os.environ.get(
    "EPIQUEUE_REPORT_DIR", pathlib.Path(__file__).resolve().parent.parent / "acceptance_reports"))


def replications_for(fraction, target=TARGET_CONDITIONED):
    """Enough replications that the conditioned sample reaches ``target`` with a wide margin."""
    return int(math.ceil(1.03 * target / fraction / 1000.0)) * 1000


class BatchCache:
    def __init__(self):
        self._cache = {}

    def get(self, key, make):
        if key not in self._cache:
            self._cache[key] = make()
        return self._cache[key]


@pytest.fixture(scope="session")
def batches():
    return BatchCache()


@pytest.fixture(scope="session")
def branching_batch(batches):
    def get(name):
        params = PARAM_SETS[name]
        reps = replications_for(1.0 - solve_pi(params).pi)
        return batches.get(("branching", name),
                           lambda: branching.run_batch(params, reps, SEEDS["branching", name]))
    return get


@pytest.fixture(scope="session")
def queue_batch(batches):
    def get(mode, name):
        params = PARAM_SETS[name]
        sol = solve_pi(params)
        frac = 1.0 - sol.p if mode.endswith("from_empty") else 1.0 - sol.pi
        reps = replications_for(frac)
        return batches.get((mode, name),
                           lambda: queue.run_batch(params, mode, reps, SEEDS[mode, name]))
    return get


@pytest.fixture(scope="session")
def sir_batch(batches):
    def get(n, seed, replications=100_000):
        pp = epidemic.PopulationParams(n, PARAM_SETS["exp"])
        return batches.get(("sir", n, seed, replications),
                           lambda: epidemic.run_batch(pp, replications, seed))
    return get


def pytest_terminal_summary(terminalreporter):
    lines = []
    for outcome in ("passed", "failed"):
        for rep in terminalreporter.stats.get(outcome, []):
            if getattr(rep, "when", "call") != "call" or "test_acceptance" not in rep.nodeid:
                continue
            detail = dict(rep.user_properties).get("detail", "")
            lines.append((rep.nodeid.split("::")[-1], outcome.upper()[:4], detail))
    if lines:
        terminalreporter.section("acceptance criteria")
        for name, status, detail in sorted(lines):
            terminalreporter.write_line(f"{status:4s} {name}  {detail}")
