from pathlib import Path

import numpy as np
import pytest

from choreogame.game import GameCache
from choreogame.instance import Instance, Job, Objective, Organization, example1

ROOT = Path(__file__).resolve().parent.parent
EXAMPLE1_PATH = ROOT / "instances" / "example1.json"


@pytest.fixture
def ex1():
    """Example instance with alpha = 2 (values are small integers)."""
    return GameCache(example1(2.0))


@pytest.fixture
def ex1_a3():
    return GameCache(example1(3.0))


@pytest.fixture
def example1_path():
    return EXAMPLE1_PATH


def random_unit_energy(rng, n_orgs, max_jobs=12, max_machines=3, alpha=None):
    alpha = float(rng.uniform(1.5, 3.0)) if alpha is None else alpha
    orgs = tuple(
        Organization(f"O{k + 1}", int(rng.integers(1, max_machines + 1)),
                     tuple(Job(1.0, 1.0) for _ in range(int(rng.integers(0, max_jobs + 1)))))
        for k in range(n_orgs))
    return Instance(Objective.SUM_ENERGY, orgs, alpha)


def random_completion(rng, n_orgs, max_jobs=5, max_machines=3):
    orgs = tuple(
        Organization(f"O{k + 1}", int(rng.integers(1, max_machines + 1)),
                     tuple(Job(proc_time=float(rng.integers(1, 10)))
                           for _ in range(int(rng.integers(0, max_jobs + 1)))))
        for k in range(n_orgs))
    return Instance(Objective.SUM_COMPLETION, orgs)


def random_deadline_energy(rng, n_orgs, max_jobs=2, max_machines=2):
    """Unit jobs with deadlines in {1, 2, 3}: exercises the convex oracle."""
    alpha = float(rng.choice([2.0, 2.5, 3.0]))
    orgs = tuple(
        Organization(f"O{k + 1}", int(rng.integers(1, max_machines + 1)),
                     tuple(Job(1.0, float(rng.integers(1, 4)))
                           for _ in range(int(rng.integers(0, max_jobs + 1)))))
        for k in range(n_orgs))
    return Instance(Objective.SUM_ENERGY, orgs, alpha)


@pytest.fixture
def rng():
    return np.random.default_rng(20261019)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
