import numpy as np
import pytest

from controlled_sensing.harness import bundled_scenario_path, load_config, run_comparison
from controlled_sensing.markov import ACTIVITY_TRANSITION_MATRIX
from controlled_sensing.sensing import ObservationModel

ACCEPTANCE_LINES = []


def random_pd(rng, d, floor=0.3):
    B = rng.normal(size=(d, d))
    return B @ B.T / d + floor * np.eye(d)


def random_model(rng, n=4, dims=(1, 2, 3), mean_scale=1.0):
    """Model with one control per entry of ``dims``; allocations are dummy
    tuples, only their distinctness matters."""
    controls = [tuple(int(i == k) * d for i in range(len(dims))) for k, d in enumerate(dims)]
    means = [rng.normal(scale=mean_scale, size=(n, d)) for d in dims]
    covs = [np.stack([random_pd(rng, d) for _ in range(n)]) for d in dims]
    return ObservationModel.from_arrays(controls, means, covs)


def random_belief(rng, n):
    return rng.dirichlet(np.ones(n))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def activity_P():
    return ACTIVITY_TRANSITION_MATRIX.copy()


@pytest.fixture(scope="session")
def scenario():
    return load_config(bundled_scenario_path())


@pytest.fixture(scope="session")
def bundled_comparison(scenario):
    """gfis2 / dp / random on the bundled scenario, 10 seeds x 2001 steps."""
    return run_comparison(scenario, ["gfis2", "dp", "random"])


def record_acceptance(number: int, passed: bool, detail: str):
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
