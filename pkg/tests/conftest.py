import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from npc.cli import bundled_path

settings.register_profile(
    "default", deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def random_problem(rng, max_n=300, max_d=8, max_ir=30.0):
    """Random training set with a sampled imbalance ratio, plus queries."""
    ir = rng.uniform(1.0, max_ir)
    n_all = int(rng.integers(8, max_n + 1))
    n_min = max(1, int(round(n_all / (1.0 + ir))))
    n_maj = n_all - n_min
    d = int(rng.integers(1, max_d + 1))
    X = rng.normal(size=(n_all, d))
    y = np.zeros(n_all, dtype=np.int64)
    y[rng.choice(n_all, n_min, replace=False)] = 1
    X[y == 1] += rng.normal(scale=1.5, size=d)
    if n_maj == 0:
        y[0] = 0
    return X, y


@pytest.fixture
def toy_path():
    return str(bundled_path("toy.dat"))


@pytest.fixture
def table3_text():
    return bundled_path("table3_gm.csv").read_text(encoding="utf-8")


ACCEPTANCE_LINES = []


@pytest.fixture
def criterion(request):
    """Record one acceptance line: call with (ok, detail) before asserting."""

    def record(ok, detail):
        name = request.node.name.removeprefix("test_")
        ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
