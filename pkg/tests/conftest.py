from __future__ import annotations

import numpy as np
import pytest

from hydrospec.mlspectrum import operator_from_arrays

ACCEPTANCE_LINES: list[str] = []


def random_operator(rng: np.random.Generator, n_max: int):
    """Random multilayer operator with N <= n_max, mixed velocity scales."""
    n = int(rng.integers(1, n_max + 1))
    gamma = rng.dirichlet(np.ones(n))
    h = rng.uniform(0.1, 2.0, n)
    scale = rng.choice([0.3, 1.0, 5.0])
    u = rng.uniform(-scale, scale, n)
    g = float(rng.uniform(1.0, 20.0))
    return operator_from_arrays(u, h, gamma, g)


@pytest.fixture
def report_line():
    def emit(name: str, ok: bool, detail: str = ""):
        line = f"{'PASS' if ok else 'FAIL'} {name}" + (f": {detail}" if detail else "")
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok
    return emit


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
