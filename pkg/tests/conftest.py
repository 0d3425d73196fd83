import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def rel_err(approx, exact, floor: float = 0.0) -> float:
    """Norm-wise relative error ||approx - exact|| / max(||exact||, floor)."""
    approx = np.ravel(np.asarray(approx, dtype=np.float64))
    exact = np.ravel(np.asarray(exact, dtype=np.float64))
    num = np.linalg.norm(approx - exact)
    den = max(np.linalg.norm(exact), floor)
    if den == 0.0:
        return 0.0 if num == 0.0 else float("inf")
    return float(num / den)


def central_grad(fun, x, h=1e-5):
    """Central differences of a scalar (or vector-valued) function of a 2-D point."""
    x = np.asarray(x, dtype=np.float64)
    cols = []
    for i in range(x.size):
        e = np.zeros_like(x)
        e.flat[i] = h
        cols.append((np.asarray(fun(x + e)) - np.asarray(fun(x - e))) / (2 * h))
    return np.stack(cols, -1)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# acceptance criteria report one line each; printed in the terminal summary
ACCEPTANCE_LINES: dict[int, str] = {}


def record_criterion(number: int, passed: bool, detail: str) -> None:
    ACCEPTANCE_LINES[number] = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
    print(ACCEPTANCE_LINES[number])


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
