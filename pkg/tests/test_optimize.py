import csv
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from mamlp.jets import DivergenceError
from mamlp.loss import LossBreakdown
from mamlp.optimize import (CSV_HEADER, AdamOptions, LbfgsOptions, LbfgsState, LineSearchError,
                            TerminationReason, lbfgs_direction, more_thuente_search, run_adam,
                            run_lbfgs)


def quadratic(A, c=None):
    A = np.asarray(A, dtype=float)
    c = np.zeros(len(A)) if c is None else np.asarray(c, dtype=float)

    def fun(x):
        d = x - c
        return 0.5 * d @ A @ d, A @ d

    return fun


def rosenbrock(x):
    a, b = x
    f = (1 - a) ** 2 + 100 * (b - a * a) ** 2
    g = np.array([-2 * (1 - a) - 400 * a * (b - a * a), 200 * (b - a * a)])
    return f, g


def line(fun, x, d):
    def phi(a):
        f, g = fun(x + a * d)
        return f, float(g @ d)
    return phi


def test_two_pairs_give_newton_step():
    A = np.diag([1.0, 10.0])
    g = np.array([0.7, -2.0])
    st_ = LbfgsState(np.zeros(2), g)
    for e in np.eye(2):
        assert st_.push(e, A @ e)
    np.testing.assert_allclose(lbfgs_direction(st_), -np.linalg.solve(A, g), rtol=1e-12)


def test_empty_memory_is_steepest_descent():
    g = np.array([1.0, -3.0])
    np.testing.assert_array_equal(lbfgs_direction(LbfgsState(np.zeros(2), g)), -g)


def test_push_rejects_nonpositive_curvature_and_trims():
    st_ = LbfgsState(np.zeros(2), np.ones(2), m_mem=2)
    assert not st_.push(np.array([1.0, 0]), np.array([-1.0, 0]))
    for k in range(4):
        st_.push(np.array([1.0, k]), np.array([1.0, k]))
    assert len(st_.memory) == 2
    np.testing.assert_array_equal(st_.memory[-1][0], [1.0, 3.0])


def test_quadratic_converges_to_grad_tol():
    rng = np.random.default_rng(0)
    Q = np.linalg.qr(rng.standard_normal((5, 5)))[0]
    A = Q @ np.diag([1, 2, 5, 10, 30.0]) @ Q.T
    c = rng.standard_normal(5)
    x, rec, reason = run_lbfgs(quadratic(A, c), np.zeros(5), LbfgsOptions(timeout_s=60))
    assert reason is TerminationReason.GRAD_TOL
    assert rec.final.iter <= 20
    np.testing.assert_allclose(x, c, atol=1e-9)


def test_rosenbrock_reaches_minimum():
    x, rec, reason = run_lbfgs(rosenbrock, np.array([-1.2, 1.0]), LbfgsOptions(timeout_s=60, max_iter=500))
    assert reason in (TerminationReason.GRAD_TOL, TerminationReason.LINESEARCH_FAILED)
    np.testing.assert_allclose(x, [1.0, 1.0], atol=1e-6)


def test_loss_never_increases():
    _, rec, _ = run_lbfgs(rosenbrock, np.array([-1.2, 1.0]), LbfgsOptions(timeout_s=60, max_iter=200))
    totals = [r.loss.total for r in rec.rows]
    assert all(b <= a for a, b in zip(totals, totals[1:]))


def test_wolfe_conditions_on_rosenbrock():
    x = np.array([-1.2, 1.0])
    f0, g0 = rosenbrock(x)
    d = -g0
    step, evals = more_thuente_search(line(rosenbrock, x, d), f0, float(g0 @ d), 1.0 / np.linalg.norm(g0))
    f, g = rosenbrock(x + step * d)
    assert f <= f0 + 1e-4 * step * (g0 @ d)
    assert abs(g @ d) <= 0.9 * abs(g0 @ d)
    assert 1 <= evals <= 16


def test_line_search_x_squared():
    fun = quadratic([[2.0]])
    step, evals = more_thuente_search(line(fun, np.array([1.0]), np.array([-1.0])), 1.0, -2.0, 1.0)
    assert evals == 1 and step == 1.0
    step, _ = more_thuente_search(line(fun, np.array([1.0]), np.array([-1.0])), 1.0, -2.0, 10.0)
    f, g = fun(np.array([1.0 - step]))
    assert f <= 1.0 - 1e-4 * 2 * step and abs(g[0]) <= 0.9 * 2


def test_ascent_direction_rejected():
    with pytest.raises(ValueError):
        more_thuente_search(lambda a: (a, 1.0), 0.0, 1.0)
    with pytest.raises(ValueError):
        more_thuente_search(lambda a: (a, 1.0), 0.0, 0.0)


def test_line_search_budget():
    # slope never flattens enough for curvature, value keeps dropping: unbounded below
    with pytest.raises(LineSearchError) as info:
        more_thuente_search(lambda a: (-a, -1.0), 0.0, -1.0, 1.0, max_evals=3, stpmax=1e300)
    assert info.value.evals == 3


@given(st.floats(0.1, 100), st.floats(-10, 10).filter(lambda v: abs(v) > 1e-3), st.floats(1e-3, 1e3))
def test_wolfe_property_1d_quadratics(a, x0, step0):
    fun = quadratic([[a]])
    x = np.array([x0])
    f0, g0 = fun(x)
    d = -g0
    step, _ = more_thuente_search(line(fun, x, d), f0, float(g0 @ d), step0)
    f, g = fun(x + step * d)
    assert f <= f0 + 1e-4 * step * float(g0 @ d) + 1e-15
    assert abs(float(g @ d)) <= 0.9 * abs(float(g0 @ d)) + 1e-15


def test_timeout_zero_logs_initial_point_only():
    x0 = np.array([1.0, 2.0])
    x, rec, reason = run_lbfgs(quadratic(np.eye(2)), x0, LbfgsOptions(timeout_s=0.0))
    assert reason is TerminationReason.TIMEOUT
    assert len(rec.rows) == 1 and rec.final.iter == 0
    np.testing.assert_array_equal(x, x0)


def test_max_iter_and_determinism():
    opts = LbfgsOptions(timeout_s=60, max_iter=7)
    a = run_lbfgs(rosenbrock, np.array([-1.2, 1.0]), opts)
    b = run_lbfgs(rosenbrock, np.array([-1.2, 1.0]), opts)
    assert a[2] is TerminationReason.MAX_ITER and a[1].final.iter == 7
    np.testing.assert_array_equal(a[0], b[0])
    assert a[1].csv_rows(False) == b[1].csv_rows(False)


def test_zero_gradient_stops_immediately():
    x0 = np.array([3.0, -1.0])
    x, rec, reason = run_lbfgs(lambda x: (1.0, np.zeros(2)), x0)
    assert reason is TerminationReason.GRAD_TOL
    np.testing.assert_array_equal(x, x0)


def test_non_finite_start_raises():
    with pytest.raises(DivergenceError):
        run_lbfgs(lambda x: (math.nan, np.zeros(2)), np.zeros(2))


def test_line_search_recovers_from_non_finite_trial():
    def fun(x):
        if abs(x[0]) > 5:
            raise DivergenceError("blow-up")
        return x[0] ** 2, np.array([2 * x[0]])

    x, _, reason = run_lbfgs(fun, np.array([4.0]), LbfgsOptions(timeout_s=10, max_iter=20))
    assert abs(x[0]) < 1e-6


def test_breakdowns_are_recorded():
    def fun(x):
        return LossBreakdown(x[0] ** 2, 0.0, 0.5 * x[1] ** 2), np.array([2 * x[0], x[1]])

    _, rec, _ = run_lbfgs(fun, np.array([1.0, 1.0]), LbfgsOptions(max_iter=3))
    assert rec.rows[0].loss == LossBreakdown(1.0, 0.0, 0.5)


def test_monitor_values_recorded():
    calls = []

    def monitor(x):
        calls.append(1)
        return 0.5

    _, rec, _ = run_lbfgs(quadratic(np.eye(2)), np.ones(2), LbfgsOptions(max_iter=3), monitor=monitor)
    assert all(r.nmae == 0.5 for r in rec.rows)
    assert rec.last_nmae() == 0.5 and len(calls) == len(rec.rows)


def test_adam_x_squared():
    x, rec, reason = run_adam(quadratic([[2.0]]), np.array([1.0]), AdamOptions(lr=0.1, max_iter=500, timeout_s=60))
    assert reason is TerminationReason.MAX_ITER
    assert abs(x[0]) <= 1e-3
    assert rec.final.iter == 500


def test_adam_first_step_is_lr_sign():
    x, _, _ = run_adam(quadratic(np.diag([1.0, 100.0])), np.array([1.0, -1.0]), AdamOptions(lr=0.01, max_iter=1))
    np.testing.assert_allclose(x, [0.99, -0.99], rtol=1e-6)


def test_adam_zero_gradient_keeps_params():
    x0 = np.array([0.3, 0.4])
    x, _, _ = run_adam(lambda x: (0.0, np.zeros(2)), x0, AdamOptions(max_iter=10))
    np.testing.assert_array_equal(x, x0)


def test_adam_divergence():
    def fun(x):
        return (math.inf if x[0] < 0.5 else x[0]), np.ones(1)

    with pytest.raises(DivergenceError):
        run_adam(fun, np.array([1.0]), AdamOptions(lr=1.0, max_iter=5))


def test_csv_output(tmp_path):
    _, rec, _ = run_lbfgs(quadratic(np.eye(2)), np.ones(2), LbfgsOptions(max_iter=2))
    path = tmp_path / "run.csv"
    rec.write_csv(path, include_time=False)
    rows = list(csv.reader(path.open()))
    assert rows[0] == CSV_HEADER
    assert all(r[1] == "" for r in rows[1:])
    assert rows[-1][-1] == rec.termination.value
    assert all(r[-1] == "" for r in rows[1:-1])
    assert float(rows[1][2]) == rec.rows[0].loss.total


def test_csv_numpy_scalars_written_plainly(tmp_path):
    def fun(x):
        return LossBreakdown(np.float64(x[0] ** 2), np.float64(0.0), np.float64(0.0)), 2 * x

    _, rec, _ = run_lbfgs(fun, np.ones(1), LbfgsOptions(max_iter=1))
    assert all("np." not in cell for row in rec.csv_rows() for cell in row)
