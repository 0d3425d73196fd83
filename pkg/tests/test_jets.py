import numpy as np
import pytest
from hypothesis import given, strategies as st

from mamlp import jets
from mamlp.jets import (IDENTITY, TANH_SQUARED, DivergenceError, Jet2, jet_activate, jet_affine,
                        jet_seed, param_gradient)

from conftest import central_grad, rel_err

coord = st.floats(-2.0, 2.0, allow_nan=False)


def hess_matrix(j):
    return np.array([[j.h11, j.h12], [j.h12, j.h22]], dtype=float)


def composite(x1, x2):
    a = jets.sin(x1 * x2 + 0.3) * jets.exp(0.5 * x1)
    b = jets.tanh(x2 - x1 * x1) / (2.0 + jets.cos(x2))
    return a + b * b - jets.sqrt(x1 * x1 + x2 * x2 + 1.0) + 3.0 / (1.5 + x1**2)


def check_jet_against_fd(fn, x, tol=1e-6):
    # floor 1 turns the check absolute where the exact derivative vanishes
    j = fn(*jet_seed(x))
    value = lambda p: fn(p[0], p[1])
    grad = lambda p: fn(*jet_seed(p)).grad
    assert np.isclose(j.value, value(x), rtol=1e-15, atol=1e-15)
    assert rel_err(j.grad, central_grad(value, x), floor=1.0) <= tol
    # Hessian against central differences of the (independently checked) gradient
    assert rel_err(hess_matrix(j), central_grad(grad, x), floor=1.0) <= tol


def test_seed_values():
    a, b = jet_seed(np.array([3.0, -1.0]))
    assert a.value == 3.0 and b.value == -1.0
    np.testing.assert_array_equal(a.grad, [1.0, 0.0])
    np.testing.assert_array_equal(b.grad, [0.0, 1.0])
    np.testing.assert_array_equal(a.hess3, [0.0, 0.0, 0.0])
    np.testing.assert_array_equal(b.hess3, [0.0, 0.0, 0.0])


def test_seed_origin():
    a, b = jet_seed(np.zeros(2))
    assert a.value == 0.0 and b.value == 0.0
    assert np.dot(a.grad, b.grad) == 0.0


@given(coord, coord)
def test_seed_orthogonal(x1, x2):
    a, b = jet_seed(np.array([x1, x2]))
    assert np.dot(a.grad, b.grad) == 0.0


def test_affine_identity():
    j = Jet2(np.float64(1.5), np.array([0.2, -0.4]), np.array([1.0, 2.0, 3.0]))
    out = jet_affine([1.0], [j], 0.0)
    assert out.value == j.value
    np.testing.assert_array_equal(out.grad, j.grad)
    np.testing.assert_array_equal(out.hess3, j.hess3)


def test_affine_bias_on_value_only():
    c = Jet2.constant(1.0)
    out = jet_affine([2.0, 3.0], [c, c], 5.0)
    assert out.value == 10.0
    assert not np.any(out.grad) and not np.any(out.hess3)


def test_affine_length_mismatch():
    with pytest.raises(ValueError):
        jet_affine([1.0, 2.0], [Jet2.constant(1.0)], 0.0)
    with pytest.raises(ValueError):
        jet_affine([], [], 0.0)


@given(st.lists(st.floats(-3, 3), min_size=2, max_size=2), coord, coord)
def test_affine_matches_fd(w, x1, x2):
    def fn(a, b):
        return jet_affine(w, [jets.sin(a), a * b], 0.7) if isinstance(a, Jet2) else \
            w[0] * np.sin(a) + w[1] * a * b + 0.7
    x = np.array([x1, x2])
    j = fn(*jet_seed(x))
    fd = central_grad(lambda p: fn(p[0], p[1]), x)
    np.testing.assert_allclose(j.grad, fd, atol=1e-8)


def test_tanh_squared_derivatives_fd():
    z = np.linspace(-3.0, 3.0, 61)
    s0, s1, s2, s3 = TANH_SQUARED.derivatives(z)
    h = 1e-5
    f = [lambda t, i=i: TANH_SQUARED.derivatives(t)[i] for i in range(3)]
    for i, d in enumerate((s1, s2, s3)):
        fd = (f[i](z + h) - f[i](z - h)) / (2 * h)
        assert rel_err(d, fd) <= 1e-8
    np.testing.assert_allclose(s0, np.tanh(z) ** 2, rtol=1e-15)


def test_tanh_squared_closed_forms():
    z = np.linspace(-4.0, 4.0, 81)
    sech2 = 1.0 / np.cosh(z) ** 2
    np.testing.assert_allclose(TANH_SQUARED.dsigma(z), 2 * np.tanh(z) * sech2, atol=1e-15)
    np.testing.assert_allclose(TANH_SQUARED.d2sigma(z), 2 * sech2**2 - 4 * np.tanh(z) ** 2 * sech2, atol=1e-14)
    assert TANH_SQUARED.sigma(0.0) == 0.0


def test_tanh_squared_no_overflow():
    s = TANH_SQUARED.derivatives(np.array([-800.0, 800.0]))
    assert all(np.all(np.isfinite(v)) for v in s)


def test_activate_identity_unchanged():
    j = Jet2(np.float64(0.4), np.array([1.0, -2.0]), np.array([0.5, 0.1, -0.3]))
    out = jet_activate(IDENTITY, j)
    assert out.value == j.value
    np.testing.assert_array_equal(out.grad, j.grad)
    np.testing.assert_array_equal(out.hess3, j.hess3)


def test_activate_tanh_squared_at_zero():
    j = Jet2(np.float64(0.0), np.array([1.0, 0.0]), np.zeros(3))
    out = jet_activate(TANH_SQUARED, j)
    assert out.value == 0.0
    np.testing.assert_array_equal(out.grad, [0.0, 0.0])
    np.testing.assert_allclose(hess_matrix(out), [[2.0, 0.0], [0.0, 0.0]], atol=1e-15)
    # cross-check sigma'' at 0 with a second difference of tanh^2
    h = 1e-5
    fd = (np.tanh(h) ** 2 - 2 * np.tanh(0.0) ** 2 + np.tanh(-h) ** 2) / h**2
    assert abs(fd - 2.0) < 1e-5


@given(coord, coord)
def test_composite_matches_fd(x1, x2):
    check_jet_against_fd(composite, np.array([x1, x2]))


@given(coord, coord, st.floats(-2, 2), st.floats(-2, 2))
def test_activated_affine_matches_fd(x1, x2, w1, w2):
    def fn(a, b):
        if isinstance(a, Jet2):
            return jet_activate(TANH_SQUARED, jet_affine([w1, w2], [a, a * b], 0.1))
        return np.tanh(w1 * a + w2 * a * b + 0.1) ** 2
    check_jet_against_fd(fn, np.array([x1, x2]))


@given(coord, coord)
def test_hessian_symmetric_structurally(x1, x2):
    j = composite(*jet_seed(np.array([x1, x2])))
    H = j.hess
    assert H[0, 1] == H[1, 0]


def test_vectorised_jets_match_scalar(rng):
    x = rng.uniform(-1, 1, (7, 2))
    batch = composite(*jet_seed(x))
    for i in range(7):
        single = composite(*jet_seed(x[i]))
        np.testing.assert_allclose(batch.grad[i], single.grad, rtol=1e-14)
        np.testing.assert_allclose(batch.hess3[i], single.hess3, rtol=1e-14)


def test_integer_power_and_division():
    x = np.array([0.7, -0.4])
    check_jet_against_fd(lambda a, b: (a * b + 2.0) ** 3 / (1.0 + a * a), x)
    check_jet_against_fd(lambda a, b: 1.0 / (2.0 - b) - a ** 0, x)


def test_hessian_eigenvalues():
    j = Jet2(np.float64(0.0), np.zeros(2), np.array([2.0, 1.0, 3.0]))
    lo, hi = j.hessian_eigenvalues()
    np.testing.assert_allclose(sorted([lo, hi]), np.linalg.eigvalsh([[2.0, 1.0], [1.0, 3.0]]), rtol=1e-14)
    assert j.det_hessian() == 5.0 and j.trace_hessian() == 5.0


class _Half:
    def __call__(self, p):
        return 0.5 * float(p @ p)

    def value_and_grad(self, p):
        return self(p), p.copy()


class _Const:
    def __call__(self, p):
        return 3.0

    def value_and_grad(self, p):
        return 3.0, np.zeros_like(p)


class _Bad:
    def __call__(self, p):
        return np.nan

    def value_and_grad(self, p):
        return np.nan, p


def test_param_gradient_trivial(rng):
    p = rng.standard_normal(9)
    np.testing.assert_array_equal(param_gradient(_Half(), p), p)
    np.testing.assert_array_equal(param_gradient(_Const(), p), np.zeros(9))
    with pytest.raises(DivergenceError):
        param_gradient(_Bad(), p)
