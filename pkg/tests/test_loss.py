import numpy as np
import pytest
from hypothesis import given, strategies as st

from mamlp.jets import Jet2, param_gradient
from mamlp.loss import (DomainViolation, LossBreakdown, LossWeights, MongeAmpereLoss,
                        convexity_penalty, interior_residual, loss_and_gradient, loss_from_jets,
                        total_loss)
from mamlp.network import flat_length, init, unflatten
from mamlp.problems import ProblemSpec, make_problem
from mamlp.sampling import Disk, SamplePlan, boundary_points, poisson_disk

from conftest import rel_err


def hess_jet(h11, h12, h22):
    return Jet2(np.float64(0.0), np.zeros(2), np.array([h11, h12, h22], dtype=float))


@pytest.fixture(scope="module")
def plan():
    return SamplePlan.build(Disk(), 300, 60, seed=1)


def test_interior_residual_examples():
    assert interior_residual(hess_jet(1, 0, 1), 1.0, 1.0) == 0.0
    assert interior_residual(hess_jet(1, 0, 1), 2.0, 1.0) == 1.0
    with pytest.raises(DomainViolation):
        interior_residual(hess_jet(1, 0, 1), 1.0, 0.0)


def test_convexity_penalty_examples():
    assert convexity_penalty(hess_jet(1, 0, 1)) == 0.0
    assert convexity_penalty(hess_jet(-1, 0, -1)) == 4.0
    assert convexity_penalty(hess_jet(1, 0, -0.5)) == 0.0


@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(-5, 5), st.floats(0, 5), st.floats(0.1, 5))
def test_terms_nonnegative(h11, h12, h22, f, g):
    j = hess_jet(h11, h12, h22)
    assert interior_residual(j, f, g) >= 0
    assert convexity_penalty(j) >= 0


def test_problem_a_exact_point():
    spec = make_problem("A")
    x = np.array([[0.3, -0.2]])
    j = spec.exact_u(x)
    assert interior_residual(j, spec.f(x), spec.g(j.grad))[0] <= 1e-24


@pytest.mark.parametrize("name", ["A", "B", "C"])
def test_loss_vanishes_on_exact_jets(name):
    spec = make_problem(name)
    x = poisson_disk(spec.source, 2500, seed=0)
    b = boundary_points(spec.source, 500)
    br = loss_from_jets(spec.exact_u(x), spec.exact_u(b).grad, spec.f(x), spec, interior_points=x)
    assert br.total <= 1e-10


def test_zero_network(plan):
    spec = make_problem("A")
    p = unflatten((2, 8, 1), np.zeros(flat_length((2, 8, 1))))
    br = total_loss(p, plan, spec)
    expected = np.mean((spec.f(plan.interior) / spec.g(np.zeros(2))) ** 2)
    assert br.interior == pytest.approx(expected, rel=1e-14)
    assert br.convexity == 0.0
    assert br.boundary == pytest.approx(1.0)


def test_zero_weights(plan):
    p = init((2, 8, 1), 0)
    assert total_loss(p, plan, make_problem("A"), LossWeights(0, 0, 0)).total == 0.0


def test_negative_weights_rejected():
    with pytest.raises(ValueError):
        LossWeights(1, -1, 1)


def test_breakdown_additive(plan):
    br = total_loss(init((2, 8, 8, 1), 4), plan, make_problem("C"))
    assert br.total == br.interior + br.convexity + br.boundary
    assert min(br.interior, br.convexity, br.boundary) >= 0


def test_bit_reproducible(plan):
    p = init((2, 8, 8, 1), 4)
    a, ga = loss_and_gradient(p, plan, make_problem("B"))
    b, gb = loss_and_gradient(p, plan, make_problem("B"))
    assert a == b
    np.testing.assert_array_equal(ga, gb)


def test_permutation_invariance(plan):
    p = init((2, 8, 8, 1), 4)
    spec = make_problem("A")
    perm = np.random.default_rng(0).permutation(len(plan.interior))
    shuffled = SamplePlan(plan.interior[perm], plan.boundary[::-1], plan.seed, plan.poisson_radius)
    a, b = total_loss(p, plan, spec), total_loss(p, shuffled, spec)
    assert a.total == pytest.approx(b.total, rel=1e-13)


def test_chunking_does_not_change_result(plan):
    p = init((2, 8, 8, 1), 2)
    spec = make_problem("A")
    whole = MongeAmpereLoss(spec, plan, p, chunk=10**6).breakdown_and_grad(p.flat)
    parts = MongeAmpereLoss(spec, plan, p, chunk=37).breakdown_and_grad(p.flat)
    assert parts[0].total == pytest.approx(whole[0].total, rel=1e-13)
    np.testing.assert_allclose(parts[1], whole[1], rtol=1e-11, atol=1e-16)


def test_breakdown_matches_gradient_pass(plan):
    p = init((2, 8, 8, 1), 2)
    obj = MongeAmpereLoss(make_problem("A"), plan, p)
    assert obj.breakdown(p.flat) == obj.breakdown_and_grad(p.flat)[0]
    assert obj(p.flat) == obj.value_and_grad(p.flat)[0]


def fd_check(obj, x, coords, h=1e-6):
    g = param_gradient(obj, x)
    fd = []
    for i in coords:
        e = np.zeros_like(x)
        e[i] = h
        fd.append((obj(x + e) - obj(x - e)) / (2 * h))
    return rel_err(g[coords], np.array(fd))


@pytest.mark.parametrize("name", ["A", "C", "D", "E"])
def test_gradient_matches_fd(name):
    spec = make_problem(name)
    plan = SamplePlan.build(spec.source, 200, 40, seed=3)
    p = init((2, 8, 8, 1), 7)
    obj = MongeAmpereLoss(spec, plan, p)
    coords = np.random.default_rng(5).choice(p.flat.size, 20, replace=False)
    assert fd_check(obj, p.flat.copy(), coords) <= 1e-6


def test_directional_derivatives(plan):
    spec = make_problem("B")
    p = init((2, 6, 6, 1), 8)
    obj = MongeAmpereLoss(spec, plan, p)
    x = p.flat.copy()
    g = param_gradient(obj, x)
    rng = np.random.default_rng(6)
    eps = 1e-6
    for _ in range(10):
        d = rng.standard_normal(x.size)
        d /= np.linalg.norm(d)
        fd = (obj(x + eps * d) - obj(x - eps * d)) / (2 * eps)
        assert abs(fd - g @ d) <= 1e-6 * max(abs(g @ d), 1e-3)


def test_gradient_linear_in_weights(plan):
    spec = make_problem("A")
    p = init((2, 8, 1), 1)
    _, g1 = loss_and_gradient(p, plan, spec, LossWeights(1, 1, 1))
    _, g2 = loss_and_gradient(p, plan, spec, LossWeights(1, 1, 2))
    b1, gb = loss_and_gradient(p, plan, spec, LossWeights(0, 0, 1))
    np.testing.assert_allclose(g2 - g1, gb, rtol=1e-9, atol=1e-14)
    b2 = total_loss(p, plan, spec, LossWeights(0, 0, 2))
    assert b2.boundary == pytest.approx(2 * b1.boundary, rel=1e-15)


def test_gradient_vanishes_at_quadratic_minimum():
    class Quad:
        A = np.diag([1.0, 3.0, 10.0])
        c = np.array([0.5, -1.0, 2.0])

        def __call__(self, p):
            d = p - self.c
            return 0.5 * d @ self.A @ d

        def value_and_grad(self, p):
            return self(p), self.A @ (p - self.c)

    assert np.linalg.norm(param_gradient(Quad(), Quad.c.copy())) <= 1e-8


def test_domain_violation_reports_point():
    spec = make_problem("A")
    bad = ProblemSpec("bad", Disk(), Disk(), spec.f, lambda a, b: a - 10.0)
    plan = SamplePlan.build(Disk(), 50, 10, seed=0)
    with pytest.raises(DomainViolation) as info:
        total_loss(init((2, 4, 1), 0), plan, bad)
    assert info.value.point is not None and info.value.g_value <= 0


def test_empty_plan_rejected():
    plan = SamplePlan(np.zeros((0, 2)), np.zeros((3, 2)), 0, 0.0)
    with pytest.raises(ValueError):
        MongeAmpereLoss(make_problem("A"), plan, init((2, 4, 1), 0))
