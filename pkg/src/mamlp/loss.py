"""Composite Monge-Ampere loss: determinant residual, convexity and transport-boundary terms."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .jets import DivergenceError, Jet2
from .network import NetworkParams, Workspace, backward, flatten, forward_channels, unflatten
from .problems import ProblemSpec
from .sampling import SamplePlan


class DomainViolation(ValueError):
    """The target density is not positive where a point was mapped."""

    def __init__(self, point, mapped, g_value):
        super().__init__(f"g({mapped}) = {g_value} <= 0 for source point {point}")
        self.point = point
        self.mapped = mapped
        self.g_value = g_value


@dataclass(frozen=True)
class LossWeights:
    alpha: float = 1.0
    beta: float = 1.0
    gamma: float = 1.0

    def __post_init__(self):
        if min(self.alpha, self.beta, self.gamma) < 0:
            raise ValueError("loss weights must be nonnegative")


@dataclass(frozen=True)
class LossBreakdown:
    interior: float
    convexity: float
    boundary: float

    @property
    def total(self) -> float:
        return self.interior + self.convexity + self.boundary


def interior_residual(jet: Jet2, f_val, g_at_grad):
    """(det D^2u - f/g)^2, elementwise."""
    g_at_grad = np.asarray(g_at_grad, dtype=np.float64)
    if np.any(g_at_grad <= 0.0):
        i = int(np.argmin(g_at_grad))
        raise DomainViolation(None, np.reshape(jet.grad, (-1, 2))[i], g_at_grad.ravel()[i])
    r = jet.det_hessian() - f_val / g_at_grad
    return r * r


def convexity_penalty(jet: Jet2):
    """min(h11 + h22, 0)^2, elementwise."""
    m = np.minimum(jet.trace_hessian(), 0.0)
    return m * m


def _check_density(g, points, mapped):
    bad = np.flatnonzero(g <= 0.0)
    if bad.size:
        i = bad[0]
        raise DomainViolation(points[i], mapped[i], g[i])


def loss_from_jets(interior: Jet2, boundary_grad: np.ndarray, f_vals: np.ndarray,
                   spec: ProblemSpec, w: LossWeights = LossWeights(),
                   interior_points=None) -> LossBreakdown:
    """Loss terms for given interior jets and boundary mappings.

    Used to feed analytic jets of an exact reflector through the same loss
    path as the network.
    """
    g = spec.g(interior.grad)
    if interior_points is not None:
        _check_density(g, interior_points, interior.grad)
    li = interior_residual(interior, f_vals, g)
    lc = convexity_penalty(interior)
    lb = spec.boundary_penalty(boundary_grad)
    n, m = li.size, lb.size
    return LossBreakdown(w.alpha * float(np.sum(li)) / n,
                         w.beta * float(np.sum(lc)) / n,
                         w.gamma * float(np.sum(lb)) / m)


class MongeAmpereLoss:
    """Sampled loss over a fixed plan, as a function of the flat parameter vector.

    ``f`` is evaluated once at the interior points. Every call runs a
    second-order forward pass over the interior points and a first-order
    pass over the boundary points. Interior points are processed in fixed
    chunks small enough for the channel arrays to stay in cache; chunk sums
    are combined in plan order, so results are reproducible bit for bit.
    """

    chunk = 512

    def __init__(self, spec: ProblemSpec, plan: SamplePlan, template: NetworkParams,
                 weights: LossWeights = LossWeights(), chunk: int | None = None):
        if len(plan.interior) == 0 or len(plan.boundary) == 0:
            raise ValueError("sample plan needs interior and boundary points")
        self.spec = spec
        self.plan = plan
        self.template = template
        self.weights = weights
        self.interior = np.ascontiguousarray(plan.interior, dtype=np.float64)
        self.boundary = np.ascontiguousarray(plan.boundary, dtype=np.float64)
        self.f_vals = np.asarray(spec.f(self.interior), dtype=np.float64)
        self.n_evals = 0
        if chunk is not None:
            self.chunk = int(chunk)
        n = len(self.interior)
        self._slices = [slice(lo, min(lo + self.chunk, n)) for lo in range(0, n, self.chunk)]
        self._ws = [Workspace() for _ in self._slices]
        self._ws_b = Workspace()

    def params(self, flat) -> NetworkParams:
        return unflatten(self.template, flat)

    def _interior(self, p, sl, ws, with_grad, grad):
        """Loss sums over one chunk; adds its gradient contribution into ``grad``."""
        w = self.weights
        n = len(self.interior)
        x = self.interior[sl]
        out, tape = forward_channels(p, x, order=2, keep=with_grad, ws=ws)
        _, ux, uy, h11, h12, h22 = out
        mapped = np.stack([ux, uy], -1)
        g, dg = self.spec.g_and_grad(mapped)
        _check_density(g, x, mapped)
        ratio = self.f_vals[sl] / g
        res = h11 * h22 - h12 * h12 - ratio
        tr_neg = np.minimum(h11 + h22, 0.0)
        sums = (float(np.sum(res * res)), float(np.sum(tr_neg * tr_neg)))
        if with_grad:
            ci = 2.0 * w.alpha / n * res
            cc = 2.0 * w.beta / n * tr_neg
            d = ws.get("d_out", out.shape)
            d[0] = 0.0
            # d(-f/g)/dy = f/g^2 * dg/dy
            dratio = ci * ratio / g
            d[1] = dratio * dg[:, 0]
            d[2] = dratio * dg[:, 1]
            d[3] = ci * h22 + cc
            d[4] = -2.0 * ci * h12
            d[5] = ci * h11 + cc
            grad += backward(p, tape, d, ws)
        return sums

    def _evaluate(self, flat, with_grad: bool):
        p = self.params(flat)
        w = self.weights
        n, m = len(self.interior), len(self.boundary)
        self.n_evals += 1
        grad = np.zeros(p.flat.size) if with_grad else None

        li = lc = 0.0
        for sl, ws in zip(self._slices, self._ws):
            a, b = self._interior(p, sl, ws, with_grad, grad)
            li += a
            lc += b

        out_b, tape_b = forward_channels(p, self.boundary, order=1, keep=with_grad, ws=self._ws_b)
        mapped_b = np.stack([out_b[1], out_b[2]], -1)
        pen, dpen = self.spec.boundary_penalty_and_grad(mapped_b)

        br = LossBreakdown(w.alpha * li / n, w.beta * lc / n, w.gamma * float(np.sum(pen)) / m)
        if not np.isfinite(br.total):
            raise DivergenceError("loss is not finite")
        if not with_grad:
            return br, None

        d_b = np.zeros_like(out_b)
        d_b[1:3] = (w.gamma / m) * dpen.T
        grad += backward(p, tape_b, d_b, self._ws_b)
        if not np.all(np.isfinite(grad)):
            raise DivergenceError("loss gradient is not finite")
        return br, grad

    def breakdown(self, flat) -> LossBreakdown:
        return self._evaluate(flat, with_grad=False)[0]

    def __call__(self, flat) -> float:
        return self.breakdown(flat).total

    def value_and_grad(self, flat) -> tuple[float, np.ndarray]:
        br, grad = self._evaluate(flat, with_grad=True)
        return br.total, grad

    def breakdown_and_grad(self, flat) -> tuple[LossBreakdown, np.ndarray]:
        return self._evaluate(flat, with_grad=True)


def total_loss(params: NetworkParams, plan: SamplePlan, spec: ProblemSpec,
               w: LossWeights = LossWeights()) -> LossBreakdown:
    return MongeAmpereLoss(spec, plan, params, w).breakdown(flatten(params))


def loss_and_gradient(params: NetworkParams, plan: SamplePlan, spec: ProblemSpec,
                      w: LossWeights = LossWeights()) -> tuple[LossBreakdown, np.ndarray]:
    return MongeAmpereLoss(spec, plan, params, w).breakdown_and_grad(flatten(params))
