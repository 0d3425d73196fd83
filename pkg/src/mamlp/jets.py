"""Second-order jets over a 2-D input.

A :class:`Jet2` bundles a quantity with its gradient and Hessian with respect
to the spatial input ``x = (x1, x2)``. Jets are vectorised: ``value`` may be a
scalar or an array of any batch shape ``S``; ``grad`` then has shape
``S + (2,)`` and ``hess3`` has shape ``S + (3,)`` holding ``(h11, h12, h22)``.
Storing only three Hessian entries keeps the Hessian symmetric by
construction.

Arithmetic operators and the elementary functions :func:`exp`, :func:`sin`,
:func:`cos`, :func:`tanh` and :func:`sqrt` accept both jets and plain numbers,
so closed-form densities and reflectors can be written once and evaluated on
either.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Protocol, Sequence

import numpy as np


class DivergenceError(FloatingPointError):
    """Raised when an objective or its gradient stops being finite."""


@dataclass(frozen=True)
class Jet2:
    value: np.ndarray
    grad: np.ndarray
    hess3: np.ndarray

    @classmethod
    def constant(cls, value) -> "Jet2":
        value = np.asarray(value, dtype=np.float64)
        return cls(value, np.zeros(value.shape + (2,)), np.zeros(value.shape + (3,)))

    @property
    def shape(self) -> tuple:
        return np.shape(self.value)

    @property
    def hess(self) -> np.ndarray:
        h = self.hess3
        return np.stack(
            [np.stack([h[..., 0], h[..., 1]], -1), np.stack([h[..., 1], h[..., 2]], -1)], -2
        )

    @property
    def h11(self):
        return self.hess3[..., 0]

    @property
    def h12(self):
        return self.hess3[..., 1]

    @property
    def h22(self):
        return self.hess3[..., 2]

    def det_hessian(self):
        return self.h11 * self.h22 - self.h12 * self.h12

    def trace_hessian(self):
        return self.h11 + self.h22

    def hessian_eigenvalues(self):
        """Eigenvalues ``(lo, hi)`` of the symmetric 2x2 Hessian."""
        t = 0.5 * (self.h11 + self.h22)
        d = np.hypot(0.5 * (self.h11 - self.h22), self.h12)
        return t - d, t + d

    # -- arithmetic -------------------------------------------------------

    def __add__(self, other):
        if isinstance(other, Jet2):
            return Jet2(self.value + other.value, self.grad + other.grad, self.hess3 + other.hess3)
        return Jet2(self.value + other, self.grad, self.hess3)

    __radd__ = __add__

    def __neg__(self):
        return Jet2(-self.value, -self.grad, -self.hess3)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Jet2):
            c = np.asarray(other, dtype=np.float64)
            return Jet2(self.value * c, self.grad * c[..., None], self.hess3 * c[..., None])
        u, v = self, other
        ug, vg = u.grad, v.grad
        uv = np.asarray(u.value)[..., None]
        vv = np.asarray(v.value)[..., None]
        cross = np.stack(
            [
                2.0 * ug[..., 0] * vg[..., 0],
                ug[..., 0] * vg[..., 1] + ug[..., 1] * vg[..., 0],
                2.0 * ug[..., 1] * vg[..., 1],
            ],
            -1,
        )
        return Jet2(u.value * v.value, uv * vg + vv * ug, uv * v.hess3 + vv * u.hess3 + cross)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet2):
            return self * other.reciprocal()
        return self * (1.0 / np.asarray(other, dtype=np.float64))

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def reciprocal(self) -> "Jet2":
        v = np.asarray(self.value, dtype=np.float64)
        return _chain(self, 1.0 / v, -1.0 / v**2, 2.0 / v**3)

    def __pow__(self, n: int):
        if not isinstance(n, (int, np.integer)) or n < 0:
            raise ValueError("only non-negative integer powers are supported")
        if n == 0:
            return Jet2.constant(np.ones_like(self.value, dtype=np.float64))
        v = np.asarray(self.value, dtype=np.float64)
        d1 = n * v ** (n - 1)
        d2 = n * (n - 1) * v ** (n - 2) if n >= 2 else np.zeros_like(v)
        return _chain(self, v**n, d1, d2)


def _outer3(g: np.ndarray) -> np.ndarray:
    return np.stack([g[..., 0] ** 2, g[..., 0] * g[..., 1], g[..., 1] ** 2], -1)


def _chain(j: Jet2, s0, s1, s2) -> Jet2:
    """Compose a scalar function with value/derivatives ``s0, s1, s2`` onto ``j``."""
    s1 = np.asarray(s1, dtype=np.float64)[..., None]
    s2 = np.asarray(s2, dtype=np.float64)[..., None]
    return Jet2(s0, s1 * j.grad, s2 * _outer3(j.grad) + s1 * j.hess3)


def exp(x):
    if isinstance(x, Jet2):
        e = np.exp(x.value)
        return _chain(x, e, e, e)
    return np.exp(x)


def sin(x):
    if isinstance(x, Jet2):
        s, c = np.sin(x.value), np.cos(x.value)
        return _chain(x, s, c, -s)
    return np.sin(x)


def cos(x):
    if isinstance(x, Jet2):
        s, c = np.sin(x.value), np.cos(x.value)
        return _chain(x, c, -s, -c)
    return np.cos(x)


def tanh(x):
    if isinstance(x, Jet2):
        t = np.tanh(x.value)
        sech2 = 1.0 - t * t
        return _chain(x, t, sech2, -2.0 * t * sech2)
    return np.tanh(x)


def sqrt(x):
    if isinstance(x, Jet2):
        r = np.sqrt(x.value)
        return _chain(x, r, 0.5 / r, -0.25 / (r * x.value))
    return np.sqrt(x)


# -- elementary jet operations ----------------------------------------------


def jet_seed(x) -> tuple[Jet2, Jet2]:
    """Coordinate jets of ``x1`` and ``x2`` at ``x`` (shape ``(2,)`` or ``(..., 2)``)."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != 2:
        raise ValueError(f"expected points with trailing dimension 2, got shape {x.shape}")
    batch = x.shape[:-1]
    zeros3 = np.zeros(batch + (3,))
    e1 = np.broadcast_to(np.array([1.0, 0.0]), batch + (2,)).copy()
    e2 = np.broadcast_to(np.array([0.0, 1.0]), batch + (2,)).copy()
    return Jet2(x[..., 0].copy(), e1, zeros3), Jet2(x[..., 1].copy(), e2, zeros3.copy())


def jet_affine(weights: Sequence[float], jets: Sequence[Jet2], bias: float = 0.0) -> Jet2:
    """``sum_i weights[i] * jets[i] + bias``; the bias only touches the value."""
    if len(weights) != len(jets):
        raise ValueError(f"{len(weights)} weights for {len(jets)} jets")
    if len(jets) == 0:
        raise ValueError("jet_affine needs at least one input")
    out = jets[0] * float(weights[0])
    for w, j in zip(weights[1:], jets[1:]):
        out = out + j * float(w)
    return out + bias


# -- activations --------------------------------------------------------------


@dataclass(frozen=True)
class ActivationProfile:
    """A smooth scalar activation together with its first three derivatives.

    ``derivatives(z)`` returns ``(s, s', s'', s''')`` evaluated from a single
    transcendental call. The third derivative is what backpropagation through
    the Hessian channels needs.
    """

    name: str
    derivatives: Callable[[np.ndarray], tuple]

    def sigma(self, z):
        return self.derivatives(z)[0]

    def dsigma(self, z):
        return self.derivatives(z)[1]

    def d2sigma(self, z):
        return self.derivatives(z)[2]

    def d3sigma(self, z):
        return self.derivatives(z)[3]


def _tanh_squared(z):
    t = np.tanh(z)
    t2 = t * t
    # sech^2 from tanh: cosh overflows for |z| > ~710
    s = 1.0 - t2
    return t2, 2.0 * t * s, 2.0 * s * (1.0 - 3.0 * t2), -8.0 * t * s * (2.0 - 3.0 * t2)


def _identity(z):
    z = np.asarray(z, dtype=np.float64)
    zero = np.zeros_like(z)
    return z, np.ones_like(z), zero, zero


TANH_SQUARED = ActivationProfile("tanh-squared", _tanh_squared)
IDENTITY = ActivationProfile("identity", _identity)
ACTIVATIONS = {a.name: a for a in (TANH_SQUARED, IDENTITY)}


def jet_activate(a: ActivationProfile, j: Jet2) -> Jet2:
    s0, s1, s2, _ = a.derivatives(np.asarray(j.value, dtype=np.float64))
    return _chain(j, s0, s1, s2)


# -- parameter gradients -----------------------------------------------------


class Differentiable(Protocol):
    """Scalar objective of a flat parameter vector with an exact gradient."""

    def __call__(self, params: np.ndarray) -> float: ...

    def value_and_grad(self, params: np.ndarray) -> tuple[float, np.ndarray]: ...


def param_gradient(scalar_fn: Differentiable, params: np.ndarray) -> np.ndarray:
    """Exact gradient of ``scalar_fn`` at ``params``, in flat-vector order.

    The objective supplies the gradient analytically through
    ``value_and_grad``; this wrapper only enforces the contract (shape and
    finiteness).
    """
    params = np.asarray(params, dtype=np.float64)
    value, grad = scalar_fn.value_and_grad(params)
    grad = np.asarray(grad, dtype=np.float64)
    if grad.shape != params.shape:
        raise ValueError(f"gradient shape {grad.shape} does not match params {params.shape}")
    if not np.isfinite(value) or not np.all(np.isfinite(grad)):
        raise DivergenceError("objective or gradient is not finite")
    return grad
