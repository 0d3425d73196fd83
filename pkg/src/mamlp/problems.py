"""The five test reflector problems A-E.

Densities and exact reflectors are written with the dispatching elementary
functions from :mod:`mamlp.jets`, so the same expression yields plain values
on arrays and exact first/second derivatives on jets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .jets import Jet2, cos, exp, jet_seed, sin
from .sampling import Disk, Domain, Flower, Square, StarDomain

PROBLEM_NAMES = ("A", "B", "C", "D", "E")

Field = Callable  # (x1, x2) -> value, jets or arrays


class InconsistentProblem(ValueError):
    pass


@dataclass(frozen=True)
class ProblemSpec:
    name: str
    source: Domain
    target: StarDomain
    f: Callable[[np.ndarray], np.ndarray]
    g_expr: Field
    exact_expr: Optional[Field] = None
    description: str = ""

    def g(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=np.float64)
        return _as_array(self.g_expr(y[..., 0], y[..., 1]), y.shape[:-1])

    def g_and_grad(self, y) -> tuple[np.ndarray, np.ndarray]:
        """Target density and its gradient at mapped points ``y`` (shape ``(N, 2)``)."""
        y = np.asarray(y, dtype=np.float64)
        j = self.g_expr(*jet_seed(y))
        if not isinstance(j, Jet2):
            return _as_array(j, y.shape[:-1]), np.zeros(y.shape)
        return np.asarray(j.value), j.grad

    def boundary_penalty(self, y) -> np.ndarray:
        return self.target.boundary_penalty(y)

    def boundary_penalty_and_grad(self, y):
        return self.target.radial_penalty(y)

    @property
    def has_exact(self) -> bool:
        return self.exact_expr is not None

    def exact_u(self, x) -> Jet2:
        if self.exact_expr is None:
            raise ValueError(f"problem {self.name} has no closed-form reflector")
        return self.exact_expr(*jet_seed(x))

    def exact_values(self, x) -> np.ndarray:
        if self.exact_expr is None:
            raise ValueError(f"problem {self.name} has no closed-form reflector")
        x = np.asarray(x, dtype=np.float64)
        return np.asarray(self.exact_expr(x[..., 0], x[..., 1]))


def _as_array(v, shape):
    return np.broadcast_to(np.asarray(v, dtype=np.float64), shape).copy()


def derived_f(exact_u: Field, g: Field, x) -> np.ndarray:
    """Source density that makes ``exact_u`` solve the Monge-Ampere equation for ``g``."""
    j = exact_u(*jet_seed(x))
    m = j.grad
    gv = _as_array(g(m[..., 0], m[..., 1]), np.shape(j.value))
    if np.any(gv <= 0.0):
        raise InconsistentProblem("target density is not positive at the exact mapping")
    return gv * j.det_hessian()


# -- closed forms ---------------------------------------------------------------


def u_a(x1, x2):
    return exp(x1 * x1 + x2 * x2) / (2.0 * math.e)


def u_b(x1, x2):
    r2 = x1 * x1 + x2 * x2
    bump = (x1 * x1 * x2) / 2.0 + cos(x1 * x2) / 2.0
    return r2 / 2.0 + bump * (cos(math.pi * r2) + 1.0) / (2.0 * math.pi**2)


def u_c(x1, x2):
    r2 = x1 * x1 + x2 * x2
    return r2 / 2.0 + exp(x2 - x1 * x1) * (1.0 + cos(math.pi * r2)) / (5.0 * math.pi**2)


def g_ab(y1, y2):
    return sin(y1 * y1 + y2) * cos(4.0 * y2) + 2.0


def g_c(y1, y2):
    return sin(y1 * y1 + 8.0 * y2**3) * cos(5.0 * y2) * sin(5.0 * y1 + 7.0 * y2) + 3.0


def _constant(c: float) -> Field:
    def density(y1, y2):
        return c

    return density


def _uniform_f(value: float = 1.0):
    def f(x):
        return np.full(np.shape(x)[:-1], value)

    return f


def _derived(exact, g):
    def f(x):
        return derived_f(exact, g, x)

    return f


def make_problem(name: str) -> ProblemSpec:
    name = name.upper()
    unit = Disk()
    if name == "A":
        return ProblemSpec("A", unit, unit, _derived(u_a, g_ab), g_ab, u_a,
                           "symmetric circle to circle")
    if name == "B":
        return ProblemSpec("B", unit, unit, _derived(u_b, g_ab), g_ab, u_b,
                           "asymmetric circle to circle 1")
    if name == "C":
        return ProblemSpec("C", unit, unit, _derived(u_c, g_c), g_c, u_c,
                           "asymmetric circle to circle 2")
    if name == "D":
        source = Square(half_side=0.5)
        return ProblemSpec("D", source, unit, _uniform_f(), _constant(source.area / unit.area),
                           description="uniform square to uniform circle")
    if name == "E":
        target = Flower()
        return ProblemSpec("E", unit, target, _uniform_f(), _constant(unit.area / target.area),
                           description="uniform circle to uniform flower")
    raise KeyError(f"unknown problem {name!r}; choose from {', '.join(PROBLEM_NAMES)}")
