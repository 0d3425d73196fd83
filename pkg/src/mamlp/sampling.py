"""Domains and point sets: Poisson-disk interiors, boundary rings, grids, Halton rays."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _kernels


class SamplingError(RuntimeError):
    pass


class Domain:
    """A closed planar set. Subclasses describe a disk, a square and a flower."""

    kind: str

    @property
    def area(self) -> float:
        raise NotImplementedError

    @property
    def boundary_length(self) -> float:
        raise NotImplementedError

    @property
    def bbox(self) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    def contains(self, p) -> np.ndarray:
        """Strict interior membership for points of shape ``(..., 2)``."""
        raise NotImplementedError

    def boundary_param(self, t) -> np.ndarray:
        """Boundary point at parameter ``t`` in [0, 1), counter-clockwise."""
        raise NotImplementedError

    def boundary_distance(self, p) -> np.ndarray:
        raise NotImplementedError

    def quadrature(self, n: int = 64) -> tuple[np.ndarray, np.ndarray]:
        """Gauss-type nodes and area weights for integrating over the domain."""
        raise NotImplementedError


class StarDomain(Domain):
    """Star-shaped about ``center`` with boundary radius ``rho(phi)``."""

    center: np.ndarray

    def rho(self, phi):
        raise NotImplementedError

    def drho(self, phi):
        raise NotImplementedError

    def _polar(self, p):
        d = np.asarray(p, dtype=np.float64) - self.center
        return np.hypot(d[..., 0], d[..., 1]), np.arctan2(d[..., 1], d[..., 0])

    def contains(self, p):
        r, phi = self._polar(p)
        return r < self.rho(phi)

    def boundary_param(self, t):
        phi = 2.0 * np.pi * np.asarray(t, dtype=np.float64)
        r = self.rho(phi)
        return self.center + np.stack([r * np.cos(phi), r * np.sin(phi)], -1)

    def radial_penalty(self, y):
        """Squared gap between ``y`` and the boundary point on the same ray.

        Returns ``(penalty, gradient)``. For a disk this is the squared
        distance to the circle; for other star shapes it is the radial
        surrogate, which vanishes exactly on the boundary.
        """
        d = np.asarray(y, dtype=np.float64) - self.center
        r = np.hypot(d[..., 0], d[..., 1])
        phi = np.arctan2(d[..., 1], d[..., 0])
        gap = r - self.rho(phi)
        safe = np.where(r > 0.0, r, 1.0)
        er = d / safe[..., None]
        etheta = np.stack([-er[..., 1], er[..., 0]], -1)
        dr = self.drho(phi)
        grad = 2.0 * gap[..., None] * (er - (dr / safe)[..., None] * etheta)
        grad = np.where((r > 0.0)[..., None], grad, 0.0)
        return gap * gap, grad

    def boundary_penalty(self, y):
        return self.radial_penalty(y)[0]

    def quadrature(self, n: int = 64):
        xr, wr = np.polynomial.legendre.leggauss(n)
        n_phi = 4 * n
        phi = 2.0 * np.pi * np.arange(n_phi) / n_phi
        rho = self.rho(phi)
        # r = rho(phi) * s, s in [0, 1]; area element r dr dphi
        s = 0.5 * (xr + 1.0)
        ws = 0.5 * wr
        r = rho[:, None] * s[None, :]
        w = (2.0 * np.pi / n_phi) * rho[:, None] ** 2 * s[None, :] * ws[None, :]
        pts = self.center + np.stack([r * np.cos(phi)[:, None], r * np.sin(phi)[:, None]], -1)
        return pts.reshape(-1, 2), w.ravel()


@dataclass(frozen=True, eq=False)
class Disk(StarDomain):
    center: tuple = (0.0, 0.0)
    radius: float = 1.0
    kind = "disk"

    def rho(self, phi):
        return np.full(np.shape(phi), self.radius)

    def drho(self, phi):
        return np.zeros(np.shape(phi))

    @property
    def area(self):
        return math.pi * self.radius**2

    @property
    def boundary_length(self):
        return 2.0 * math.pi * self.radius

    @property
    def bbox(self):
        c = np.asarray(self.center, dtype=np.float64)
        return c - self.radius, c + self.radius

    def boundary_distance(self, p):
        r, _ = self._polar(p)
        return np.abs(r - self.radius)


@dataclass(frozen=True, eq=False)
class Flower(StarDomain):
    """``r <= 1 + amplitude * cos(lobes * phi)`` about the origin."""

    amplitude: float = 0.1
    lobes: int = 10
    center: tuple = (0.0, 0.0)
    kind = "flower"

    def rho(self, phi):
        return 1.0 + self.amplitude * np.cos(self.lobes * np.asarray(phi))

    def drho(self, phi):
        return -self.amplitude * self.lobes * np.sin(self.lobes * np.asarray(phi))

    @property
    def area(self):
        return math.pi * (1.0 + 0.5 * self.amplitude**2)

    @property
    def boundary_length(self):
        phi = np.linspace(0.0, 2.0 * np.pi, 20001)
        speed = np.hypot(self.rho(phi), self.drho(phi))
        return float(np.trapezoid(speed, phi))

    @property
    def bbox(self):
        c = np.asarray(self.center, dtype=np.float64)
        r = 1.0 + abs(self.amplitude)
        return c - r, c + r

    def boundary_distance(self, p):
        # radial gap; exact distance is not needed for membership checks
        r, phi = self._polar(p)
        return np.abs(r - self.rho(phi))


@dataclass(frozen=True, eq=False)
class Square(Domain):
    """Axis-aligned square ``center +- half_side``."""

    center: tuple = (0.0, 0.0)
    half_side: float = 0.5
    kind = "square"

    @property
    def area(self):
        return (2.0 * self.half_side) ** 2

    @property
    def boundary_length(self):
        return 8.0 * self.half_side

    @property
    def bbox(self):
        c = np.asarray(self.center, dtype=np.float64)
        return c - self.half_side, c + self.half_side

    def contains(self, p):
        d = np.abs(np.asarray(p, dtype=np.float64) - self.center)
        return (d[..., 0] < self.half_side) & (d[..., 1] < self.half_side)

    def boundary_param(self, t):
        # starts at the right edge midpoint, counter-clockwise
        h = self.half_side
        t = np.mod(np.asarray(t, dtype=np.float64), 1.0)
        s = np.mod(t * 8.0 + 1.0, 8.0)  # arc position in units of h from corner (h, -h)
        side = np.minimum(np.floor(s / 2.0), 3).astype(int)
        u = s - 2.0 * side - 1.0  # in [-1, 1) along the side
        x = np.select([side == 0, side == 1, side == 2, side == 3], [np.ones_like(u), -u, -np.ones_like(u), u])
        y = np.select([side == 0, side == 1, side == 2, side == 3], [u, np.ones_like(u), -u, -np.ones_like(u)])
        return self.center + h * np.stack([x, y], -1)

    def boundary_distance(self, p):
        d = np.abs(np.asarray(p, dtype=np.float64) - self.center) - self.half_side
        outside = np.hypot(np.maximum(d[..., 0], 0.0), np.maximum(d[..., 1], 0.0))
        inside = np.minimum(np.maximum(d[..., 0], d[..., 1]), 0.0)
        return np.abs(outside + inside)

    def quadrature(self, n: int = 64):
        x, w = np.polynomial.legendre.leggauss(n)
        h = self.half_side
        X, Y = np.meshgrid(h * x, h * x, indexing="ij")
        W = np.outer(w, w) * h * h
        pts = self.center + np.stack([X.ravel(), Y.ravel()], -1)
        return pts, W.ravel()


# -- samplers -------------------------------------------------------------------


def poisson_radius(area: float, n_target: int) -> float:
    """Spacing at which ``n_target`` points would pack ``area`` hexagonally."""
    return math.sqrt(2.0 * area / (math.sqrt(3.0) * n_target))


def _kernel_shape(domain: Domain):
    """Membership code and parameters for the compiled sampler, or None."""
    c = tuple(float(v) for v in domain.center) if hasattr(domain, "center") else None
    if isinstance(domain, Disk):
        return _kernels.STAR, (*c, domain.radius, 0.0, 0.0)
    if isinstance(domain, Flower):
        return _kernels.STAR, (*c, 1.0, domain.amplitude, float(domain.lobes))
    if isinstance(domain, Square):
        return _kernels.SQUARE, (*c, domain.half_side)
    return None


def _bridson(domain: Domain, r: float, rng: np.random.Generator, k: int = 30) -> np.ndarray:
    shape = _kernel_shape(domain) if _kernels.HAVE_NUMBA else None
    if shape is not None:
        return _kernels.bridson(shape[0], shape[1], *domain.bbox, r, k, int(rng.integers(2**31)))
    return _bridson_py(domain, r, rng, k)


def _bridson_py(domain: Domain, r: float, rng: np.random.Generator, k: int = 30) -> np.ndarray:
    lo, hi = (np.asarray(b, dtype=np.float64) for b in domain.bbox)
    cell = r / math.sqrt(2.0)
    nx = int(math.ceil((hi[0] - lo[0]) / cell)) + 1
    ny = int(math.ceil((hi[1] - lo[1]) / cell)) + 1
    grid = -np.ones((nx, ny), dtype=np.int64)
    r2 = r * r

    def cell_of(p):
        return int((p[0] - lo[0]) / cell), int((p[1] - lo[1]) / cell)

    while True:
        first = lo + rng.random(2) * (hi - lo)
        if domain.contains(first):
            break
    points = [first]
    grid[cell_of(first)] = 0
    active = [0]
    while active:
        idx = int(rng.integers(len(active)))
        base = points[active[idx]]
        # k candidates uniform by area in the annulus [r, 2r]
        rad = r * np.sqrt(1.0 + 3.0 * rng.random(k))
        ang = 2.0 * np.pi * rng.random(k)
        cands = base + np.stack([rad * np.cos(ang), rad * np.sin(ang)], -1)
        inside = domain.contains(cands)
        placed = False
        for c, ok in zip(cands, inside):
            if not ok:
                continue
            i, j = cell_of(c)
            clash = False
            for a in range(max(i - 2, 0), min(i + 3, nx)):
                for b in range(max(j - 2, 0), min(j + 3, ny)):
                    q = grid[a, b]
                    if q >= 0:
                        d = points[q] - c
                        if d[0] * d[0] + d[1] * d[1] < r2:
                            clash = True
                            break
                if clash:
                    break
            if not clash:
                grid[i, j] = len(points)
                active.append(len(points))
                points.append(c)
                placed = True
                break
        if not placed:
            active[idx] = active[-1]
            active.pop()
    return np.array(points)


@dataclass
class PoissonSample:
    points: np.ndarray
    radius: float


def poisson_disk_with_radius(domain: Domain, n_target: int, seed: int = 0, k: int = 30,
                             max_retries: int = 20) -> PoissonSample:
    if n_target < 1:
        raise ValueError("n_target must be at least 1")
    rng = np.random.default_rng(seed)
    r = poisson_radius(domain.area, n_target)
    for _ in range(max_retries + 1):
        pts = _bridson(domain, r, rng, k)
        if len(pts) >= n_target:
            if len(pts) > n_target:
                keep = np.sort(rng.choice(len(pts), size=n_target, replace=False))
                pts = pts[keep]
            return PoissonSample(pts, r)
        r *= 0.95
    raise SamplingError(f"Poisson disk sampling yielded too few points after {max_retries} retries")


def poisson_disk(domain: Domain, n_target: int, seed: int = 0) -> np.ndarray:
    """Exactly ``n_target`` blue-noise points strictly inside ``domain``."""
    return poisson_disk_with_radius(domain, n_target, seed).points


def boundary_points(domain: Domain, m: int) -> np.ndarray:
    if m < 1:
        raise ValueError("m must be at least 1")
    return domain.boundary_param(np.arange(m) / m)


def eval_grid(domain: Domain, shape: tuple[int, int] = (100, 100)) -> np.ndarray:
    """Polar grid (radii in (0, R], no duplicated centre) for disks, tensor grid otherwise."""
    rows, cols = shape
    if rows < 2 or cols < 2:
        raise ValueError("grid needs at least 2 rows and 2 columns")
    if isinstance(domain, Disk):
        r = domain.radius * np.arange(1, rows + 1) / rows
        phi = 2.0 * np.pi * np.arange(cols) / cols
        R, P = np.meshgrid(r, phi, indexing="ij")
        return domain.center + np.stack([R * np.cos(P), R * np.sin(P)], -1).reshape(-1, 2)
    lo, hi = domain.bbox
    xs = np.linspace(lo[0], hi[0], cols)
    ys = np.linspace(lo[1], hi[1], rows)
    X, Y = np.meshgrid(xs, ys, indexing="xy")
    pts = np.stack([X.ravel(), Y.ravel()], -1)
    if isinstance(domain, Square):
        return pts
    keep = domain.contains(pts) | (domain.boundary_distance(pts) < 1e-12)
    return pts[keep]


def radical_inverse(index: np.ndarray, base: int) -> np.ndarray:
    index = np.asarray(index, dtype=np.int64).copy()
    out = np.zeros(index.shape)
    f = 1.0 / base
    while np.any(index > 0):
        out += f * (index % base)
        index //= base
        f /= base
    return out


def halton(n: int, start: int = 1) -> np.ndarray:
    """Halton points in bases (2, 3) for indices ``start .. start+n-1``."""
    idx = np.arange(start, start + n, dtype=np.int64)
    return np.stack([radical_inverse(idx, 2), radical_inverse(idx, 3)], -1)


def halton_points(domain: Domain, n: int, skip: int = 64) -> np.ndarray:
    """First ``n`` Halton points (after ``skip``) that fall inside ``domain``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    lo, hi = (np.asarray(b, dtype=np.float64) for b in domain.bbox)
    out = []
    have = 0
    start = 1 + skip
    batch = max(n, 1024)
    while have < n:
        u = halton(batch, start)
        start += batch
        pts = lo + u * (hi - lo)
        pts = pts[domain.contains(pts)]
        out.append(pts)
        have += len(pts)
    return np.concatenate(out)[:n]


# -- export --------------------------------------------------------------------


def write_points_csv(path, points: np.ndarray) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["x1", "x2"])
        for x1, x2 in points:
            w.writerow([repr(float(x1)), repr(float(x2))])


@dataclass
class SamplePlan:
    interior: np.ndarray
    boundary: np.ndarray
    seed: int
    poisson_radius: float

    @classmethod
    def build(cls, domain: Domain, n_interior: int = 2500, n_boundary: int = 500, seed: int = 0) -> "SamplePlan":
        sample = poisson_disk_with_radius(domain, n_interior, seed)
        return cls(sample.points, boundary_points(domain, n_boundary), seed, sample.radius)
