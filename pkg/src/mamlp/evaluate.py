"""Error metrics, error maps, ray-traced images and post-training audits.

NMAE against an exact reflector is computed after removing the additive
constant that the equation and boundary condition leave free (see
:func:`gauge_fix`). Images are indexed ``mass[row, col]`` with rows running
along y from ``ymin`` upward and columns along x from ``xmin``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .network import NetworkParams, evaluate, forward_jet, mapping
from .problems import ProblemSpec
from .sampling import Domain, Flower, boundary_points, eval_grid, halton_points

CIRCLE_EXTENT = (-1.05, 1.05, -1.05, 1.05)
FLOWER_EXTENT = (-1.15, 1.15, -1.15, 1.15)
DESK_RAYS = 10**6
DESK_BINS = (100, 100)
FULL_RAYS = 10**8
FULL_BINS = (250, 250)


def nmae(approx, exact) -> float:
    """mean|approx - exact| / mean|exact|."""
    approx = np.ravel(np.asarray(approx, dtype=np.float64))
    exact = np.ravel(np.asarray(exact, dtype=np.float64))
    if approx.size == 0 or approx.size != exact.size:
        raise ValueError(f"need equal nonzero lengths, got {approx.size} and {exact.size}")
    denom = np.mean(np.abs(exact))
    if denom == 0.0:
        raise ZeroDivisionError("exact values are identically zero")
    return float(np.mean(np.abs(approx - exact)) / denom)


def gauge_fix(approx, exact) -> np.ndarray:
    """Shift ``approx`` by the mean offset so the free additive constant does not count as error."""
    approx = np.asarray(approx, dtype=np.float64)
    exact = np.asarray(exact, dtype=np.float64)
    if approx.size == 0 or approx.shape != exact.shape:
        raise ValueError("approx and exact need the same nonzero shape")
    return approx - np.mean(approx - exact)


@dataclass
class ErrorMap:
    grid: np.ndarray
    abs_error: np.ndarray
    nmae: float
    exact: np.ndarray
    shape: tuple[int, int]

    def as_image(self) -> np.ndarray:
        return self.abs_error.reshape(self.shape)


def error_map(p: NetworkParams, spec: ProblemSpec, shape=(100, 100)) -> ErrorMap:
    grid = eval_grid(spec.source, shape)
    exact = spec.exact_values(grid)
    approx = gauge_fix(evaluate(p, grid), exact)
    err = np.abs(approx - exact)
    return ErrorMap(grid, err, float(np.mean(err) / np.mean(np.abs(exact))), exact, tuple(shape))


def nmae_monitor(spec: ProblemSpec, template: NetworkParams, shape=(100, 100)) -> Callable:
    """Flat-parameter callback returning the gauge-fixed NMAE on the evaluation grid."""
    from .network import unflatten

    grid = eval_grid(spec.source, shape)
    exact = spec.exact_values(grid)

    def monitor(flat) -> float:
        return nmae(gauge_fix(evaluate(unflatten(template, flat), grid), exact), exact)

    return monitor


# -- images ----------------------------------------------------------------------


@dataclass
class BinnedImage:
    extent: tuple[float, float, float, float]
    bins: tuple[int, int]
    mass: np.ndarray
    overflow: int = 0
    overflow_mass: float = 0.0
    meta: dict = field(default_factory=dict)

    @property
    def total(self) -> float:
        return float(self.mass.sum())


def _edges(extent, bins):
    xmin, xmax, ymin, ymax = extent
    rows, cols = bins
    return np.linspace(xmin, xmax, cols + 1), np.linspace(ymin, ymax, rows + 1)


def _check_bins(bins, extent):
    rows, cols = (int(b) for b in bins)
    if rows < 1 or cols < 1:
        raise ValueError("bins must be positive")
    xmin, xmax, ymin, ymax = extent
    if not (xmax > xmin and ymax > ymin):
        raise ValueError("extent must have positive width and height")
    return rows, cols


def default_extent(target: Domain) -> tuple[float, float, float, float]:
    return FLOWER_EXTENT if isinstance(target, Flower) else CIRCLE_EXTENT


def ray_trace(mapping_fn: Callable[[np.ndarray], np.ndarray], source: Domain,
              f: Optional[Callable] = None, n_rays: int = DESK_RAYS, bins=DESK_BINS,
              extent=CIRCLE_EXTENT, chunk: int = 1 << 17) -> BinnedImage:
    """Bin Halton rays on ``source`` by where ``mapping_fn`` sends them.

    Rays carry weight ``f(x)`` (unit weight when ``f`` is None). Chunks are
    histogrammed separately and summed in chunk order, so the result does
    not depend on how the work is split.
    """
    if n_rays < 1:
        raise ValueError("n_rays must be at least 1")
    rows, cols = _check_bins(bins, extent)
    xe, ye = _edges(extent, (rows, cols))
    xmin, xmax, ymin, ymax = extent
    pts = halton_points(source, n_rays)
    hist = np.zeros((rows, cols))
    overflow = 0
    overflow_w = 0.0
    total_w = 0.0
    for lo in range(0, n_rays, chunk):
        x = pts[lo:lo + chunk]
        y = np.asarray(mapping_fn(x), dtype=np.float64)
        w = np.ones(len(x)) if f is None else np.asarray(f(x), dtype=np.float64)
        out = ~((y[:, 0] >= xmin) & (y[:, 0] <= xmax) & (y[:, 1] >= ymin) & (y[:, 1] <= ymax))
        overflow += int(out.sum())
        overflow_w += float(w[out].sum())
        total_w += float(w.sum())
        h, _, _ = np.histogram2d(y[~out, 1], y[~out, 0], bins=(ye, xe), weights=w[~out])
        hist += h
    inside = hist.sum()
    if inside <= 0.0:
        raise ValueError("no ray landed inside the image extent")
    return BinnedImage(tuple(extent), (rows, cols), hist / inside, overflow,
                       overflow_w / total_w if total_w > 0 else 0.0, {"n_rays": n_rays})


def trace_network(p: NetworkParams, spec: ProblemSpec, n_rays: int = DESK_RAYS, bins=DESK_BINS,
                  extent=None) -> BinnedImage:
    """Ray-trace the learned mapping grad u_theta for ``spec``."""
    extent = default_extent(spec.target) if extent is None else extent
    return ray_trace(lambda x: mapping(p, x), spec.source, spec.f, n_rays, bins, extent)


def target_bin_integrals(spec: ProblemSpec, bins=DESK_BINS, extent=None, supersample: int = 4) -> np.ndarray:
    """Integral of g over the target inside each bin, by stratified midpoint sub-sampling."""
    if supersample < 1:
        raise ValueError("supersample must be at least 1")
    extent = default_extent(spec.target) if extent is None else extent
    rows, cols = _check_bins(bins, extent)
    xmin, xmax, ymin, ymax = extent
    s = int(supersample)
    dx = (xmax - xmin) / (cols * s)
    dy = (ymax - ymin) / (rows * s)
    xs = xmin + (np.arange(cols * s) + 0.5) * dx
    out = np.zeros((rows, cols))
    for r in range(rows * s):
        # one row of sub-points at a time keeps memory flat at full scale
        y = np.column_stack([xs, np.full_like(xs, ymin + (r + 0.5) * dy)])
        val = np.where(spec.target.contains(y), spec.g(y), 0.0)
        out[r // s] += val.reshape(cols, s).sum(axis=1)
    return out * dx * dy


def target_image(spec: ProblemSpec, bins=DESK_BINS, extent=None, supersample: int = 4) -> BinnedImage:
    extent = default_extent(spec.target) if extent is None else extent
    raw = target_bin_integrals(spec, bins, extent, supersample)
    total = raw.sum()
    if total <= 0.0:
        raise ValueError("target does not intersect the image extent")
    return BinnedImage(tuple(extent), tuple(int(b) for b in bins), raw / total,
                       meta={"supersample": supersample, "integral": float(total)})


def image_nmae(traced: BinnedImage, target: BinnedImage, inside_only: bool = False) -> float:
    """NMAE over all bins of the extent, or only over bins the target covers."""
    if tuple(traced.bins) != tuple(target.bins) or not np.allclose(traced.extent, target.extent):
        raise ValueError("images differ in bins or extent")
    if inside_only:
        keep = target.mass > 0.0
        return nmae(traced.mass[keep], target.mass[keep])
    return nmae(traced.mass, target.mass)


# -- audits ----------------------------------------------------------------------


@dataclass(frozen=True)
class ConvexityAudit:
    min_trace: float
    min_eigenvalue: float

    def passes(self, tol: float = 1e-6) -> bool:
        return self.min_trace >= -tol and self.min_eigenvalue >= -tol


def convexity_audit(p: NetworkParams, spec: ProblemSpec, shape=(100, 100)) -> ConvexityAudit:
    j = forward_jet(p, eval_grid(spec.source, shape))
    lam = j.hessian_eigenvalues()
    return ConvexityAudit(float(np.min(j.trace_hessian())), float(np.min(lam)))


def transport_audit(p: NetworkParams, spec: ProblemSpec, n_boundary: int = 500) -> float:
    """Largest boundary penalty of the learned mapping on ``n_boundary`` source boundary points."""
    y = mapping(p, boundary_points(spec.source, n_boundary))
    return float(np.max(spec.boundary_penalty(y)))


# -- export ----------------------------------------------------------------------


def write_grid_csv(path, values: np.ndarray) -> None:
    """``row,col,value`` lines with a header."""
    values = np.asarray(values, dtype=np.float64)
    rows, cols = values.shape
    r, c = np.meshgrid(np.arange(rows), np.arange(cols), indexing="ij")
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        fh.write("row,col,value\n")
        for i, j, v in zip(r.ravel(), c.ravel(), values.ravel()):
            fh.write(f"{i},{j},{float(v)!r}\n")


def write_pgm(path, values: np.ndarray, flip_y: bool = False) -> None:
    """16-bit binary PGM scaled so the largest value is white."""
    values = np.asarray(values, dtype=np.float64)
    if flip_y:
        values = values[::-1]
    top = values.max()
    scaled = np.zeros(values.shape) if top <= 0 else np.clip(values / top, 0.0, 1.0)
    data = np.round(scaled * 65535).astype(">u2")
    rows, cols = values.shape
    Path(path).write_bytes(f"P5\n{cols} {rows}\n65535\n".encode("ascii") + data.tobytes())


def read_pgm(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    fields, pos = [], 0
    while len(fields) < 4:
        while raw[pos:pos + 1].isspace():
            pos += 1
        end = pos
        while not raw[end:end + 1].isspace():
            end += 1
        fields.append(raw[pos:end])
        pos = end
    if fields[0] != b"P5":
        raise ValueError(f"{path}: not a binary PGM")
    cols, rows, maxval = (int(v) for v in fields[1:])
    dtype = ">u2" if maxval > 255 else "u1"
    # exactly one whitespace byte separates the header from the raster
    return np.frombuffer(raw, dtype=dtype, count=rows * cols, offset=pos + 1).reshape(rows, cols)


def write_image(prefix, img: BinnedImage) -> None:
    write_grid_csv(f"{prefix}.csv", img.mass)
    write_pgm(f"{prefix}.pgm", img.mass, flip_y=True)
