"""Fused elementwise kernels for the activation step of the channel forward/backward pass.

The numpy versions in :mod:`mamlp.network` allocate one temporary per
operation; these loops touch every element once. Both paths compute the same
expressions in the same order.
"""

from __future__ import annotations

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None


def _activate6(z, s0, s1, s2, a):
    n = z.shape[1]
    for i in range(n):
        g1 = z[1, i]
        g2 = z[2, i]
        d1 = s1[i]
        d2 = s2[i]
        s2g1 = d2 * g1
        s2g2 = d2 * g2
        a[0, i] = s0[i]
        a[1, i] = d1 * g1
        a[2, i] = d1 * g2
        a[3, i] = s2g1 * g1 + d1 * z[3, i]
        a[4, i] = s2g1 * g2 + d1 * z[4, i]
        a[5, i] = s2g2 * g2 + d1 * z[5, i]


def _activate6_tanh2(z, th, a, s1o, s2o, s3o):
    n = z.shape[1]
    for i in range(n):
        t = th[i]
        t2 = t * t
        s = 1.0 - t2
        d1 = 2.0 * t * s
        d2 = 2.0 * s * (1.0 - 3.0 * t2)
        s1o[i] = d1
        s2o[i] = d2
        s3o[i] = -8.0 * t * s * (2.0 - 3.0 * t2)
        g1 = z[1, i]
        g2 = z[2, i]
        s2g1 = d2 * g1
        s2g2 = d2 * g2
        a[0, i] = t2
        a[1, i] = d1 * g1
        a[2, i] = d1 * g2
        a[3, i] = s2g1 * g1 + d1 * z[3, i]
        a[4, i] = s2g1 * g2 + d1 * z[4, i]
        a[5, i] = s2g2 * g2 + d1 * z[5, i]


def _activate3_tanh2(z, th, a, s1o, s2o):
    n = z.shape[1]
    for i in range(n):
        t = th[i]
        t2 = t * t
        s = 1.0 - t2
        d1 = 2.0 * t * s
        s1o[i] = d1
        s2o[i] = 2.0 * s * (1.0 - 3.0 * t2)
        a[0, i] = t2
        a[1, i] = d1 * z[1, i]
        a[2, i] = d1 * z[2, i]


def _activate_backward3(da, z, s1, s2, dz):
    n = z.shape[1]
    for i in range(n):
        d1 = s1[i]
        dz[0, i] = da[0, i] * d1 + s2[i] * (da[1, i] * z[1, i] + da[2, i] * z[2, i])
        dz[1, i] = da[1, i] * d1
        dz[2, i] = da[2, i] * d1


def _activate_backward6(da, z, s1, s2, s3, dz):
    n = z.shape[1]
    for i in range(n):
        g1 = z[1, i]
        g2 = z[2, i]
        d1 = s1[i]
        d2 = s2[i]
        d11 = da[3, i]
        d12 = da[4, i]
        d22 = da[5, i]
        gg = d11 * g1 * g1 + d12 * g1 * g2 + d22 * g2 * g2
        hh = d11 * z[3, i] + d12 * z[4, i] + d22 * z[5, i]
        dz[0, i] = da[0, i] * d1 + (d2 * (da[1, i] * g1 + da[2, i] * g2 + hh) + s3[i] * gg)
        dz[1, i] = da[1, i] * d1 + d2 * (2.0 * d11 * g1 + d12 * g2)
        dz[2, i] = da[2, i] * d1 + d2 * (2.0 * d22 * g2 + d12 * g1)
        dz[3, i] = d11 * d1
        dz[4, i] = d12 * d1
        dz[5, i] = d22 * d1


# membership codes for the sampler kernel
STAR, SQUARE = 0, 1


def _inside(kind, prm, x, y):
    # STAR prm: cx, cy, base radius, amplitude, lobes; SQUARE prm: cx, cy, half side
    dx = x - prm[0]
    dy = y - prm[1]
    if kind == SQUARE:
        return abs(dx) < prm[2] and abs(dy) < prm[2]
    rho = prm[2] + prm[3] * np.cos(prm[4] * np.arctan2(dy, dx))
    return np.sqrt(dx * dx + dy * dy) < rho


def _bridson(kind, prm, lo, hi, r, k, seed, cap):
    np.random.seed(seed)
    cell = r / np.sqrt(2.0)
    nx = int(np.ceil((hi[0] - lo[0]) / cell)) + 1
    ny = int(np.ceil((hi[1] - lo[1]) / cell)) + 1
    grid = -np.ones((nx, ny), dtype=np.int64)
    pts = np.empty((cap, 2))
    active = np.empty(cap, dtype=np.int64)
    r2 = r * r
    while True:
        x = lo[0] + np.random.random() * (hi[0] - lo[0])
        y = lo[1] + np.random.random() * (hi[1] - lo[1])
        if _inside(kind, prm, x, y):
            break
    pts[0, 0] = x
    pts[0, 1] = y
    grid[int((x - lo[0]) / cell), int((y - lo[1]) / cell)] = 0
    active[0] = 0
    n_pts = 1
    n_act = 1
    while n_act > 0 and n_pts < cap:
        idx = np.random.randint(n_act)
        bx = pts[active[idx], 0]
        by = pts[active[idx], 1]
        placed = False
        for _ in range(k):
            # uniform by area in the annulus [r, 2r]
            rad = r * np.sqrt(1.0 + 3.0 * np.random.random())
            ang = 2.0 * np.pi * np.random.random()
            cx = bx + rad * np.cos(ang)
            cy = by + rad * np.sin(ang)
            if not _inside(kind, prm, cx, cy):
                continue
            i = int((cx - lo[0]) / cell)
            j = int((cy - lo[1]) / cell)
            clash = False
            for a in range(max(i - 2, 0), min(i + 3, nx)):
                for b in range(max(j - 2, 0), min(j + 3, ny)):
                    q = grid[a, b]
                    if q >= 0:
                        ex = pts[q, 0] - cx
                        ey = pts[q, 1] - cy
                        if ex * ex + ey * ey < r2:
                            clash = True
                            break
                if clash:
                    break
            if not clash:
                grid[i, j] = n_pts
                pts[n_pts, 0] = cx
                pts[n_pts, 1] = cy
                active[n_act] = n_pts
                n_act += 1
                n_pts += 1
                placed = True
                break
        if not placed:
            n_act -= 1
            active[idx] = active[n_act]
    return pts[:n_pts].copy()


if numba is not None:
    _inside = numba.njit(cache=True)(_inside)
    _bridson = numba.njit(cache=True)(_bridson)
    _activate6 = numba.njit(cache=True)(_activate6)
    _activate6_tanh2 = numba.njit(cache=True)(_activate6_tanh2)
    _activate_backward6 = numba.njit(cache=True)(_activate_backward6)
    _activate3_tanh2 = numba.njit(cache=True)(_activate3_tanh2)
    _activate_backward3 = numba.njit(cache=True)(_activate_backward3)

HAVE_NUMBA = numba is not None


def bridson(kind: int, prm, lo, hi, r: float, k: int, seed: int) -> np.ndarray:
    """Bridson dart throwing over a built-in domain, seeded with ``seed``."""
    lo = np.asarray(lo, dtype=np.float64)
    hi = np.asarray(hi, dtype=np.float64)
    # a disc of radius r/2 around each point is disjoint from the others
    cap = int(4.0 * np.prod(hi - lo + r) / (np.pi * r * r)) + 16
    return _bridson(kind, np.asarray(prm, dtype=np.float64), lo, hi, float(r), int(k), int(seed), cap)


def activate6(z: np.ndarray, s0, s1, s2, a=None) -> np.ndarray:
    k, n, w = z.shape
    a = np.empty_like(z) if a is None else a
    _activate6(z.reshape(k, n * w), s0.reshape(-1), s1.reshape(-1), s2.reshape(-1), a.reshape(k, n * w))
    return a


def activate6_tanh2(z: np.ndarray, out=None):
    """tanh^2 activation of all six channels; returns ``(a, (s1, s2, s3))``.

    ``out`` optionally supplies ``(a, s1, s2, s3, th)`` buffers to fill.
    """
    k, n, w = z.shape
    if out is None:
        a, s1, s2, s3, th = np.empty_like(z), *(np.empty((n, w)) for _ in range(4))
    else:
        a, s1, s2, s3, th = out
    # numpy's vectorised tanh is much faster than the scalar libm call inside the loop
    np.tanh(z[0], out=th)
    _activate6_tanh2(z.reshape(k, n * w), th.reshape(-1), a.reshape(k, n * w), s1.reshape(-1), s2.reshape(-1), s3.reshape(-1))
    return a, (s1, s2, s3)


def activate3_tanh2(z: np.ndarray, out=None):
    """tanh^2 activation of the value and gradient channels; returns ``(a, (s1, s2, None))``."""
    k, n, w = z.shape
    if out is None:
        a, s1, s2, th = np.empty_like(z), *(np.empty((n, w)) for _ in range(3))
    else:
        a, s1, s2, th = out
    np.tanh(z[0], out=th)
    _activate3_tanh2(z.reshape(k, n * w), th.reshape(-1), a.reshape(k, n * w), s1.reshape(-1), s2.reshape(-1))
    return a, (s1, s2, None)


def activate_backward3(da: np.ndarray, z: np.ndarray, s1, s2, dz=None) -> np.ndarray:
    k, n, w = z.shape
    dz = np.empty_like(z) if dz is None else dz
    _activate_backward3(da.reshape(k, n * w), z.reshape(k, n * w), s1.reshape(-1), s2.reshape(-1),
                        dz.reshape(k, n * w))
    return dz


def activate_backward6(da: np.ndarray, z: np.ndarray, s1, s2, s3, dz=None) -> np.ndarray:
    k, n, w = z.shape
    dz = np.empty_like(z) if dz is None else dz
    _activate_backward6(da.reshape(k, n * w), z.reshape(k, n * w), s1.reshape(-1), s2.reshape(-1),
                        s3.reshape(-1), dz.reshape(k, n * w))
    return dz
