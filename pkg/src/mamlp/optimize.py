"""L-BFGS with a More-Thuente line search, and full-batch Adam.

Objectives are callables ``fun(x) -> (loss, grad)`` where ``loss`` is either a
float or a :class:`~mamlp.loss.LossBreakdown`; breakdowns are kept in the run
record. An optional ``monitor(x) -> float`` (e.g. NMAE against an exact
solution) is recorded per iteration; its cost is excluded from the clock.
"""

from __future__ import annotations

import csv
import enum
import math
import time
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .jets import DivergenceError
from .loss import LossBreakdown


class TerminationReason(str, enum.Enum):
    LINESEARCH_FAILED = "linesearch_failed"
    TIMEOUT = "timeout"
    MAX_ITER = "max_iter"
    GRAD_TOL = "grad_tol"


class LineSearchError(RuntimeError):
    def __init__(self, message, step=None, evals=0):
        super().__init__(message)
        self.step = step
        self.evals = evals


@dataclass
class IterationRecord:
    iter: int
    time_s: float
    loss: LossBreakdown
    nmae: Optional[float] = None


CSV_HEADER = ["iter", "time_s", "loss_total", "loss_interior", "loss_convexity",
              "loss_boundary", "nmae", "termination_reason"]


@dataclass
class RunRecord:
    rows: list[IterationRecord] = field(default_factory=list)
    termination: Optional[TerminationReason] = None
    n_evals: int = 0

    @property
    def final(self) -> IterationRecord:
        return self.rows[-1]

    @property
    def wall_time(self) -> float:
        return self.rows[-1].time_s if self.rows else 0.0

    def last_nmae(self) -> Optional[float]:
        for row in reversed(self.rows):
            if row.nmae is not None:
                return row.nmae
        return None

    def csv_rows(self, include_time: bool = True) -> list[list[str]]:
        out = []
        last = len(self.rows) - 1
        for i, r in enumerate(self.rows):
            out.append([
                str(r.iter),
                repr(float(r.time_s)) if include_time else "",
                *(repr(float(v)) for v in (r.loss.total, r.loss.interior, r.loss.convexity, r.loss.boundary)),
                "" if r.nmae is None else repr(float(r.nmae)),
                self.termination.value if (i == last and self.termination is not None) else "",
            ])
        return out

    def write_csv(self, path, include_time: bool = True) -> None:
        with Path(path).open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(CSV_HEADER)
            w.writerows(self.csv_rows(include_time))


def _as_breakdown(v) -> LossBreakdown:
    if isinstance(v, LossBreakdown):
        return v
    return LossBreakdown(float(v), 0.0, 0.0)


class _Clock:
    """Wall clock that can be paused around monitoring."""

    def __init__(self):
        self.elapsed = 0.0
        self._t = time.perf_counter()

    def pause(self):
        self.elapsed += time.perf_counter() - self._t

    def resume(self):
        self._t = time.perf_counter()

    def now(self) -> float:
        return self.elapsed + time.perf_counter() - self._t


# -- More-Thuente ----------------------------------------------------------------


def _cubic_gamma(theta, a, b):
    s = max(abs(theta), abs(a), abs(b))
    return s * math.sqrt(max(0.0, (theta / s) ** 2 - (a / s) * (b / s)))


def _dcstep(stx, fx, dx, sty, fy, dy, stp, fp, dp, brackt, stpmin, stpmax):
    """Safeguarded step update of the More-Thuente interval of uncertainty."""
    sgnd = dp * math.copysign(1.0, dx)

    if fp > fx:
        # higher function value: the minimum is bracketed
        theta = 3.0 * (fx - fp) / (stp - stx) + dx + dp
        gamma = _cubic_gamma(theta, dx, dp)
        if stp < stx:
            gamma = -gamma
        p = (gamma - dx) + theta
        q = ((gamma - dx) + gamma) + dp
        stpc = stx + (p / q) * (stp - stx)
        stpq = stx + ((dx / ((fx - fp) / (stp - stx) + dx)) / 2.0) * (stp - stx)
        if abs(stpc - stx) < abs(stpq - stx):
            stpf = stpc
        else:
            stpf = stpc + (stpq - stpc) / 2.0
        brackt = True
    elif sgnd < 0.0:
        # derivatives of opposite sign: bracketed
        theta = 3.0 * (fx - fp) / (stp - stx) + dx + dp
        gamma = _cubic_gamma(theta, dx, dp)
        if stp > stx:
            gamma = -gamma
        p = (gamma - dp) + theta
        q = ((gamma - dp) + gamma) + dx
        stpc = stp + (p / q) * (stx - stp)
        stpq = stp + (dp / (dp - dx)) * (stx - stp)
        stpf = stpc if abs(stpc - stp) > abs(stpq - stp) else stpq
        brackt = True
    elif abs(dp) < abs(dx):
        # same sign, derivative magnitude decreases
        theta = 3.0 * (fx - fp) / (stp - stx) + dx + dp
        gamma = _cubic_gamma(theta, dx, dp)
        if stp > stx:
            gamma = -gamma
        p = (gamma - dp) + theta
        q = (gamma + (dx - dp)) + gamma
        r = p / q
        if r < 0.0 and gamma != 0.0:
            stpc = stp + r * (stx - stp)
        elif stp > stx:
            stpc = stpmax
        else:
            stpc = stpmin
        stpq = stp + (dp / (dp - dx)) * (stx - stp)
        if brackt:
            stpf = stpc if abs(stpc - stp) < abs(stpq - stp) else stpq
            if stp > stx:
                stpf = min(stp + 0.66 * (sty - stp), stpf)
            else:
                stpf = max(stp + 0.66 * (sty - stp), stpf)
        else:
            stpf = stpc if abs(stpc - stp) > abs(stpq - stp) else stpq
            stpf = min(stpmax, max(stpmin, stpf))
    else:
        # same sign, derivative magnitude does not decrease
        if brackt:
            theta = 3.0 * (fp - fy) / (sty - stp) + dy + dp
            gamma = _cubic_gamma(theta, dy, dp)
            if stp > sty:
                gamma = -gamma
            p = (gamma - dp) + theta
            q = ((gamma - dp) + gamma) + dy
            stpf = stp + (p / q) * (sty - stp)
        elif stp > stx:
            stpf = stpmax
        else:
            stpf = stpmin

    if fp > fx:
        sty, fy, dy = stp, fp, dp
    else:
        if sgnd < 0.0:
            sty, fy, dy = stx, fx, dx
        stx, fx, dx = stp, fp, dp
    return stx, fx, dx, sty, fy, dy, stpf, brackt


def more_thuente_search(phi: Callable[[float], tuple], f0: float, g0: float, step: float = 1.0,
                        c1: float = 1e-4, c2: float = 0.9, max_evals: int = 16,
                        xtol: float = 1e-14, stpmin: float = 0.0, stpmax: float = 1e20):
    """Find a step satisfying the strong Wolfe conditions along a descent direction.

    ``phi(step)`` returns ``(value, directional_derivative)``; ``f0``/``g0``
    are those at step 0. Returns ``(step, evals)``. Raises
    :class:`LineSearchError` when ``max_evals`` evaluations do not produce an
    acceptable step or rounding stalls the search.
    """
    if not g0 < 0.0:
        raise ValueError(f"search direction is not a descent direction (slope {g0})")
    if step <= 0.0:
        raise ValueError("initial step must be positive")
    xtrapl, xtrapu = 1.1, 4.0
    gtest = c1 * g0
    brackt = False
    stage = 1
    width = stpmax - stpmin
    width1 = 2.0 * width
    stx, fx, gx = 0.0, f0, g0
    sty, fy, gy = 0.0, f0, g0
    stmin, stmax = 0.0, step + xtrapu * step
    stp = step
    for evals in range(1, max_evals + 1):
        f, g = phi(stp)
        ftest = f0 + stp * gtest
        if stage == 1 and f <= ftest and g >= 0.0:
            stage = 2

        if f <= ftest and abs(g) <= c2 * (-g0):
            return stp, evals
        if not (math.isfinite(f) and math.isfinite(g)):
            # overshoot into a non-finite region: pull back toward the best point
            stp = stx + 0.25 * (stp - stx)
            continue
        if brackt and (stp <= stmin or stp >= stmax):
            raise LineSearchError("rounding errors prevent progress", stp, evals)
        if brackt and stmax - stmin <= xtol * stmax:
            raise LineSearchError("interval of uncertainty below xtol", stp, evals)
        if stp == stpmax and f <= ftest and g <= gtest:
            raise LineSearchError("step at upper bound", stp, evals)
        if stp == stpmin and (f > ftest or g >= gtest):
            raise LineSearchError("step at lower bound", stp, evals)

        if stage == 1 and f <= fx and f > ftest:
            # modified function psi(stp) = f(stp) - f0 - stp * gtest
            fm, fxm, fym = f - stp * gtest, fx - stx * gtest, fy - sty * gtest
            gm, gxm, gym = g - gtest, gx - gtest, gy - gtest
            stx, fxm, gxm, sty, fym, gym, stp, brackt = _dcstep(
                stx, fxm, gxm, sty, fym, gym, stp, fm, gm, brackt, stmin, stmax)
            fx, fy = fxm + stx * gtest, fym + sty * gtest
            gx, gy = gxm + gtest, gym + gtest
        else:
            stx, fx, gx, sty, fy, gy, stp, brackt = _dcstep(
                stx, fx, gx, sty, fy, gy, stp, f, g, brackt, stmin, stmax)

        if brackt:
            if abs(sty - stx) >= 0.66 * width1:
                stp = stx + 0.5 * (sty - stx)
            width1 = width
            width = abs(sty - stx)
            stmin, stmax = min(stx, sty), max(stx, sty)
        else:
            stmin = stp + xtrapl * (stp - stx)
            stmax = stp + xtrapu * (stp - stx)
        stp = min(max(stp, stpmin), stpmax)
        if (brackt and (stp <= stmin or stp >= stmax)) or (brackt and stmax - stmin <= xtol * stmax):
            stp = stx
    raise LineSearchError(f"no acceptable step within {max_evals} evaluations", stp, max_evals)


# -- L-BFGS -------------------------------------------------------------------


@dataclass
class LbfgsOptions:
    m_mem: int = 10
    timeout_s: float = 15.0
    max_iter: Optional[int] = None
    grad_tol: float = 1e-10
    c1: float = 1e-4
    c2: float = 0.9
    max_ls_evals: int = 16


@dataclass
class LbfgsState:
    params: np.ndarray
    grad: np.ndarray
    memory: deque = field(default_factory=deque)
    m_mem: int = 10
    iter: int = 0

    def push(self, s: np.ndarray, y: np.ndarray) -> bool:
        """Store a curvature pair; pairs with s.y <= 1e-10 |s||y| are discarded."""
        sy = float(s @ y)
        if sy <= 1e-10 * np.linalg.norm(s) * np.linalg.norm(y):
            return False
        assert sy > 0.0
        self.memory.append((s, y, 1.0 / sy))
        while len(self.memory) > self.m_mem:
            self.memory.popleft()
        return True


def lbfgs_direction(state: LbfgsState) -> np.ndarray:
    """Two-loop recursion: -H g with H0 = (s.y / y.y) I from the newest pair."""
    q = state.grad.copy()
    if not state.memory:
        return -q
    alphas = []
    for s, y, rho in reversed(state.memory):
        a = rho * float(s @ q)
        q -= a * y
        alphas.append(a)
    s, y, rho = state.memory[-1]
    q *= 1.0 / (rho * float(y @ y))
    for (s, y, rho), a in zip(state.memory, reversed(alphas)):
        b = rho * float(y @ q)
        q += (a - b) * s
    d = -q
    if not np.all(np.isfinite(d)):
        raise DivergenceError("L-BFGS direction is not finite")
    return d


def _start(fun, x0, clock, record, monitor):
    x = np.array(x0, dtype=np.float64)
    v, g = fun(x)
    br = _as_breakdown(v)
    g = np.asarray(g, dtype=np.float64)
    if not (math.isfinite(br.total) and np.all(np.isfinite(g))):
        raise DivergenceError("loss is not finite at the initial parameters")
    _log(record, 0, clock, br, x, monitor, 1)
    return x, br, g


def _log(record, it, clock, br, x, monitor, monitor_every):
    t = clock.now()
    nmae = None
    if monitor is not None and (it % monitor_every == 0):
        clock.pause()
        nmae = float(monitor(x))
        clock.resume()
    record.rows.append(IterationRecord(it, t, br, nmae))


def _finish_monitor(record, x, clock, monitor):
    if monitor is not None and record.rows and record.rows[-1].nmae is None:
        record.rows[-1].nmae = float(monitor(x))


def run_lbfgs(fun, x0, opts: LbfgsOptions = LbfgsOptions(), monitor=None, monitor_every: int = 1):
    """Minimise ``fun`` from ``x0``. Returns ``(x, RunRecord, TerminationReason)``.

    Stops on the first of: line-search failure, timeout (checked between
    iterations), ``max_iter`` iterations, or infinity-norm of the gradient
    below ``grad_tol``.
    """
    clock = _Clock()
    record = RunRecord()
    x, br, g = _start(fun, x0, clock, record, monitor)
    record.n_evals = 1
    state = LbfgsState(x, g, m_mem=opts.m_mem)
    max_iter = math.inf if opts.max_iter is None else opts.max_iter
    reason = None
    while True:
        if np.max(np.abs(state.grad)) <= opts.grad_tol:
            reason = TerminationReason.GRAD_TOL
        elif clock.now() >= opts.timeout_s:
            reason = TerminationReason.TIMEOUT
        elif state.iter >= max_iter:
            reason = TerminationReason.MAX_ITER
        if reason is not None:
            break

        d = lbfgs_direction(state)
        slope = float(d @ state.grad)
        if not slope < 0.0:
            # stale curvature; restart from steepest descent
            state.memory.clear()
            d = -state.grad
            slope = float(d @ state.grad)
        step0 = 1.0 if state.iter > 0 else 1.0 / max(np.linalg.norm(state.grad), 1e-300)

        trial = {}

        def phi(a):
            xa = state.params + a * d
            try:
                va, ga = fun(xa)
            except DivergenceError:
                return math.inf, math.inf
            ga = np.asarray(ga, dtype=np.float64)
            trial[a] = (xa, _as_breakdown(va), ga)
            total = _as_breakdown(va).total
            return total, float(ga @ d)

        try:
            step, evals = more_thuente_search(phi, br.total, slope, step0, opts.c1, opts.c2,
                                              opts.max_ls_evals)
        except LineSearchError as exc:
            record.n_evals += exc.evals
            reason = TerminationReason.LINESEARCH_FAILED
            break
        record.n_evals += evals
        x_new, br, g_new = trial[step]
        state.push(x_new - state.params, g_new - state.grad)
        state.params, state.grad = x_new, g_new
        state.iter += 1
        _log(record, state.iter, clock, br, state.params, monitor, monitor_every)
    _finish_monitor(record, state.params, clock, monitor)
    record.termination = reason
    return state.params, record, reason


# -- Adam ---------------------------------------------------------------------


@dataclass
class AdamOptions:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    timeout_s: float = 15.0
    max_iter: Optional[int] = None


def run_adam(fun, x0, opts: AdamOptions = AdamOptions(), monitor=None, monitor_every: int = 1):
    """Deterministic full-batch Adam with bias correction."""
    clock = _Clock()
    record = RunRecord()
    x, br, g = _start(fun, x0, clock, record, monitor)
    record.n_evals = 1
    m = np.zeros_like(x)
    v = np.zeros_like(x)
    max_iter = math.inf if opts.max_iter is None else opts.max_iter
    it = 0
    while True:
        if clock.now() >= opts.timeout_s:
            reason = TerminationReason.TIMEOUT
            break
        if it >= max_iter:
            reason = TerminationReason.MAX_ITER
            break
        it += 1
        m = opts.beta1 * m + (1.0 - opts.beta1) * g
        v = opts.beta2 * v + (1.0 - opts.beta2) * g * g
        m_hat = m / (1.0 - opts.beta1**it)
        v_hat = v / (1.0 - opts.beta2**it)
        x = x - opts.lr * m_hat / (np.sqrt(v_hat) + opts.eps)
        val, g = fun(x)
        g = np.asarray(g, dtype=np.float64)
        br = _as_breakdown(val)
        record.n_evals += 1
        if not (math.isfinite(br.total) and np.all(np.isfinite(g))):
            raise DivergenceError(f"Adam diverged at iteration {it}")
        _log(record, it, clock, br, x, monitor, monitor_every)
    _finish_monitor(record, x, clock, monitor)
    record.termination = reason
    return x, record, reason
