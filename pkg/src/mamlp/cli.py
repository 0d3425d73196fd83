"""Command-line front end: ``solve``, ``sweep``, ``raytrace`` and ``report``.

Every command reads an optional JSON config file (``--config``); flags given
on the command line override values from the file. Flag names mirror the
config keys.

Exit codes: 0 success, 2 invalid configuration, 3 I/O error, 4 divergence.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import math
import statistics
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import evaluate as ev
from .jets import DivergenceError
from .loss import LossWeights, MongeAmpereLoss
from .network import (DEFAULT_LAYER_SIZES, INIT_SCHEMES, init, load_checkpoint, negate, save_checkpoint,
                      unflatten, validate_layer_sizes)
from .optimize import AdamOptions, LbfgsOptions, run_adam, run_lbfgs
from .problems import PROBLEM_NAMES, make_problem
from .sampling import SamplePlan

log = logging.getLogger("mamlp")

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_DIVERGED = 0, 2, 3, 4
OPTIMIZERS = ("lbfgs", "adam")
SWEEP_AXES = ("n_interior", "n_boundary", "depth", "width", "optimizer")
SWEEP_HEADER = ["axis", "axis_value", "seed", "final_nmae", "final_loss", "wall_time_s",
                "n_iter", "termination_reason"]


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    problem: str = "A"
    layer_sizes: tuple = DEFAULT_LAYER_SIZES
    n_interior: int = 2500
    n_boundary: int = 500
    weights: tuple = (1.0, 1.0, 1.0)
    optimizer: str = "lbfgs"
    timeout_s: float = 15.0
    max_iter: Optional[int] = None
    m_mem: int = 10
    lr: float = 1e-3
    orientation_probe: int = 20
    init_scheme: str = "lecun"
    seeds: tuple = (0,)
    grid: tuple = (100, 100)
    n_rays: int = ev.DESK_RAYS
    bins: tuple = ev.DESK_BINS
    out_dir: str = "runs"
    record_nmae: bool = True

    def validate(self) -> "RunConfig":
        if str(self.problem).upper() not in PROBLEM_NAMES:
            raise ConfigError(f"unknown problem {self.problem!r}; choose from {', '.join(PROBLEM_NAMES)}")
        try:
            validate_layer_sizes(self.layer_sizes)
            LossWeights(*self.weights)
        except (ValueError, TypeError) as exc:
            raise ConfigError(str(exc)) from exc
        if self.optimizer not in OPTIMIZERS:
            raise ConfigError(f"optimizer must be one of {OPTIMIZERS}")
        counts = {"n_interior": self.n_interior, "n_boundary": self.n_boundary, "m_mem": self.m_mem,
                  "n_rays": self.n_rays}
        for name, v in counts.items():
            if int(v) < 1:
                raise ConfigError(f"{name} must be positive")
        if len(self.grid) != 2 or min(self.grid) < 2:
            raise ConfigError("grid needs two sizes of at least 2")
        if len(self.bins) != 2 or min(self.bins) < 1:
            raise ConfigError("bins needs two positive sizes")
        if not self.timeout_s >= 0:
            raise ConfigError("timeout_s must be nonnegative")
        if self.max_iter is not None and self.max_iter < 0:
            raise ConfigError("max_iter must be nonnegative")
        if self.init_scheme not in INIT_SCHEMES:
            raise ConfigError(f"init_scheme must be one of {INIT_SCHEMES}")
        if self.orientation_probe < 0:
            raise ConfigError("orientation_probe must be nonnegative")
        if not self.lr > 0:
            raise ConfigError("lr must be positive")
        if not self.seeds:
            raise ConfigError("need at least one seed")
        return self

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        for k, v in d.items():
            if isinstance(v, tuple):
                d[k] = list(v)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        d = dict(d)
        for k in ("layer_sizes", "weights", "seeds", "grid", "bins"):
            if k in d:
                d[k] = tuple(d[k])
        if "problem" in d:
            d["problem"] = str(d["problem"]).upper()
        return cls(**d)

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: expected a JSON object")
        return cls.from_dict(data)


@dataclass
class SolveResult:
    problem: str
    seed: int
    final_nmae: Optional[float]
    final_loss: float
    termination: str
    wall_time_s: float
    n_iter: int
    n_evals: int
    image_nmae: Optional[float] = None
    params: object = field(default=None, repr=False)

    def summary(self) -> dict:
        d = dataclasses.asdict(self)
        d.pop("params")
        return d

    def line(self) -> str:
        metric = (f"nmae={self.final_nmae:.4e}" if self.final_nmae is not None
                  else f"image_nmae={self.image_nmae:.4e}" if self.image_nmae is not None
                  else f"loss={self.final_loss:.4e}")
        return (f"problem={self.problem} seed={self.seed} {metric} reason={self.termination} "
                f"wall_time={self.wall_time_s:.2f}s iters={self.n_iter}")


def pick_orientation(objective: MongeAmpereLoss, p0, iters: int, m_mem: int = 10):
    """Choose between ``u`` and ``-u`` as the starting network.

    Near initialisation the network is almost flat, the determinant term has
    no gradient, and which way the boundary term bends ``u`` is decided by
    noise. About half the seeds then settle into a concave basin that the
    trace penalty cannot leave. Both signs are equally likely under the
    initialiser, so ``iters`` L-BFGS steps are taken from each and the start
    with the lower loss is kept. Returns ``(params, seconds, evals)``.
    """
    t0 = time.perf_counter()
    best, evals = None, 0
    for cand in (p0, negate(p0)):
        try:
            _, rec, _ = run_lbfgs(objective.breakdown_and_grad, cand.flat,
                                  LbfgsOptions(m_mem=m_mem, timeout_s=math.inf, max_iter=iters))
        except DivergenceError:
            continue
        evals += rec.n_evals
        if best is None or rec.final.loss.total < best[0]:
            best = (rec.final.loss.total, cand)
    chosen = p0 if best is None else best[1]
    return chosen, time.perf_counter() - t0, evals


def train(cfg: RunConfig, seed: int):
    """Build the loss for ``cfg`` and optimise from seed ``seed``; returns ``(params, record, reason)``.

    For L-BFGS the orientation probe runs first and its time counts against
    ``timeout_s``; logged times include it.
    """
    spec = make_problem(cfg.problem)
    plan = SamplePlan.build(spec.source, cfg.n_interior, cfg.n_boundary, seed)
    p0 = init(cfg.layer_sizes, seed, scheme=cfg.init_scheme)
    objective = MongeAmpereLoss(spec, plan, p0, LossWeights(*cfg.weights))
    monitor = ev.nmae_monitor(spec, p0, cfg.grid) if (cfg.record_nmae and spec.has_exact) else None
    if cfg.optimizer == "lbfgs":
        spent, probe_evals = 0.0, 0
        if cfg.orientation_probe > 0 and cfg.timeout_s > 0 and cfg.max_iter != 0:
            p0, spent, probe_evals = pick_orientation(objective, p0, cfg.orientation_probe, cfg.m_mem)
        opts = LbfgsOptions(m_mem=cfg.m_mem, timeout_s=max(cfg.timeout_s - spent, 0.0), max_iter=cfg.max_iter)
        x, record, reason = run_lbfgs(objective.breakdown_and_grad, p0.flat, opts, monitor)
        for row in record.rows:
            row.time_s += spent
        record.n_evals += probe_evals
    else:
        opts = AdamOptions(lr=cfg.lr, timeout_s=cfg.timeout_s, max_iter=cfg.max_iter)
        x, record, reason = run_adam(objective.breakdown_and_grad, p0.flat, opts, monitor)
    return unflatten(p0, x), record, reason


def solve_one(cfg: RunConfig, seed: int, out_dir: Optional[Path] = None, trace: bool = True) -> SolveResult:
    """Train one seed and, if ``out_dir`` is given, write its artifacts there."""
    spec = make_problem(cfg.problem)
    params, record, reason = train(cfg, seed)
    final_nmae = ev.error_map(params, spec, cfg.grid).nmae if spec.has_exact else None
    res = SolveResult(spec.name, seed, final_nmae, record.final.loss.total, reason.value,
                      record.wall_time, record.final.iter, record.n_evals, params=params)
    if out_dir is None:
        return res
    out_dir.mkdir(parents=True, exist_ok=True)
    tag = f"seed{seed}"
    record.write_csv(out_dir / f"run_{tag}.csv")
    save_checkpoint(out_dir / f"model_{tag}.manet", params)
    (out_dir / f"model_{tag}.json").write_text(
        json.dumps({"problem": spec.name, "layer_sizes": list(params.layer_sizes)}) + "\n", encoding="utf-8")
    if spec.has_exact:
        emap = ev.error_map(params, spec, cfg.grid)
        ev.write_grid_csv(out_dir / f"error_map_{tag}.csv", emap.as_image())
        ev.write_pgm(out_dir / f"error_map_{tag}.pgm", emap.as_image())
    elif trace:
        traced = ev.trace_network(params, spec, cfg.n_rays, cfg.bins)
        target = ev.target_image(spec, cfg.bins)
        res.image_nmae = ev.image_nmae(traced, target)
        ev.write_image(out_dir / f"traced_{tag}", traced)
        ev.write_image(out_dir / f"target_{tag}", target)
    (out_dir / f"summary_{tag}.json").write_text(json.dumps(res.summary(), indent=2) + "\n",
                                                 encoding="utf-8")
    return res


# -- sweeps ----------------------------------------------------------------------


def sweep_config(cfg: RunConfig, axis: str, value) -> RunConfig:
    """``cfg`` with one hyperparameter replaced."""
    hidden = list(cfg.layer_sizes[1:-1]) or [32]
    if axis == "n_interior":
        return dataclasses.replace(cfg, n_interior=int(value))
    if axis == "n_boundary":
        return dataclasses.replace(cfg, n_boundary=int(value))
    if axis == "depth":
        if int(value) < 1:
            raise ConfigError("depth must be at least 1")
        return dataclasses.replace(cfg, layer_sizes=(2, *([hidden[0]] * int(value)), 1))
    if axis == "width":
        if int(value) < 1:
            raise ConfigError("width must be at least 1")
        return dataclasses.replace(cfg, layer_sizes=(2, *([int(value)] * len(hidden)), 1))
    if axis == "optimizer":
        return dataclasses.replace(cfg, optimizer=str(value))
    raise ConfigError(f"sweep axis must be one of {SWEEP_AXES}")


def parse_axis_values(axis: str, values: Sequence[str]) -> list:
    if axis == "optimizer":
        return [str(v) for v in values]
    try:
        return [int(v) for v in values]
    except ValueError as exc:
        raise ConfigError(f"axis {axis} takes integers") from exc


def _sweep_cell(args):
    cfg, axis, value, seed, out_dir = args
    return axis, value, solve_one(cfg, seed, out_dir, trace=False)


def ci95(values: Sequence[float]) -> tuple[float, float, float]:
    """Mean and mean -+ 1.96 standard errors (zero width for a single value)."""
    mean = statistics.fmean(values)
    if len(values) < 2:
        return mean, mean, mean
    half = 1.96 * statistics.stdev(values) / math.sqrt(len(values))
    return mean, mean - half, mean + half


def run_sweep(cfg: RunConfig, axis: str, values: Sequence, out_dir: Path, jobs: int = 1) -> list[dict]:
    if axis not in SWEEP_AXES:
        raise ConfigError(f"sweep axis must be one of {SWEEP_AXES}")
    cells = []
    for v in values:
        sub = sweep_config(cfg, axis, v).validate()
        for s in sub.seeds:
            cells.append((sub, axis, v, s, out_dir / f"{axis}_{v}"))
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as pool:
            results = list(pool.map(_sweep_cell, cells))
    else:
        results = [_sweep_cell(c) for c in cells]
    rows = [{"axis": axis, "axis_value": v, "seed": r.seed, "final_nmae": r.final_nmae,
             "final_loss": r.final_loss, "wall_time_s": r.wall_time_s, "n_iter": r.n_iter,
             "termination_reason": r.termination} for _, v, r in results]
    out_dir.mkdir(parents=True, exist_ok=True)
    with (out_dir / "sweep.csv").open("w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, SWEEP_HEADER)
        w.writeheader()
        w.writerows(_csv_ready(r) for r in rows)
    write_sweep_summary(rows, out_dir / "sweep_summary.csv")
    return rows


def _csv_ready(row: dict) -> dict:
    return {k: ("" if v is None else repr(float(v)) if isinstance(v, float) else v) for k, v in row.items()}


def summarize_sweep(rows: Sequence[dict]) -> list[dict]:
    """Per axis value: mean, 95% interval, median and mean wall time of the metric.

    The metric is the final NMAE where an exact solution exists, else the final loss.
    """
    out = []
    for v in dict.fromkeys(r["axis_value"] for r in rows):
        cell = [r for r in rows if r["axis_value"] == v]
        metric = "final_nmae" if cell[0]["final_nmae"] is not None else "final_loss"
        vals = [r[metric] for r in cell]
        mean, lo, hi = ci95(vals)
        out.append({"axis": cell[0]["axis"], "axis_value": v, "metric": metric, "n": len(vals),
                    "mean": mean, "ci_low": lo, "ci_high": hi, "median": statistics.median(vals),
                    "mean_wall_time_s": statistics.fmean(r["wall_time_s"] for r in cell)})
    return out


def write_sweep_summary(rows, path) -> list[dict]:
    summary = summarize_sweep(rows)
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, list(summary[0]))
        w.writeheader()
        w.writerows(_csv_ready(r) for r in summary)
    return summary


# -- report ----------------------------------------------------------------------

REPORT_HEADER = ["problem", "metric", "n_seeds", "median", "best", "mean", "ci_low", "ci_high",
                 "mean_wall_time_s"]


def build_report(paths: Sequence[Path]) -> list[dict]:
    """One row per problem over all ``summary_seed*.json`` files below ``paths``."""
    by_problem: dict[str, list[dict]] = {}
    for root in paths:
        for f in sorted(Path(root).rglob("summary_seed*.json")):
            s = json.loads(f.read_text(encoding="utf-8"))
            by_problem.setdefault(s["problem"], []).append(s)
    rows = []
    for name in sorted(by_problem):
        runs = by_problem[name]
        metric = "final_nmae" if runs[0].get("final_nmae") is not None else (
            "image_nmae" if runs[0].get("image_nmae") is not None else "final_loss")
        vals = [r[metric] for r in runs if r.get(metric) is not None]
        mean, lo, hi = ci95(vals)
        rows.append({"problem": name, "metric": metric, "n_seeds": len(vals),
                     "median": statistics.median(vals), "best": min(vals), "mean": mean,
                     "ci_low": lo, "ci_high": hi,
                     "mean_wall_time_s": statistics.fmean(r["wall_time_s"] for r in runs)})
    return rows


# -- argument handling -----------------------------------------------------------


def _int_list(s: str) -> tuple:
    return tuple(int(v) for v in s.replace(",", " ").split())


def _seed_list(s: str) -> tuple:
    """``0,3,5`` or an inclusive range ``0-9``."""
    if "-" in s.strip().lstrip("-"):
        lo, hi = (int(v) for v in s.split("-", 1))
        if hi < lo:
            raise argparse.ArgumentTypeError(f"empty seed range {s!r}")
        return tuple(range(lo, hi + 1))
    return _int_list(s)


def _float_list(s: str) -> tuple:
    return tuple(float(v) for v in s.replace(",", " ").split())


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file; flags override its values")
    p.add_argument("--problem")
    p.add_argument("--layer-sizes", dest="layer_sizes", type=_int_list, help="e.g. 2,32,32,32,1")
    p.add_argument("--n-interior", dest="n_interior", type=int)
    p.add_argument("--n-boundary", dest="n_boundary", type=int)
    p.add_argument("--weights", type=_float_list, help="alpha,beta,gamma")
    p.add_argument("--optimizer", choices=OPTIMIZERS)
    p.add_argument("--timeout", "--timeout-s", dest="timeout_s", type=float)
    p.add_argument("--max-iter", dest="max_iter", type=int)
    p.add_argument("--m-mem", dest="m_mem", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--init-scheme", dest="init_scheme", choices=INIT_SCHEMES)
    p.add_argument("--orientation-probe", dest="orientation_probe", type=int,
                   help="L-BFGS steps spent choosing between u and -u at init (0 disables)")
    p.add_argument("--seed", dest="seed", type=int, help="single seed")
    p.add_argument("--seeds", type=_seed_list, help="seed list (0,1,2) or range (0-9)")
    p.add_argument("--grid", type=_int_list, help="rows,cols")
    p.add_argument("--n-rays", dest="n_rays", type=int)
    p.add_argument("--bins", type=_int_list, help="rows,cols")
    p.add_argument("--full-scale", action="store_true", help="10^8 rays on 250x250 bins")
    p.add_argument("--out-dir", "--out", dest="out_dir")
    p.add_argument("--no-nmae", dest="record_nmae", action="store_false", default=None,
                   help="skip per-iteration NMAE recording")


def config_from_args(args, default_seeds=(0,)) -> RunConfig:
    base = RunConfig.load(args.config) if getattr(args, "config", None) else RunConfig(seeds=tuple(default_seeds))
    overrides = {}
    for f in dataclasses.fields(RunConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            overrides[f.name] = v
    if getattr(args, "seed", None) is not None:
        overrides["seeds"] = (args.seed,)
    if getattr(args, "full_scale", False):
        overrides["n_rays"], overrides["bins"] = ev.FULL_RAYS, ev.FULL_BINS
    if "problem" in overrides:
        overrides["problem"] = str(overrides["problem"]).upper()
    return dataclasses.replace(base, **overrides).validate()


def cmd_solve(args) -> int:
    cfg = config_from_args(args)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cfg.save(out / "config.json")
    for seed in cfg.seeds:
        res = solve_one(cfg, seed, out)
        print(res.line(), flush=True)
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = config_from_args(args, default_seeds=tuple(range(10)))
    values = parse_axis_values(args.axis, args.values)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cfg.save(out / "config.json")
    rows = run_sweep(cfg, args.axis, values, out, args.jobs)
    for s in summarize_sweep(rows):
        print(f"{s['axis']}={s['axis_value']} {s['metric']} mean={s['mean']:.4e} "
              f"ci95=[{s['ci_low']:.4e}, {s['ci_high']:.4e}] median={s['median']:.4e} "
              f"wall_time={s['mean_wall_time_s']:.2f}s", flush=True)
    return EXIT_OK


def cmd_raytrace(args) -> int:
    ckpt = Path(args.checkpoint)
    params = load_checkpoint(ckpt)
    spec = make_problem(args.problem)
    meta = ckpt.with_suffix(".json")
    if meta.exists():
        trained_on = json.loads(meta.read_text(encoding="utf-8")).get("problem")
        if trained_on and trained_on != spec.name:
            raise ConfigError(f"checkpoint was trained on problem {trained_on}, not {spec.name}")
    n_rays, bins = (ev.FULL_RAYS, ev.FULL_BINS) if args.full_scale else (args.n_rays, tuple(args.bins))
    if n_rays < 1:
        raise ConfigError("n_rays must be at least 1")
    if len(bins) != 2 or min(bins) < 1:
        raise ConfigError("bins needs two positive sizes")
    traced = ev.trace_network(params, spec, n_rays, bins)
    target = ev.target_image(spec, bins)
    value = ev.image_nmae(traced, target)
    inside = ev.image_nmae(traced, target, inside_only=True)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ev.write_image(out / "traced", traced)
    ev.write_image(out / "target", target)
    (out / "raytrace.json").write_text(json.dumps({
        "problem": spec.name, "n_rays": n_rays, "bins": list(bins), "image_nmae": value,
        "image_nmae_inside": inside, "overflow": traced.overflow}, indent=2) + "\n", encoding="utf-8")
    print(f"problem={spec.name} rays={n_rays} bins={bins[0]}x{bins[1]} image_nmae={value:.4e} "
          f"image_nmae_inside={inside:.4e} overflow={traced.overflow}", flush=True)
    return EXIT_OK


def cmd_report(args) -> int:
    rows = build_report([Path(p) for p in args.paths])
    if not rows:
        print("no run summaries found", file=sys.stderr)
        return EXIT_IO
    out = Path(args.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, REPORT_HEADER)
        w.writeheader()
        w.writerows(_csv_ready(r) for r in rows)
    print(f"{'problem':<8}{'metric':<12}{'seeds':>6}{'median':>12}{'best':>12}{'time (s)':>10}")
    for r in rows:
        print(f"{r['problem']:<8}{r['metric']:<12}{r['n_seeds']:>6}{r['median']:>12.3e}"
              f"{r['best']:>12.3e}{r['mean_wall_time_s']:>10.2f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mamlp", description="Neural Monge-Ampere reflector solver")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="train one or more seeds")
    _add_config_flags(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", help="vary one hyperparameter over seeds")
    _add_config_flags(p)
    p.add_argument("--axis", required=True, choices=SWEEP_AXES)
    p.add_argument("--values", required=True, nargs="+")
    p.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("raytrace", help="ray-trace a trained checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--problem", required=True)
    p.add_argument("--n-rays", dest="n_rays", type=int, default=ev.DESK_RAYS)
    p.add_argument("--bins", type=_int_list, default=ev.DESK_BINS)
    p.add_argument("--full-scale", action="store_true")
    p.add_argument("--out-dir", "--out", dest="out_dir", default="raytrace")
    p.set_defaults(func=cmd_raytrace)

    p = sub.add_parser("report", help="aggregate run summaries into one table")
    p.add_argument("paths", nargs="+")
    p.add_argument("--output", default="report.csv")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ConfigError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (DivergenceError, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except ValueError as exc:
        # malformed checkpoints and inconsistent inputs
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
