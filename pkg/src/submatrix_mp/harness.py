"""Experiment configuration, seeded sweeps, KS checks and plot-data emission.

Output layout of a run directory:

    manifest.json   resolved config, code version, file list
    records.jsonl   one header line (config + version) then one line per trial
    summary.json    aggregate mean / standard error per lambda
    timings.jsonl   wall times per trial and stage

Everything except timings.jsonl is a function of the config alone, so two runs
of the same config produce byte-identical files.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path

import numpy as np
from scipy import stats

from . import limits
from .bicluster import run_alg3
from .errors import SubcriticalLambda, SubmatrixError, ValidationError
from .model import derive_seed, gen_bicluster, gen_symmetric
from .mp_core import run_mp
from .polynomials import VARIANTS, build_schedule
from .recovery import AlgorithmParams, recover
from .state_evolution import boundary_point, d_star, gd_boundary_lambda2
from .voting import run_alg2

MODES = ("recover", "montecarlo", "se", "thresholds", "phase-diagram", "bicluster", "limits",
         "ks-check", "boundary")
FAILURE_BUDGET = 0.2
# The trial seed generates the instance; algorithm randomness uses this derived stream.
ALGORITHM_STREAM = 1


def code_version() -> str:
    try:
        return version("submatrix-mp")
    except PackageNotFoundError:
        return "0+unknown"


@dataclass(frozen=True)
class ExperimentConfig:
    mode: str = "montecarlo"
    n: int = 2000
    K: int = 100
    mu: float | None = None
    lam: float | None = None
    lambdas: tuple = ()
    n2: int | None = None
    K2: int | None = None
    d: int | None = None
    M: float | None = None
    eps: float = 1e-4
    delta: float | None = None
    variant: str = "optimal"
    max_horizon: int | None = None
    t: int = 3
    trials: int = 10
    seed: int = 0
    workers: int = 1
    noiseless: bool = False
    out: str | None = None

    def validate(self) -> "ExperimentConfig":
        if self.mode not in MODES:
            raise ValidationError(f"unknown mode {self.mode!r}")
        if self.variant not in VARIANTS:
            raise ValidationError(f"unknown variant {self.variant!r}")
        if self.n < 1 or not 1 <= self.K <= self.n:
            raise ValidationError(f"need 1 <= K <= n, got n={self.n}, K={self.K}")
        if self.n2 is not None and (self.K2 is None or not 1 <= self.K2 <= self.n2):
            raise ValidationError("bicluster runs need 1 <= k2 <= n2")
        if self.mu is not None and self.mu < 0:
            raise ValidationError("mu must be nonnegative")
        for lam in self.lambda_values():
            if lam is not None and lam <= 0:
                raise ValidationError("lambda must be positive")
        if self.trials < 1 or self.workers < 1 or self.t < 1:
            raise ValidationError("trials, workers and t must be >= 1")
        if self.d is not None and self.d < 1:
            raise ValidationError("d must be >= 1")
        if self.delta is not None and not 0 < self.delta < 1:
            raise ValidationError("delta must lie in (0, 1)")
        if not 0 < self.eps < 1e-3:
            raise ValidationError("eps must lie in (0, 1e-3)")
        return self

    def lambda_values(self) -> tuple:
        if self.lambdas:
            return tuple(float(x) for x in self.lambdas)
        return (self.lam,)

    def mu_for(self, lam: float | None) -> float:
        if lam is None:
            if self.mu is None:
                raise ValidationError("give mu or lambda")
            return self.mu
        return math.sqrt(lam * self.n) / self.K

    def params(self) -> AlgorithmParams:
        return AlgorithmParams(d=self.d, M=self.M, eps=self.eps, variant=self.variant,
                               max_horizon=self.max_horizon)

    def as_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["lambdas"] = list(self.lambdas)
        return d


@dataclass
class TrialRecord:
    trial: int
    seed: int
    params: dict
    errors: dict = field(default_factory=dict)
    margins: dict = field(default_factory=dict)
    t_star: int | None = None
    failed: str | None = None
    timings: dict = field(default_factory=dict)

    def record(self) -> dict:
        """Deterministic part of the record (no wall times)."""
        d = dataclasses.asdict(self)
        d.pop("timings")
        return d


def run_trial(config: ExperimentConfig, lam: float | None, trial: int) -> TrialRecord:
    seed = derive_seed(config.seed, trial)
    mu = config.mu_for(lam)
    echo = {"n": config.n, "K": config.K, "mu": mu, "lambda": lam}
    rec = TrialRecord(trial, seed, echo)
    try:
        rec.margins = limits.symmetric_margins(config.n, config.K, mu).margins \
            if 2 <= config.K < config.n else {}
        inst = gen_symmetric(config.n, config.K, mu, seed=seed, noiseless=config.noiseless)
        alg_seed = derive_seed(seed, ALGORITHM_STREAM)
        res = recover(inst, config.params(), seed=alg_seed, lam=lam)
        rec.errors = {"threshold": res.errors["threshold"], "cleanup": res.errors["cleanup"]}
        rec.t_star = res.t_star
        rec.timings = dict(res.timings)
        if config.delta is not None:
            vres = run_alg2(inst, config.delta, config.params(), seed=alg_seed, lam=lam)
            rec.errors["vote"] = vres.errors["vote"]
            rec.errors["vote_margin"] = vres.vote_margin
            rec.errors["block_fractions"] = vres.block_errors
            rec.timings["vote"] = vres.timings["total"]
    except SubmatrixError as exc:
        rec.failed = f"{type(exc).__name__}: {exc}"
    return rec


def _run_trial_args(args):
    return run_trial(*args)


def aggregate(records: list) -> list:
    """Mean and standard error of each final-stage error fraction, per lambda."""
    groups = {}
    for r in records:
        groups.setdefault(r.params["lambda"], []).append(r)
    out = []
    for lam, recs in groups.items():
        ok = [r for r in recs if r.failed is None]
        row = {"lambda": lam, "trials": len(recs), "failed": len(recs) - len(ok)}
        for stage in ("threshold", "cleanup", "vote"):
            vals = np.array([r.errors[stage]["fraction"] for r in ok if stage in r.errors])
            if vals.size:
                se = float(vals.std(ddof=1) / math.sqrt(vals.size)) if vals.size > 1 else 0.0
                row[stage] = {"mean": round(float(vals.mean()), 12), "se": round(se, 12),
                              "exact": int(sum(r.errors[stage]["exact"] for r in ok
                                               if stage in r.errors))}
        out.append(row)
    return out


def run_sweep(config: ExperimentConfig, write: bool = True):
    """Run every (lambda, trial) pair; returns (records, summary)."""
    config.validate()
    jobs = [(config, lam, i) for lam in config.lambda_values() for i in range(config.trials)]
    if config.workers > 1:
        with ProcessPoolExecutor(config.workers) as pool:
            records = list(pool.map(_run_trial_args, jobs))
    else:
        records = [run_trial(*job) for job in jobs]
    summary = aggregate(records)
    if write and config.out:
        write_run(config, records, summary)
    return records, summary


def failure_fraction(records) -> float:
    return sum(r.failed is not None for r in records) / max(len(records), 1)


def _header(config):
    return {"config": config.as_dict(), "version": code_version()}


def write_run(config: ExperimentConfig, records, summary) -> Path:
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "records.jsonl", "w") as fh:
        fh.write(json.dumps(_header(config), sort_keys=True) + "\n")
        for r in records:
            fh.write(json.dumps(r.record(), sort_keys=True) + "\n")
    with open(out / "timings.jsonl", "w") as fh:
        for r in records:
            fh.write(json.dumps({"trial": r.trial, "lambda": r.params["lambda"],
                                 "timings": r.timings}, sort_keys=True) + "\n")
    (out / "summary.json").write_text(
        json.dumps({**_header(config), "summary": summary}, sort_keys=True, indent=1) + "\n")
    write_manifest(out, config, ["records.jsonl", "summary.json", "timings.jsonl"])
    return out


def write_manifest(out: Path, config, files) -> None:
    (out / "manifest.json").write_text(
        json.dumps({**_header(config), "files": sorted(files)}, sort_keys=True, indent=1) + "\n")


# ---------------------------------------------------------------- KS validation


def ks_check(config: ExperimentConfig) -> dict:
    """KS distances of on/off-support beliefs to N(mu_hat_t, 1) and N(0, 1) for t = 1..config.t."""
    config.validate()
    lam = config.lam if config.lam is not None else config.mu**2 * config.K**2 / config.n
    d = config.d if config.d is not None else d_star(lam)
    from .state_evolution import lambda_star

    if lam <= lambda_star(d):
        raise SubcriticalLambda(f"lambda={lam} is not above lambda*_{d}")
    schedule = build_schedule(lam, d, variant=config.variant, horizon=config.t)
    mu = config.mu_for(lam)
    on = np.zeros((config.trials, config.t))
    off = np.zeros((config.trials, config.t))
    for i in range(config.trials):
        inst = gen_symmetric(config.n, config.K, mu, seed=derive_seed(config.seed, i))
        _, states = run_mp(inst.A, schedule, history=True)
        mask = inst.indicator()
        for st in states[1:]:
            b = st.beliefs
            on[i, st.t - 1] = stats.kstest(b[mask] - schedule.mu_hat[st.t], "norm").statistic
            off[i, st.t - 1] = stats.kstest(b[~mask], "norm").statistic
    return {
        "lambda": lam, "d": d, "n": config.n, "K": config.K, "trials": config.trials,
        "t": list(range(1, config.t + 1)),
        "mu_hat": list(schedule.mu_hat[1:]),
        "ks_on": on.mean(axis=0).tolist(), "ks_off": off.mean(axis=0).tolist(),
        "ks_on_per_seed": on.tolist(), "ks_off_per_seed": off.tolist(),
    }


# ---------------------------------------------------------------- plot data


def _write_csv(path: Path, header, rows, config=None):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write("# " + json.dumps({"config": config, "version": code_version()},
                                   sort_keys=True) + "\n")
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x
                        for x in row])
    return path


def fig1_grid(mu0_max=40.0, rho_max=0.12, resolution=81):
    mu0 = np.linspace(mu0_max / resolution, mu0_max, resolution)
    rho = np.linspace(rho_max / resolution, rho_max, resolution)
    # Put the crossing point of the two curves on the grid.
    mu0 = np.unique(np.append(mu0, limits.CROSSING[0]))
    rho = np.unique(np.append(rho, limits.CROSSING[1]))
    return mu0, rho


def region_g_polyline(y_min=0.05, y_max=10.0, points=200):
    ys = np.unique(np.append(np.geomspace(y_min, y_max, points), 1.0))
    return [(y, *boundary_point(float(y))) for y in ys]


def gd_polylines(d_max=4, lam1_min=0.1, lam1_max=5.0, points=60):
    lam1 = np.geomspace(lam1_min, lam1_max, points)
    return [(d, float(l1), gd_boundary_lambda2(d, float(l1)))
            for d in range(1, d_max + 1) for l1 in lam1]


def emit_plot_data(kind: str, out, resolution: int = 81, records=None, **grid) -> list:
    """Deterministic CSV data for the phase diagram, region G, the G_d boundaries,
    or error curves from sweep records.  Returns the written paths."""
    if resolution < 2:
        raise ValidationError("resolution must be >= 2")
    out = Path(out)
    cfg = {"kind": kind, "resolution": resolution, **grid}
    if kind == "fig1":
        mu0, rho = fig1_grid(resolution=resolution, **grid)
        rows = [(m, r, limits.phase_region(m, r)) for m in mu0 for r in rho]
        curves = [(m, float(limits.mp_boundary_rho(m)), float(limits.exact_boundary_rho(m)))
                  for m in mu0]
        return [_write_csv(out / "fig1_regions.csv", ["mu0", "rho", "region"], rows, cfg),
                _write_csv(out / "fig1_curves.csv", ["mu0", "rho_mp", "rho_exact"], curves, cfg)]
    if kind == "regionG":
        rows = region_g_polyline(points=resolution, **grid)
        return [_write_csv(out / "region_G.csv", ["y", "lambda1", "lambda2"], rows, cfg)]
    if kind == "Gd-boundaries":
        rows = gd_polylines(points=resolution, **grid)
        return [_write_csv(out / "Gd_boundaries.csv", ["d", "lambda1", "lambda2"], rows, cfg)]
    if kind == "error-curves":
        if records is None:
            raise ValidationError("error-curves needs sweep records")
        rows = []
        for row in aggregate(records):
            for stage in ("threshold", "cleanup", "vote"):
                if stage in row:
                    rows.append((row["lambda"], stage, row[stage]["mean"], row[stage]["se"]))
        return [_write_csv(out / "error_curves.csv", ["lambda", "stage", "mean", "se"], rows,
                           cfg)]
    raise ValidationError(f"unknown plot kind {kind!r}")


# ---------------------------------------------------------------- bicluster trials


def run_bicluster_trials(config: ExperimentConfig) -> list:
    config.validate()
    n1, K1 = config.n, config.K
    n2 = config.n2 if config.n2 is not None else n1
    K2 = config.K2 if config.K2 is not None else K1
    if config.mu is not None:
        mu = config.mu
    elif config.lam is not None:
        mu = math.sqrt(config.lam * n1) / K1
    else:
        raise ValidationError("give mu or lambda")
    records = []
    for i in range(config.trials):
        seed = derive_seed(config.seed, i)
        rec = TrialRecord(i, seed, {"n1": n1, "n2": n2, "K1": K1, "K2": K2, "mu": mu})
        try:
            inst = gen_bicluster(n1, n2, K1, K2, mu, seed=seed, noiseless=config.noiseless)
            res = run_alg3(inst, seed=derive_seed(seed, ALGORITHM_STREAM), params=config.params())
            rec.errors = res.errors
            rec.margins = limits.bicluster_margins(n1, n2, K1, K2, mu).margins \
                if K1 < n1 and K2 < n2 else {}
            rec.params.update(lambda1=inst.lam1, lambda2=inst.lam2, region=res.region)
            rec.t_star = res.t_star
            rec.timings = res.timings
        except SubmatrixError as exc:
            rec.failed = f"{type(exc).__name__}: {exc}"
        records.append(rec)
    return records
