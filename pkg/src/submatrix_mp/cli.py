"""Command-line entry point.

    submatrix-mp MODE [--config FILE] [--n N --k K --mu MU --lambda L ...]

A config file holds ``key = value`` lines using the flag names (``#`` starts a
comment); flags given on the command line override it.  Exit codes: 0 success,
2 validation error, 3 more than 20% of trials failed.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from . import harness, limits
from .errors import NoDivergence, NoFeasibleDelta, OutsideG, SubcriticalLambda, ValidationError
from .harness import ExperimentConfig
from .state_evolution import d_star, se_trace, threshold_table

EXIT_OK, EXIT_INVALID, EXIT_BUDGET = 0, 2, 3
_BOOL_FLAGS = {"noiseless"}


def _float_list(text):
    return tuple(float(x) for x in text.split(",") if x.strip())


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="submatrix-mp", description=__doc__.splitlines()[0])
    p.add_argument("mode", choices=harness.MODES)
    p.add_argument("--config", help="key = value file supplying any flag")
    p.add_argument("--n", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--mu", type=float)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--lambdas", type=_float_list, help="comma-separated lambda sweep")
    p.add_argument("--n2", type=int)
    p.add_argument("--k2", type=int)
    p.add_argument("--d", type=int)
    p.add_argument("--M", type=float)
    p.add_argument("--eps", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--variant")
    p.add_argument("--max-horizon", type=int)
    p.add_argument("--t", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--resolution", type=int, default=81)
    p.add_argument("--out")
    p.add_argument("--noiseless", action="store_true", default=None)
    return p


def read_config_file(path) -> list:
    """Turn ``key = value`` lines into argv tokens."""
    argv = []
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"config line without '=': {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("_", "-")
        if key in _BOOL_FLAGS:
            if value.lower() in ("1", "true", "yes", "on"):
                argv.append(f"--{key}")
            continue
        argv += [f"--{key}", value]
    return argv


_FIELDS = {"n": "n", "k": "K", "mu": "mu", "lam": "lam", "lambdas": "lambdas", "n2": "n2",
           "k2": "K2", "d": "d", "M": "M", "eps": "eps", "delta": "delta",
           "variant": "variant", "max_horizon": "max_horizon", "t": "t", "trials": "trials",
           "seed": "seed", "workers": "workers", "out": "out", "noiseless": "noiseless"}


def parse(argv) -> tuple:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        # File first, command line second: later occurrences win.
        args = parser.parse_args([args.mode] + read_config_file(args.config)
                                  + [a for a in argv if a != args.mode])
    values = {field: getattr(args, attr) for attr, field in _FIELDS.items()
              if getattr(args, attr) is not None}
    return args, ExperimentConfig(mode=args.mode, **values).validate()


def _emit(obj, out=None):
    text = json.dumps(obj, sort_keys=True, indent=1)
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text + "\n")
    print(text)


def _cmd_se(cfg: ExperimentConfig):
    lam = cfg.lam if cfg.lam is not None else cfg.mu**2 * cfg.K**2 / cfg.n
    d = cfg.d if cfg.d is not None else d_star(lam)
    if cfg.M is not None:
        trace = se_trace(lam, d, M=cfg.M)
    else:
        trace = se_trace(lam, d, T=cfg.t)
    rows = list(enumerate(trace.values))
    w = csv.writer(sys.stdout)
    w.writerow(["t", "mu_hat"])
    for t, v in rows:
        w.writerow([t, repr(v)])
    return EXIT_OK


def _cmd_thresholds(cfg: ExperimentConfig):
    w = csv.writer(sys.stdout)
    w.writerow(["d", "a_star", "lambda_star"])
    for d, a, lam in threshold_table(cfg.d or 5):
        w.writerow([d, repr(a), repr(lam)])
    return EXIT_OK


def _cmd_limits(cfg: ExperimentConfig):
    mu = cfg.mu_for(cfg.lam)
    if cfg.n2 is not None:
        rep = limits.bicluster_margins(cfg.n, cfg.n2, cfg.K, cfg.K2, mu)
    else:
        rep = limits.symmetric_margins(cfg.n, cfg.K, mu)
    _emit(rep.as_dict(), cfg.out)
    return EXIT_OK


def _cmd_sweep(cfg: ExperimentConfig):
    records, summary = harness.run_sweep(cfg)
    _emit(summary)
    if harness.failure_fraction(records) > harness.FAILURE_BUDGET:
        return EXIT_BUDGET
    return EXIT_OK


def _cmd_bicluster(cfg: ExperimentConfig):
    records = harness.run_bicluster_trials(cfg)
    for r in records:
        print(json.dumps(r.record(), sort_keys=True))
    if cfg.out:
        out = Path(cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "records.jsonl", "w") as fh:
            fh.write(json.dumps(harness._header(cfg), sort_keys=True) + "\n")
            for r in records:
                fh.write(json.dumps(r.record(), sort_keys=True) + "\n")
        harness.write_manifest(out, cfg, ["records.jsonl"])
    if harness.failure_fraction(records) > harness.FAILURE_BUDGET:
        return EXIT_BUDGET
    return EXIT_OK


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args, cfg = parse(argv)
        mode = cfg.mode
        if mode in ("recover", "montecarlo"):
            if mode == "recover":
                cfg = ExperimentConfig(**{**cfg.as_dict(), "trials": 1,
                                          "lambdas": tuple(cfg.lambdas)})
            return _cmd_sweep(cfg)
        if mode == "se":
            return _cmd_se(cfg)
        if mode == "thresholds":
            return _cmd_thresholds(cfg)
        if mode == "limits":
            return _cmd_limits(cfg)
        if mode == "ks-check":
            _emit(harness.ks_check(cfg), cfg.out)
            return EXIT_OK
        if mode == "bicluster":
            return _cmd_bicluster(cfg)
        out = cfg.out or "."
        if mode == "phase-diagram":
            paths = harness.emit_plot_data("fig1", out, args.resolution)
        else:
            paths = (harness.emit_plot_data("regionG", out, args.resolution)
                     + harness.emit_plot_data("Gd-boundaries", out, max(args.resolution // 2, 2)))
        harness.write_manifest(Path(out), cfg, [p.name for p in paths])
        for p in paths:
            print(p)
        return EXIT_OK
    except (ValidationError, SubcriticalLambda, NoFeasibleDelta, OutsideG, NoDivergence) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
