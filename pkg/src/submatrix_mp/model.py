"""Planted submatrix instances, scaling and support error measurement.

Symmetric model:  W = mu * 1_C 1_C^T + Z, Z symmetric with i.i.d. N(0,1) on and
above the diagonal.  Bicluster model: W = mu * 1_C1 1_C2^T + Z, Z i.i.d. N(0,1).

Random draws come from ``numpy.random.default_rng(seed)`` in a fixed order:
the support permutation(s) first, then the noise.  The support is the first K
entries of ``rng.permutation(n)`` (a Fisher-Yates shuffle), sorted.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ValidationError

MASK64 = (1 << 64) - 1
# SplitMix64 increment (golden-ratio constant) and finalizer multipliers.
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def derive_seed(master: int, index: int) -> int:
    """Per-trial 64-bit seed: SplitMix64 finalizer of master + (index+1)*GOLDEN_GAMMA."""
    z = (int(master) + (int(index) + 1) * GOLDEN_GAMMA) & MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & MASK64
    return z ^ (z >> 31)


@dataclass(frozen=True)
class PlantedInstance:
    n: int
    K: int
    mu: float
    support: np.ndarray
    W: np.ndarray
    seed: int | None = None
    noiseless: bool = False

    @property
    def lam(self) -> float:
        return self.mu**2 * self.K**2 / self.n

    @property
    def A(self) -> np.ndarray:
        return scale(self.W, self.n)

    def indicator(self) -> np.ndarray:
        v = np.zeros(self.n, dtype=bool)
        v[self.support] = True
        return v


@dataclass(frozen=True)
class BiclusterInstance:
    n1: int
    n2: int
    K1: int
    K2: int
    mu: float
    row_support: np.ndarray
    col_support: np.ndarray
    W: np.ndarray
    seed: int | None = None
    noiseless: bool = False

    @property
    def lam1(self) -> float:
        return self.K1**2 * self.mu**2 / self.n1

    @property
    def lam2(self) -> float:
        return self.K2**2 * self.mu**2 / self.n2


@dataclass(frozen=True)
class ErrorReport:
    hamming: int
    fraction: float
    exact: bool

    def as_dict(self) -> dict:
        return {"hamming": self.hamming, "fraction": self.fraction, "exact": self.exact}


def _check_sizes(n, K, name="K"):
    if int(n) != n or int(K) != K:
        raise ValidationError(f"n and {name} must be integers")
    if K <= 0 or K > n:
        raise ValidationError(f"need 1 <= {name} <= n, got {name}={K}, n={n}")


def _support(rng, n, K):
    return np.sort(rng.permutation(n)[:K])


def gen_symmetric(n: int, K: int, mu: float, seed: int | None = None,
                  noiseless: bool = False) -> PlantedInstance:
    _check_sizes(n, K)
    if mu < 0:
        raise ValidationError("mu must be nonnegative")
    rng = np.random.default_rng(seed)
    support = _support(rng, n, K)
    W = np.zeros((n, n))
    if not noiseless:
        Z = np.triu(rng.standard_normal((n, n)))
        W = Z + np.triu(Z, 1).T
    W[np.ix_(support, support)] += mu
    W.setflags(write=False)
    return PlantedInstance(n, K, float(mu), support, W, seed, noiseless)


def gen_bicluster(n1: int, n2: int, K1: int, K2: int, mu: float,
                  seed: int | None = None, noiseless: bool = False) -> BiclusterInstance:
    _check_sizes(n1, K1, "K1")
    _check_sizes(n2, K2, "K2")
    if mu < 0:
        raise ValidationError("mu must be nonnegative")
    rng = np.random.default_rng(seed)
    rows = _support(rng, n1, K1)
    cols = _support(rng, n2, K2)
    W = np.zeros((n1, n2)) if noiseless else rng.standard_normal((n1, n2))
    W[np.ix_(rows, cols)] += mu
    W.setflags(write=False)
    return BiclusterInstance(n1, n2, K1, K2, float(mu), rows, cols, W, seed, noiseless)


def scale(W: np.ndarray, n: float) -> np.ndarray:
    """A = W / sqrt(n)."""
    return np.asarray(W, dtype=float) / np.sqrt(n)


def error_report(estimate, truth, K: int) -> ErrorReport:
    est = {int(i) for i in estimate}
    tru = {int(i) for i in truth}
    h = len(est ^ tru)
    return ErrorReport(h, h / K, h == 0)


def save_instance(inst, path) -> None:
    """Dump an instance.  ``.npz`` is binary; any other suffix writes CSV plus a JSON sidecar.

    The CSV holds the matrix row-major; the sidecar ``<path>.json`` holds the
    parameters and supports as index lists.
    """
    path = Path(path)
    meta = _meta(inst)
    if path.suffix == ".npz":
        np.savez(path, W=inst.W, meta=json.dumps(meta))
        return
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for row in inst.W:
            writer.writerow([repr(float(x)) for x in row])
    Path(str(path) + ".json").write_text(json.dumps(meta, indent=2))


def load_instance(path):
    path = Path(path)
    if path.suffix == ".npz":
        with np.load(path) as data:
            W = data["W"]
            meta = json.loads(str(data["meta"]))
    else:
        W = np.loadtxt(path, delimiter=",", ndmin=2)
        meta = json.loads(Path(str(path) + ".json").read_text())
    W.setflags(write=False)
    if meta["kind"] == "symmetric":
        return PlantedInstance(meta["n"], meta["K"], meta["mu"],
                               np.array(meta["support"], dtype=int), W,
                               meta["seed"], meta["noiseless"])
    return BiclusterInstance(meta["n1"], meta["n2"], meta["K1"], meta["K2"], meta["mu"],
                             np.array(meta["row_support"], dtype=int),
                             np.array(meta["col_support"], dtype=int), W,
                             meta["seed"], meta["noiseless"])


def _meta(inst) -> dict:
    common = {"mu": inst.mu, "seed": inst.seed, "noiseless": inst.noiseless}
    if isinstance(inst, PlantedInstance):
        return {"kind": "symmetric", "n": inst.n, "K": inst.K,
                "support": [int(i) for i in inst.support], **common}
    return {"kind": "bicluster", "n1": inst.n1, "n2": inst.n2, "K1": inst.K1, "K2": inst.K2,
            "row_support": [int(i) for i in inst.row_support],
            "col_support": [int(i) for i in inst.col_support], **common}
