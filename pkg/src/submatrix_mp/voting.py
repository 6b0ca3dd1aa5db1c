"""Exact recovery by successive withholding and voting.

[n] is split into 1/delta blocks.  For each block S_k, the weak-recovery
pipeline runs on the complement only, producing C_hat_k, and every i in S_k
then receives the vote r_i = sum_{j in C_hat_k} A_ij.  Votes never read
A restricted to S_k x S_k, so they are independent of the estimate that casts
them.  The final estimate is the global top-K of the votes.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import NoFeasibleDelta, ValidationError
from .limits import exact_margin
from .model import PlantedInstance, derive_seed, error_report
from .recovery import AlgorithmParams, run_alg1
from .spectral_cleanup import top_k

log = logging.getLogger(__name__)

DELTA_GRID = tuple(1.0 / m for m in range(2, 41))
# Derived-seed index of the partition stream; block runs use indices 0..1/delta-1.
# A caller's seed is often also the instance seed, and reusing it verbatim
# would replay the permutation that placed the support.
PARTITION_STREAM = 1 << 32


@dataclass(frozen=True)
class Partition:
    delta: float
    blocks: tuple

    @property
    def size(self) -> int:
        return sum(len(b) for b in self.blocks)

    def complement(self, k: int) -> np.ndarray:
        return np.sort(np.concatenate([b for j, b in enumerate(self.blocks) if j != k]))


@dataclass(frozen=True)
class VoteVector:
    index: np.ndarray
    r: np.ndarray

    def as_dict(self) -> dict:
        return {int(i): float(v) for i, v in zip(self.index, self.r)}


def _num_blocks(delta: float) -> int:
    if not 0.0 < delta < 1.0:
        raise ValidationError(f"delta must lie in (0, 1), got {delta}")
    m = round(1.0 / delta)
    if abs(m * delta - 1.0) > 1e-9:
        raise ValidationError(f"1/delta must be an integer, got delta={delta}")
    return m


def partition(n: int, delta: float, seed=None) -> Partition:
    """Seeded shuffle of [n] cut into 1/delta contiguous chunks.

    When n delta is not an integer the first n mod (1/delta) blocks get one
    extra index, so sizes differ by at most one.
    """
    m = _num_blocks(delta)
    if n < m:
        raise ValidationError(f"cannot split n={n} into {m} nonempty blocks")
    perm = np.random.default_rng(seed).permutation(n)
    base, extra = divmod(n, m)
    blocks, start = [], 0
    for k in range(m):
        size = base + (1 if k < extra else 0)
        blocks.append(np.sort(perm[start:start + size]))
        start += size
    return Partition(1.0 / m, tuple(blocks))


def votes(A: np.ndarray, C_hat, S) -> VoteVector:
    """r_i = sum_{j in C_hat} A_ij for i in S; C_hat must avoid S."""
    C = np.asarray(C_hat, dtype=int)
    S = np.asarray(S, dtype=int)
    if np.intersect1d(C, S).size:
        raise ValidationError("estimate overlaps the withheld block")
    if C.size == 0:
        return VoteVector(S, np.zeros(S.size))
    return VoteVector(S, A[np.ix_(S, C)].sum(axis=1))


def select_top_k(r: np.ndarray, K: int) -> np.ndarray:
    """Indices of the K largest votes, ties to the smaller index."""
    r = np.asarray(r, dtype=float)
    return top_k(r, np.arange(r.size), K)


def delta_margins(n: int, K: int, mu: float, lam: float, delta: float) -> tuple:
    """(lambda e (1-delta), vote margin) for a candidate delta."""
    mp = lam * math.e * (1 - delta)
    denom = (math.sqrt(2 * K * math.log(K)) + math.sqrt(2 * K * math.log(n - K))
             + delta * math.sqrt(K))
    return mp, K * mu * (1 - 2 * delta) / denom


def choose_delta(n: int, K: int, mu: float, lam: float | None = None,
                 mode: str = "exact") -> float:
    """Largest delta in {1/2, ..., 1/40} meeting the withholding condition.

    ``mode="weak"`` enforces only lambda e (1 - delta) > 1.
    """
    if mode not in ("exact", "weak"):
        raise ValidationError(f"unknown mode {mode!r}")
    if not 2 <= K < n:
        raise ValidationError("need 2 <= K < n")
    lam = mu**2 * K**2 / n if lam is None else lam
    for delta in DELTA_GRID:
        mp, vote = delta_margins(n, K, mu, lam, delta)
        log.debug("delta=%.4f mp margin %.4f vote margin %.4f", delta, mp, vote)
        if mp > 1 and (mode == "weak" or vote > 1):
            return delta
    raise NoFeasibleDelta(
        f"no delta in the grid works: lambda e = {lam * math.e:.4g}, "
        f"exact margin = {exact_margin(n, K, mu):.4g}")


@dataclass
class VotingResult:
    estimate: np.ndarray
    votes: np.ndarray
    partition: Partition
    block_estimates: list
    block_errors: list = field(default_factory=list)
    errors: dict = field(default_factory=dict)
    vote_margin: float | None = None
    timings: dict = field(default_factory=dict)


def run_alg2(instance: PlantedInstance, delta: float | None = None,
             params: AlgorithmParams = AlgorithmParams(), seed=None,
             lam: float | None = None) -> VotingResult:
    """Message passing plus voting on a symmetric instance."""
    n, K, mu = instance.n, instance.K, instance.mu
    lam = instance.lam if lam is None else lam
    if delta is None:
        delta = choose_delta(n, K, mu, lam)
    t0 = time.perf_counter()
    part = partition(n, delta, derive_seed(seed or 0, PARTITION_STREAM))
    A = instance.A
    K_sub = math.ceil(K * (1 - part.delta))
    r = np.zeros(n)
    estimates, block_errors = [], []
    truth = set(int(i) for i in instance.support)
    for k, S in enumerate(part.blocks):
        keep = part.complement(k)
        n_sub = keep.size
        # Rescale so the complement is a standard instance of size n_sub.
        A_sub = A[np.ix_(keep, keep)] * math.sqrt(n / n_sub)
        sub_truth = np.array([j for j, i in enumerate(keep) if int(i) in truth], dtype=int)
        res = run_alg1(A_sub, K_sub, mu, params, seed=derive_seed(seed or 0, k),
                       truth=sub_truth, lam=lam * (K_sub / K) ** 2 * n / n_sub)
        C_hat = keep[res.estimate]
        estimates.append(C_hat)
        block_errors.append(res.errors["cleanup"]["fraction"])
        v = votes(A, C_hat, S)
        r[v.index] = v.r
    estimate = select_top_k(r, K)
    mask = instance.indicator()
    margin = float(r[mask].min() - r[~mask].max()) if 0 < K < n else None
    return VotingResult(estimate, r, part, estimates, block_errors,
                        {"vote": error_report(estimate, instance.support, K).as_dict()},
                        margin, {"total": time.perf_counter() - t0})
