"""Biclustering: alternating message passing with cleanup, and voting across both axes.

Parity convention: at even t the row-to-column messages are aggregated by the
columns, so column beliefs appear at odd t with gain lambda1 = K1^2 mu^2 / n1;
row beliefs appear at even t with gain lambda2.  This is the pairing under
which the alternating state evolution (lambda1 on even steps) describes the
beliefs, rows are read at even t* and columns at t* + 1.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidRegime, NoFeasibleDelta, ValidationError
from .model import BiclusterInstance, derive_seed, error_report
from .mp_core import run_mp_bicluster, threshold_beliefs
from .polynomials import NonlinearitySchedule, build_schedule_bicluster
from .recovery import FALLBACK_S_STAR, AlgorithmParams
from .spectral_cleanup import c0_bicluster, power_cleanup_bicluster, s_star_bicluster, top_k
from .state_evolution import d_star_bicluster, diverges_bicluster, in_region_G
from .voting import DELTA_GRID, PARTITION_STREAM, partition

log = logging.getLogger(__name__)


@dataclass
class BiclusterResult:
    rows: np.ndarray
    cols: np.ndarray
    row_candidates: np.ndarray
    col_candidates: np.ndarray
    schedule: NonlinearitySchedule
    s_star: float
    region: str
    errors: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)

    @property
    def t_star(self) -> int:
        return self.schedule.horizon - 1


def make_schedule_bicluster(lam1: float, lam2: float, params: AlgorithmParams,
                            d: int | None = None, t_star: int | None = None):
    if d is None:
        d = params.d if params.d is not None else d_star_bicluster(lam1, lam2)
    if t_star is None and params.horizon is not None:
        t_star = params.horizon
    if t_star is not None:
        if t_star % 2:
            raise ValidationError("t* must be even")
        return build_schedule_bicluster(lam1, lam2, d, horizon=t_star)
    schedule = build_schedule_bicluster(lam1, lam2, d, M=params.threshold_level())
    cap = params.max_horizon
    if cap is not None and schedule.horizon - 1 > cap:
        schedule = build_schedule_bicluster(lam1, lam2, d, horizon=cap - cap % 2)
    return schedule


def bicluster_s_star(n1, n2, K1, K2, mu, params: AlgorithmParams) -> float:
    if params.s_star is not None:
        return params.s_star
    try:
        return s_star_bicluster(params.eps, c0_bicluster(n1, n2, K1, K2, mu))
    except InvalidRegime:
        log.warning("bicluster s* undefined; using %.1f", FALLBACK_S_STAR)
        return FALLBACK_S_STAR


def run_alg3_matrix(W: np.ndarray, K1: int, K2: int, mu: float,
                    params: AlgorithmParams = AlgorithmParams(), d_star=None, t_star=None,
                    s_star=None, seed=None, lams=None) -> BiclusterResult:
    """Algorithm on a raw n1 x n2 matrix; ``lams`` overrides (lambda1, lambda2)."""
    n1, n2 = W.shape
    if not (1 <= K1 <= n1 and 1 <= K2 <= n2):
        raise ValidationError("need 1 <= Ki <= ni")
    lam1, lam2 = lams if lams is not None else (K1**2 * mu**2 / n1, K2**2 * mu**2 / n2)
    t0 = time.perf_counter()
    schedule = make_schedule_bicluster(lam1, lam2, params, d_star, t_star)
    tstar = schedule.horizon - 1
    row_b, col_b, _ = run_mp_bicluster(W, schedule)
    t1 = time.perf_counter()
    C1 = threshold_beliefs(row_b, schedule.mu_hat[tstar])
    C2 = threshold_beliefs(col_b, schedule.mu_hat[tstar + 1])
    s = s_star if s_star is not None else bicluster_s_star(n1, n2, K1, K2, mu, params)
    rows, cols = power_cleanup_bicluster(W, C1, C2, K1, K2, s, seed=seed,
                                         row_beliefs=row_b, col_beliefs=col_b)
    t2 = time.perf_counter()
    region = in_region_G(lam1, lam2)
    return BiclusterResult(rows, cols, C1, C2, schedule, s, region,
                           timings={"message_passing": t1 - t0, "cleanup": t2 - t1})


def run_alg3(instance: BiclusterInstance, d_star=None, t_star=None, s_star=None, seed=None,
             params: AlgorithmParams = AlgorithmParams(), lams=None) -> BiclusterResult:
    res = run_alg3_matrix(instance.W, instance.K1, instance.K2, instance.mu, params,
                          d_star, t_star, s_star, seed, lams)
    res.errors = {
        "rows": error_report(res.rows, instance.row_support, instance.K1).as_dict(),
        "cols": error_report(res.cols, instance.col_support, instance.K2).as_dict(),
        "rows_threshold": error_report(res.row_candidates, instance.row_support,
                                       instance.K1).as_dict(),
        "cols_threshold": error_report(res.col_candidates, instance.col_support,
                                       instance.K2).as_dict(),
    }
    return res


def choose_delta_bicluster(lam1: float, lam2: float, d: int | None = None) -> float:
    """Largest delta in the grid for which hiding a delta fraction of either axis
    keeps (lambda1, lambda2) inside G (or G_d when d is given)."""
    def ok(a, b):
        return diverges_bicluster(a, b, d) if d is not None else in_region_G(a, b) == "inside"

    for delta in DELTA_GRID:
        if ok(lam1 * (1 - delta), lam2) and ok(lam1, lam2 * (1 - delta)):
            return delta
    raise NoFeasibleDelta(f"({lam1:.4g}, {lam2:.4g}) leaves G for every delta in the grid")


@dataclass
class BiclusterVotingResult:
    rows: np.ndarray
    cols: np.ndarray
    row_votes: np.ndarray
    col_votes: np.ndarray
    errors: dict = field(default_factory=dict)


def _vote_axis(W, K_target, K_other, mu, delta, params, seed, hint, lam_pair):
    """Classify the rows of W by votes from column estimates made without each block."""
    n_rows, n_cols = W.shape
    part = partition(n_rows, delta, derive_seed(seed or 0, PARTITION_STREAM))
    K_sub = math.ceil(K_target * (1 - part.delta))
    r = np.zeros(n_rows)
    for k, S in enumerate(part.blocks):
        keep = part.complement(k)
        if hint is not None:
            C_other = np.asarray(hint, dtype=int)
        else:
            l_rows, l_cols = lam_pair
            lams = (l_rows * (K_sub / K_target) ** 2 * n_rows / keep.size, l_cols)
            res = run_alg3_matrix(W[keep], K_sub, K_other, mu, params,
                                  seed=derive_seed(seed or 0, k), lams=lams)
            C_other = res.cols
        r[S] = W[np.ix_(S, C_other)].sum(axis=1) if C_other.size else 0.0
    return top_k(r, np.arange(n_rows), K_target), r


def run_bicluster_voting(instance: BiclusterInstance, delta: float | None = None,
                         params: AlgorithmParams = AlgorithmParams(), seed=None,
                         col_hint=None, row_hint=None) -> BiclusterVotingResult:
    """Exact recovery of both supports by withholding row blocks (for rows) and
    column blocks (for columns).  ``col_hint`` / ``row_hint`` inject a fixed
    estimate of the other axis instead of running the message-passing stage."""
    lam1, lam2 = instance.lam1, instance.lam2
    if delta is None:
        delta = choose_delta_bicluster(lam1, lam2)
    mu = instance.mu
    rows, r = _vote_axis(instance.W, instance.K1, instance.K2, mu, delta, params, seed,
                         col_hint, (lam1, lam2))
    # Columns: transpose so the same routine applies; the alternating roles swap.
    cols, c = _vote_axis(instance.W.T, instance.K2, instance.K1, mu, delta, params,
                         derive_seed(seed or 0, 10_000), row_hint, (lam2, lam1))
    errors = {
        "rows": error_report(rows, instance.row_support, instance.K1).as_dict(),
        "cols": error_report(cols, instance.col_support, instance.K2).as_dict(),
    }
    return BiclusterVotingResult(rows, cols, r, c, errors)
