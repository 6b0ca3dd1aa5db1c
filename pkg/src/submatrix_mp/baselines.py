"""Reference estimators: line-sum thresholding, brute-force MLE, and Gaussian test errors."""

from __future__ import annotations

import itertools
import math

import numpy as np
from scipy.special import erfc

from .errors import TooLarge, ValidationError
from .spectral_cleanup import top_k

MLE_LIMIT = 10**6
MLE_BICLUSTER_LIMIT = 10**5
RULES = ("midpoint", "prior")


def q_function(x):
    """Standard normal upper tail Q(x) = P(Z > x)."""
    out = 0.5 * erfc(np.asarray(x, dtype=float) / math.sqrt(2.0))
    return float(out) if np.ndim(out) == 0 else out


def phi_cdf(x):
    out = 0.5 * erfc(-np.asarray(x, dtype=float) / math.sqrt(2.0))
    return float(out) if np.ndim(out) == 0 else out


def optimal_gamma(pi1: float, s: float) -> float:
    """Likelihood-ratio threshold for N(s,1) (prior pi1) against N(0,1)."""
    return s / 2 + math.log((1 - pi1) / pi1) / s


def p_e(pi1: float, s2: float) -> float:
    """min_gamma  pi1 Q(s - gamma) + (1 - pi1) Q(gamma), with s = sqrt(s2)."""
    if not 0.0 < pi1 < 1.0:
        raise ValidationError("pi1 must lie in (0, 1)")
    if s2 < 0:
        raise ValidationError("s2 must be nonnegative")
    if s2 == 0:
        return min(pi1, 1 - pi1)
    s = math.sqrt(s2)
    g = optimal_gamma(pi1, s)
    return pi1 * q_function(s - g) + (1 - pi1) * q_function(g)


def _threshold(total_mean, var, prior, rule):
    """Cut for sums distributed N(total_mean, var) on the support and N(0, var) off it."""
    if rule == "midpoint":
        return total_mean / 2
    if rule == "prior":
        sd = math.sqrt(var)
        return sd * optimal_gamma(prior, total_mean / sd)
    raise ValidationError(f"unknown rule {rule!r}; choose from {RULES}")


def rowsum_threshold(W: np.ndarray, n: int, K: int, mu: float, rule: str = "midpoint") -> np.ndarray:
    """{i : sum_j W_ij >= K mu / 2}, diagonal included.

    ``rule="prior"`` moves the cut to the Bayes test with prior K/n.
    """
    if mu <= 0:
        raise ValidationError("mu must be positive")
    R = np.asarray(W).sum(axis=1)
    return np.flatnonzero(R >= _threshold(K * mu, n, K / n, rule))


def colsum_threshold_bicluster(W: np.ndarray, K1: int, K2: int, mu: float, axis: int = 0,
                               rule: str = "midpoint") -> np.ndarray:
    """Line-sum thresholding in the bicluster model.

    ``axis=0`` sums each column over the rows (estimates C2, cut K1 mu / 2);
    ``axis=1`` sums each row (estimates C1, cut K2 mu / 2).
    """
    if mu <= 0:
        raise ValidationError("mu must be positive")
    if axis not in (0, 1):
        raise ValidationError("axis must be 0 or 1")
    n1, n2 = W.shape
    sums = np.asarray(W).sum(axis=axis)
    if axis == 0:
        cut = _threshold(K1 * mu, n1, K2 / n2, rule)
    else:
        cut = _threshold(K2 * mu, n2, K1 / n1, rule)
    return np.flatnonzero(sums >= cut)


def colsum_expected_error(n1: int, n2: int, K1: int, K2: int, mu: float) -> float:
    """(n2/K2) p_e(K2/n2, K1^2 mu^2 / n1): error per planted column of the Bayes cut."""
    return n2 / K2 * p_e(K2 / n2, K1**2 * mu**2 / n1)


def brute_force_mle(W: np.ndarray, K: int) -> np.ndarray:
    """argmax over K-subsets C of sum_{i,j in C} W_ij, first maximizer in lexicographic order.

    This symmetric version is an adaptation used as a test oracle.
    """
    n = W.shape[0]
    if not 1 <= K <= n:
        raise ValidationError("need 1 <= K <= n")
    if math.comb(n, K) > MLE_LIMIT:
        raise TooLarge(f"C({n},{K}) exceeds {MLE_LIMIT}")
    W = np.asarray(W, dtype=float)
    best, best_val = None, -math.inf
    for C in itertools.combinations(range(n), K):
        idx = list(C)
        val = W[np.ix_(idx, idx)].sum()
        if val > best_val:
            best, best_val = C, val
    return np.array(best, dtype=int)


def brute_force_mle_bicluster(W: np.ndarray, K1: int, K2: int):
    """argmax over (C1, C2) of the block sum; C2 is the top-K2 column sums given C1."""
    n1, n2 = W.shape
    if not (1 <= K1 <= n1 and 1 <= K2 <= n2):
        raise ValidationError("need 1 <= Ki <= ni")
    if math.comb(n1, K1) > MLE_BICLUSTER_LIMIT:
        raise TooLarge(f"C({n1},{K1}) exceeds {MLE_BICLUSTER_LIMIT}")
    W = np.asarray(W, dtype=float)
    cols = np.arange(n2)
    best, best_val = None, -math.inf
    for C1 in itertools.combinations(range(n1), K1):
        sums = W[list(C1)].sum(axis=0)
        C2 = top_k(sums, cols, K2)
        val = sums[C2].sum()
        if val > best_val:
            best, best_val = (np.array(C1, dtype=int), C2), val
    return best


def full_enumeration_bicluster(W: np.ndarray, K1: int, K2: int):
    """Double enumeration over (C1, C2); exponential, used to check the pruned search."""
    n1, n2 = W.shape
    W = np.asarray(W, dtype=float)
    best, best_val = None, -math.inf
    for C1 in itertools.combinations(range(n1), K1):
        sums = W[list(C1)].sum(axis=0)
        for C2 in itertools.combinations(range(n2), K2):
            val = sums[list(C2)].sum()
            if val > best_val:
                best, best_val = (np.array(C1, dtype=int), np.array(C2, dtype=int)), val
    return best
