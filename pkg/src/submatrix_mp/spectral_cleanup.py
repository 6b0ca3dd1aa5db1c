"""Power-method cleanup of a thresholded candidate set, and its constants.

The constants (s*, eta) are the loose worst-case ones from the analysis; at
eps = 1e-4 and lambda = 1, eta is about 5.6, i.e. vacuous as an error bound.
They still fix the number of power iterations, ceil(s* log n).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidRegime, ValidationError, ZeroVector
from .state_evolution import bisect

EPS_MAX = 1e-3
MAX_RESTARTS = 3


def entropy(eps: float) -> float:
    """Binary entropy in nats, with 0 log 0 = 0."""
    if not 0.0 <= eps <= 1.0:
        raise ValidationError("eps must lie in [0, 1]")
    total = 0.0
    for p in (eps, 1.0 - eps):
        if p > 0:
            total -= p * math.log(p)
    return total


def _check_eps(eps, eps_max):
    if not 0.0 < eps < eps_max:
        raise ValidationError(f"eps must lie in (0, {eps_max}), got {eps}")


def eta_symmetric(eps: float, lam: float, eps_max: float = EPS_MAX) -> float:
    _check_eps(eps, eps_max)
    if lam < math.exp(-1.0):
        raise ValidationError("lambda must be >= 1/e")
    return 2 * eps + 5000 * (entropy(eps) + eps) / (lam * (1 - eps) ** 2)


def s_star_symmetric(eps: float, lam: float, eps_max: float = EPS_MAX) -> float:
    _check_eps(eps, eps_max)
    arg = math.sqrt(lam) * (1 - eps) / (16 * math.sqrt(entropy(eps) + eps))
    if arg <= 1:
        raise InvalidRegime(f"sqrt(lambda)(1-eps) <= 16 sqrt(h(eps)+eps) at eps={eps}, lambda={lam}")
    return 2 / math.log(arg)


def epsilon_for_eta(eta_target: float, lam: float, eps_max: float = EPS_MAX) -> float:
    """Largest eps in (0, eps_max) with eta(eps, lambda) <= eta_target."""
    if eta_target <= 0:
        raise ValidationError("eta_target must be positive")
    if lam <= math.exp(-1.0):
        raise ValidationError("lambda must exceed 1/e")

    def eta(e):
        return 2 * e + 5000 * (entropy(e) + e) / (lam * (1 - e) ** 2)

    if eta(eps_max) <= eta_target:
        return math.nextafter(eps_max, 0.0)
    root = bisect(lambda e: eta_target - eta(e), 0.0, eps_max)
    # keep the feasible side of the bracket
    while root > 0 and eta(root) > eta_target:
        root = math.nextafter(root, 0.0)
    return root


def c0_bicluster(n1: int, n2: int, K1: int, K2: int, mu: float) -> float:
    return (math.sqrt(n1) + math.sqrt(n2)) / (mu * math.sqrt(K1 * K2))


def eta_bicluster(eps: float, c0: float) -> float:
    if not 0.0 <= eps < 1.0:
        raise ValidationError("eps must lie in [0, 1)")
    return 2 * eps + 650 * c0**2 * (entropy(eps) + eps) / (1 - eps) ** 2


def s_star_bicluster(eps: float, c0: float) -> float:
    r = 3 * c0 * math.sqrt(entropy(eps) + eps)
    arg = (1 - eps - r) / r
    if arg <= 1:
        raise InvalidRegime(f"cleanup constant undefined at eps={eps}, c0={c0}")
    return 1 / math.log(arg)


@dataclass(frozen=True)
class CleanupParams:
    epsilon: float
    s_star: float
    eta: float

    @classmethod
    def symmetric(cls, eps: float, lam: float, eps_max: float = EPS_MAX) -> "CleanupParams":
        return cls(eps, s_star_symmetric(eps, lam, eps_max), eta_symmetric(eps, lam, eps_max))


# ---------------------------------------------------------------- power method


def _unit(rng, m):
    u = rng.standard_normal(m)
    return u / np.linalg.norm(u)


def power_iterate(M: np.ndarray, u0: np.ndarray, steps: int, rng=None, history=False):
    """u <- M u / |M u|, ``steps`` times.  Restarts from a fresh random vector on a zero product."""
    u = np.asarray(u0, dtype=float)
    u = u / np.linalg.norm(u)
    hist = [u] if history else None
    restarts = 0
    t = 0
    while t < steps:
        v = M @ u
        nrm = np.linalg.norm(v)
        if nrm == 0.0:
            if rng is None or restarts >= MAX_RESTARTS:
                raise ZeroVector("power iteration reached the zero vector")
            restarts += 1
            u = _unit(rng, M.shape[1])
            t = 0
            hist = [u] if history else None
            continue
        u = v / nrm
        t += 1
        if history:
            hist.append(u)
    return (u, hist) if history else u


def top_k(scores: np.ndarray, index: np.ndarray, k: int) -> np.ndarray:
    """Entries of ``index`` with the k largest scores; ties go to the smaller index."""
    order = np.lexsort((index, -np.asarray(scores)))
    return np.sort(np.asarray(index)[order[:k]])


def _pad(chosen, K, beliefs, n):
    if len(chosen) >= K:
        return chosen
    if beliefs is None:
        raise ValidationError("|C~| < K and no beliefs given for padding")
    rest = np.setdiff1d(np.arange(n), chosen)
    extra = top_k(np.asarray(beliefs)[rest], rest, K - len(chosen))
    return np.sort(np.concatenate([chosen, extra]))


def power_cleanup(A: np.ndarray, C_tilde, K: int, s_star: float, seed=None, beliefs=None,
                  u0=None, n: int | None = None) -> np.ndarray:
    """Top-K coordinates (by magnitude) of the power iterate of A restricted to C~.

    Runs ceil(s* log n) steps.  When |C~| < K the result is padded with the
    highest-belief indices outside C~.
    """
    C = np.sort(np.asarray(C_tilde, dtype=int))
    n = A.shape[0] if n is None else n
    if K < 1:
        raise ValidationError("K must be >= 1")
    if len(C) == 0:
        return _pad(C, K, beliefs, A.shape[0])
    if len(C) <= K:
        return _pad(C, K, beliefs, A.shape[0])
    rng = np.random.default_rng(seed)
    steps = math.ceil(s_star * math.log(n))
    start = _unit(rng, len(C)) if u0 is None else u0
    u = power_iterate(A[np.ix_(C, C)], start, steps, rng)
    return top_k(np.abs(u), C, K)


def power_cleanup_bicluster(W: np.ndarray, C1_tilde, C2_tilde, K1: int, K2: int,
                            s_star: float, seed=None, row_beliefs=None, col_beliefs=None,
                            u0=None):
    """Alternate W~^T then W~ for ceil(s* log(n1 n2)) round trips.

    Even iterates live on the rows, odd ones on the columns; the column vector
    is one extra half-step W~^T u_hat after the last row iterate.
    """
    n1, n2 = W.shape
    C1 = np.sort(np.asarray(C1_tilde, dtype=int))
    C2 = np.sort(np.asarray(C2_tilde, dtype=int))
    if len(C1) == 0 or len(C2) == 0:
        return _pad(C1, K1, row_beliefs, n1), _pad(C2, K2, col_beliefs, n2)
    rng = np.random.default_rng(seed)
    rounds = math.ceil(s_star * math.log(n1 * n2))
    sub = W[np.ix_(C1, C2)]
    u = _unit(rng, len(C1)) if u0 is None else np.asarray(u0, float) / np.linalg.norm(u0)
    for _ in range(rounds):
        v = _normalized(sub.T @ u)
        u = _normalized(sub @ v)
    v = _normalized(sub.T @ u)
    rows = top_k(np.abs(u), C1, K1) if len(C1) > K1 else C1
    cols = top_k(np.abs(v), C2, K2) if len(C2) > K2 else C2
    return _pad(rows, K1, row_beliefs, n1), _pad(cols, K2, col_beliefs, n2)


def _normalized(v):
    nrm = np.linalg.norm(v)
    if nrm == 0.0:
        raise ZeroVector("bicluster power iteration reached the zero vector")
    return v / nrm
