"""Signed margins for the recovery thresholds.

Every margin is a finite-n evaluation of an asymptotic liminf condition, so a
margin above one is a guide, not a guarantee.  Each boolean in a report is
exactly ``margin > 1``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import ValidationError
from .state_evolution import in_region_G

INV_E = math.exp(-1.0)
SQRT_E = math.sqrt(math.e)


def _check(n, K, K_min=1):
    if not K_min <= K < n:
        raise ValidationError(f"need {K_min} <= K < n, got K={K}, n={n}")


def weak_margin(n: int, K: int, mu: float) -> float:
    """K mu^2 / (4 log(n/K)); weak recovery is possible above one, impossible below."""
    _check(n, K)
    return K * mu**2 / (4 * math.log(n / K))


def exact_margin(n: int, K: int, mu: float) -> float:
    """sqrt(K) mu / (sqrt(2 log K) + sqrt(2 log n))."""
    _check(n, K, 2)
    return math.sqrt(K) * mu / (math.sqrt(2 * math.log(K)) + math.sqrt(2 * math.log(n)))


def mp_feasible(lam: float) -> bool:
    return lam > INV_E


def spectral_feasible(lam: float) -> bool:
    return lam > 1.0


@dataclass(frozen=True)
class ThresholdReport:
    margins: dict
    flags: dict
    extra: dict

    def as_dict(self) -> dict:
        return asdict(self)


def _report(margins: dict, extra: dict) -> ThresholdReport:
    return ThresholdReport(margins, {k: v > 1 for k, v in margins.items()}, extra)


def symmetric_margins(n: int, K: int, mu: float) -> ThresholdReport:
    lam = mu**2 * K**2 / n
    margins = {
        "weak_it": weak_margin(n, K, mu),
        "exact_it": exact_margin(n, K, mu),
        "mp_feasible": lam * math.e,
        "spectral_feasible": lam,
    }
    return _report(margins, {"lambda": lam})


def _vote(Kv, Kd, nd, mu):
    return math.sqrt(Kv) * mu / (math.sqrt(2 * math.log(Kd)) + math.sqrt(2 * math.log(nd)))


def bicluster_margins(n1: int, n2: int, K1: int, K2: int, mu: float) -> ThresholdReport:
    _check(n1, K1)
    _check(n2, K2)
    l1, l2 = K1**2 * mu**2 / n1, K2**2 * mu**2 / n2
    L1, L2 = math.log(n1 / K1), math.log(n2 / K2)
    margins = {
        "mle_weak": mu * math.sqrt(K1 * K2) / math.sqrt(2 * (K1 * L1 + K2 * L2)),
        "colsum_weak_2": K1**2 * mu**2 / (2 * n1 * L2),
        "colsum_weak_1": K2**2 * mu**2 / (2 * n2 * L1),
        "vote_weak": K2 * mu**2 / (2 * L1),
        "vote_exact_1": _vote(K2, K1, n1, mu),
        "vote_exact_2": _vote(K1, K2, n2, mu),
        "colsum_exact": K1 * mu / (math.sqrt(2 * n1)
                                   * (math.sqrt(math.log(K2)) + math.sqrt(math.log(n2)))),
    }
    region = in_region_G(l1, l2) if mu > 0 else "outside"
    return _report(margins, {"lambda1": l1, "lambda2": l2, "region_G": region})


# ---------------------------------------------------------------- phase diagram
# K = rho n / log n and mu^2 = mu0^2 log^2 n / n, so lambda = rho^2 mu0^2.


def mp_curve(mu0: float, rho: float) -> float:
    return rho**2 * mu0**2 * math.e


def exact_curve(mu0: float, rho: float) -> float:
    return rho * mu0**2 / 8


def phase_region(mu0: float, rho: float) -> str:
    """I: both above one; II: MP only; III: exact only; IV: neither.  Ties count as below."""
    if mu0 <= 0 or rho <= 0:
        raise ValidationError("need mu0, rho > 0")
    mp = mp_curve(mu0, rho) > 1
    ex = exact_curve(mu0, rho) > 1
    if mp and ex:
        return "I"
    if mp:
        return "II"
    if ex:
        return "III"
    return "IV"


def mp_boundary_rho(mu0):
    """rho on the MP curve rho^2 mu0^2 e = 1."""
    return 1.0 / (SQRT_E * np.asarray(mu0, dtype=float))


def exact_boundary_rho(mu0):
    """rho on the exact-recovery curve rho mu0^2 = 8."""
    return 8.0 / np.asarray(mu0, dtype=float) ** 2


CROSSING = (8 * SQRT_E, 1 / (8 * math.e))
