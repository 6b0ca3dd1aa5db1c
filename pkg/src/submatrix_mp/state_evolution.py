"""State-evolution recursions, degree thresholds and the bicluster region G.

The symmetric recursion is mu_{t+1}^2 = lambda * G_d(mu_t^2) from mu_0 = 0.  The
bicluster recursion alternates lambda1 (t even) and lambda2 (t odd).

Thresholds lambda*_d approach 1/e faster than factorially, so by d = 17 they
coincide with 1/e in float64.  They are therefore solved in mpmath at 60
digits; ``lambda_star`` rounds to float and ``lambda_star_excess`` returns the
(well-conditioned) gap lambda*_d - 1/e.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import mpmath
import numpy as np
from scipy.optimize import brentq

from .errors import NoDivergence, OutsideG, SubcriticalLambda
from .polynomials import partial_exp

DIVERGENCE_LEVEL = 1e6  # on mu_hat^2
STALL_TOL = 1e-12
MAX_ITER = 10_000
D_CAP = 50
_MP_DPS = 60
INV_E = math.exp(-1.0)


@dataclass(frozen=True)
class SETrace:
    lam: float | tuple
    d: int
    values: tuple  # mu_hat_t
    squares: tuple  # mu_hat_t^2, the exact recursion state
    diverged: bool
    t_star: int | None = None
    converged: bool = False

    def __len__(self):
        return len(self.values)


def _iterate(step, T, M, stop_at, stall_pairs=1):
    """Shared driver.  ``step(t, x)`` maps mu_t^2 to mu_{t+1}^2."""
    sq = [0.0]
    while True:
        t = len(sq) - 1
        if T is not None and t >= T:
            break
        if M is not None:
            hit = stop_at(sq, M)
            if hit is not None:
                return sq, True, hit, False
        if t >= MAX_ITER:
            raise NoDivergence(f"no crossing within {MAX_ITER} steps", sq)
        sq.append(step(t, sq[-1]))
        if T is None:
            if M is None and sq[-1] > DIVERGENCE_LEVEL:
                return sq, True, None, False
            lag = 2 * stall_pairs
            if len(sq) > lag and abs(math.sqrt(sq[-1]) - math.sqrt(sq[-1 - lag])) < STALL_TOL:
                if M is not None:
                    raise NoDivergence("state evolution reached a fixed point below M", sq)
                return sq, False, None, True
    diverged = sq[-1] > DIVERGENCE_LEVEL
    return sq, diverged, None, False


def _first_above(sq, M):
    return len(sq) - 1 if math.sqrt(sq[-1]) > M else None


def se_trace(lam: float, d: int, T: int | None = None, M: float | None = None) -> SETrace:
    """Symmetric trace.  Stop after T steps, at the first mu_hat_t > M, or (neither)
    at divergence / a fixed point."""
    if lam <= 0 or d < 1:
        raise ValueError("need lambda > 0 and d >= 1")

    def step(t, x):
        return lam * partial_exp(d, x)

    try:
        sq, diverged, t_star, converged = _iterate(step, T, M, _first_above, stall_pairs=1)
    except NoDivergence as exc:
        sq = exc.trace
        raise NoDivergence(str(exc), _make(lam, d, sq, False, None, True)) from None
    return _make(lam, d, sq, diverged, t_star, converged)


def _make(lam, d, sq, diverged, t_star, converged):
    return SETrace(lam, d, tuple(math.sqrt(x) for x in sq), tuple(sq), diverged, t_star,
                   converged)


def se_trace_bicluster(lam1: float, lam2: float, d: int, T: int | None = None,
                       M: float | None = None) -> SETrace:
    """Alternating trace; with M, t_star is the first even t with min(mu_t, mu_{t+1}) > M.

    The returned values always extend to t_star + 1.
    """
    if lam1 <= 0 or lam2 <= 0 or d < 1:
        raise ValueError("need lambda1, lambda2 > 0 and d >= 1")

    def step(t, x):
        return (lam1 if t % 2 == 0 else lam2) * partial_exp(d, x)

    def stop_at(sq, M):
        t = len(sq) - 2
        if t >= 0 and t % 2 == 0 and min(sq[t], sq[t + 1]) > M * M:
            return t
        return None

    try:
        sq, diverged, t_star, converged = _iterate(step, T, M, stop_at, stall_pairs=1)
    except NoDivergence as exc:
        raise NoDivergence(str(exc), _make((lam1, lam2), d, exc.trace, False, None, True)) from None
    if t_star is not None:
        sq = sq[: t_star + 2]
    return _make((lam1, lam2), d, sq, diverged, t_star, converged)


# ---------------------------------------------------------------- thresholds


def bisect(fn, lo, hi):
    """Root of fn on [lo, hi] given a sign change, to full double precision."""
    return brentq(fn, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)


def _gap(d, a):
    """G_d(a) - a G_{d-1}(a) = 1 - sum_{k=1}^d a^k (k-1)/k!; strictly decreasing for a > 0."""
    total, term = 1, 1
    for k in range(1, d + 1):
        term = term * a / k
        total -= term * (k - 1)
    return total


def _g(d, x):
    total, term = 1, 1
    for k in range(1, d + 1):
        term = term * x / k
        total += term
    return total


def solve_a_star(d: int, precise: bool = False):
    """Unique positive root of G_d(a) = a G_{d-1}(a), d >= 2."""
    if d < 2:
        raise ValueError("a*_d is defined for d >= 2")
    if precise:
        with mpmath.workdps(_MP_DPS):
            one = mpmath.mpf(1)
            hi = mpmath.mpf(2)
            while _gap(d, hi) > 0:
                hi *= 2
            return mpmath.findroot(lambda a: _gap(d, a), (one, hi), solver="anderson")
    hi = 2.0
    while _gap(d, hi) > 0:
        hi *= 2
    return bisect(lambda a: _gap(d, a), 1.0, hi)


@lru_cache(maxsize=None)
def _lambda_star_mp(d: int):
    if d < 1:
        raise ValueError("d must be >= 1")
    with mpmath.workdps(_MP_DPS):
        if d == 1:
            return mpmath.mpf(1)
        return 1 / _g(d - 1, solve_a_star(d, precise=True))


def lambda_star(d: int) -> float:
    return float(_lambda_star_mp(d))


def lambda_star_excess(d: int) -> float:
    """lambda*_d - 1/e, accurate even where lambda*_d rounds to 1/e."""
    with mpmath.workdps(_MP_DPS):
        return float(_lambda_star_mp(d) - mpmath.exp(-1))


def threshold_table(d_max: int = 5):
    """Rows (d, a*_d, lambda*_d); a*_1 is reported as nan."""
    rows = []
    for d in range(1, d_max + 1):
        a = float(solve_a_star(d, precise=True)) if d >= 2 else float("nan")
        rows.append((d, a, lambda_star(d)))
    return rows


def d_star(lam: float) -> int:
    """Smallest d with lambda*_d < lambda."""
    with mpmath.workdps(_MP_DPS):
        x = mpmath.mpf(lam)
        if x <= mpmath.exp(-1):
            raise SubcriticalLambda(f"lambda={lam} <= 1/e")
        for d in range(1, D_CAP + 1):
            if _lambda_star_mp(d) < x:
                return d
    raise SubcriticalLambda(f"no degree up to {D_CAP} works for lambda={lam}")


# ---------------------------------------------------------------- bicluster region


def diverges_bicluster(lam1: float, lam2: float, d: int) -> bool:
    """Membership of (lam1, lam2) in G_d."""
    if d == 1:
        # mu_{t+2}^2 = lam2 (1 + lam1 (1 + mu_t^2)): grows iff lam1 lam2 >= 1.
        return lam1 * lam2 >= 1.0
    x = 0.0
    for _ in range(MAX_ITER):
        nxt = lam2 * partial_exp(d, lam1 * partial_exp(d, x))
        if nxt > DIVERGENCE_LEVEL:
            return True
        if abs(nxt - x) < STALL_TOL:
            return False
        x = nxt
    return False


def d_star_bicluster(lam1: float, lam2: float) -> int:
    for d in range(1, D_CAP + 1):
        if diverges_bicluster(lam1, lam2, d):
            return d
    raise OutsideG(f"({lam1}, {lam2}) not in G_d for any d <= {D_CAP}")


def boundary_point(y: float):
    """Point of the boundary of G with parameter y > 0."""
    if y <= 0:
        raise ValueError("y must be positive")
    return (y * math.exp(-1.0 / y), math.exp(-y) / y)


def _solve_y(lam1):
    # y exp(-1/y) = lam1  <=>  log y - 1/y = log lam1, increasing in y.
    target = math.log(lam1)
    hi = max(1.0, math.e * lam1) + 1.0
    return bisect(lambda y: target - (math.log(y) - 1.0 / y), 1e-6, hi)


def boundary_lambda2(lam1: float) -> float:
    """lambda2 on the boundary of G above a given lambda1."""
    y = _solve_y(lam1)
    return math.exp(-y) / y


def in_region_G(lam1: float, lam2: float, rtol: float = 1e-9) -> str:
    """'inside', 'outside' or 'boundary' from the parametric boundary."""
    if lam1 <= 0 or lam2 <= 0:
        raise ValueError("need positive lambdas")
    b = boundary_lambda2(lam1)
    rel = (lam2 - b) / b
    if abs(rel) <= rtol:
        return "boundary"
    return "inside" if rel > 0 else "outside"


def in_region_G_iterative(lam1: float, lam2: float, max_iter: int = 1_000_000) -> bool:
    """Iterate phi(x) = lam2 exp(lam1 exp(x)) from 0; True when it escapes."""
    x = 0.0
    for _ in range(max_iter):
        inner = lam1 * math.exp(x) if x < 700 else math.inf
        if inner > 700:
            return True
        nxt = lam2 * math.exp(inner)
        if nxt > DIVERGENCE_LEVEL:
            return True
        if abs(nxt - x) < STALL_TOL:
            return False
        x = nxt
    return False


def gd_boundary_lambda2(d: int, lam1: float, rtol: float = 1e-10) -> float:
    """Smallest lambda2 with (lam1, lambda2) in G_d (d = 1 gives 1/lam1)."""
    if d == 1:
        return 1.0 / lam1
    hi = 1.0 / lam1
    lo = boundary_lambda2(lam1) * (1 - 1e-12)
    while hi - lo > rtol * hi:
        mid = (lo + hi) / 2
        if diverges_bicluster(lam1, mid, d):
            hi = mid
        else:
            lo = mid
    return hi
