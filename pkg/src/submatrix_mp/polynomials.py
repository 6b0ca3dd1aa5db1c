"""Hermite machinery and the SNR-optimal degree-d message nonlinearity.

Polynomials are the probabilists' Hermite family, orthogonal under N(0,1):
E[H_m(Z) H_n(Z)] = m! delta_mn and E[H_k(mu + Z)] = mu^k.  A nonlinearity
is stored by its coefficients in the basis H_0..H_d, normalized so that
E[f(Z)^2] = sum_k k! a_k^2 = 1.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

VARIANTS = ("optimal", "linear", "affine")


def hermite_eval(k: int, x):
    """H_k(x) by the three-term recurrence H_{k+1} = x H_k - k H_{k-1}."""
    if k < 0:
        raise ValueError("degree must be nonnegative")
    x = np.asarray(x, dtype=float)
    h_prev = np.ones_like(x)
    if k == 0:
        return h_prev[()] if h_prev.ndim == 0 else h_prev
    h = x.copy()
    for j in range(1, k):
        h_prev, h = h, x * h - j * h_prev
    return h[()] if h.ndim == 0 else h


def hermite_explicit(k: int, x):
    """Closed-form alternating sum; kept as an independent check of the recurrence."""
    x = np.asarray(x, dtype=float)
    total = np.zeros_like(x)
    for i in range(k // 2 + 1):
        dfact = math.prod(range(2 * i - 1, 0, -2))  # (2i-1)!!, with (-1)!! = 1
        total = total + (-1) ** i * dfact * math.comb(k, 2 * i) * x ** (k - 2 * i)
    return total[()] if total.ndim == 0 else total


def partial_exp(d: int, x: float) -> float:
    """G_d(x) = sum_{k<=d} x^k / k!."""
    if d < 0:
        raise ValueError("d must be nonnegative")
    term, total = 1.0, 1.0
    for k in range(1, d + 1):
        term *= x / k
        total += term
    return total


@lru_cache(maxsize=None)
def gauss_hermite(nodes: int = 64):
    """Nodes and weights for E[g(Z)], Z ~ N(0,1); weights sum to one."""
    x, w = np.polynomial.hermite_e.hermegauss(nodes)
    return x, w / math.sqrt(2.0 * math.pi)


def gaussian_expect(fn, mean: float = 0.0, nodes: int = 64) -> float:
    x, w = gauss_hermite(nodes)
    return float(np.dot(w, fn(mean + x)))


@dataclass(frozen=True)
class HermiteCoeffs:
    a: tuple

    @property
    def degree(self) -> int:
        return len(self.a) - 1

    def norm2(self) -> float:
        """E[f(Z)^2]."""
        return sum(math.factorial(k) * c * c for k, c in enumerate(self.a))

    def __call__(self, x):
        return eval_nonlinearity(self, x)


def optimal_coeffs(mu_hat: float, d: int) -> HermiteCoeffs:
    """Normalized truncation of the relative density exp(mu x - mu^2/2) to H_0..H_d."""
    if mu_hat < 0:
        raise ValueError("mu_hat must be nonnegative")
    if d < 1:
        raise ValueError("d must be >= 1")
    norm = math.sqrt(partial_exp(d, mu_hat * mu_hat))
    a, term = [], 1.0
    for k in range(d + 1):
        if k > 0:
            term *= mu_hat / k
        a.append(term / norm)
    return HermiteCoeffs(tuple(a))


CONSTANT_ONE = HermiteCoeffs((1.0,))
IDENTITY = HermiteCoeffs((0.0, 1.0))


def eval_nonlinearity(coeffs: HermiteCoeffs, x):
    """sum_k a_k H_k(x), evaluated with the recurrence in one pass over x."""
    a = coeffs.a
    x = np.asarray(x, dtype=float)
    out = np.full_like(x, a[0])
    if len(a) > 1:
        h_prev = np.ones_like(x)
        h = x
        out += a[1] * h
        for k in range(1, len(a) - 1):
            h_prev, h = h, x * h - k * h_prev
            out += a[k + 1] * h
    return out[()] if out.ndim == 0 else out


@dataclass(frozen=True)
class NonlinearitySchedule:
    """Per-iteration nonlinearities f(., t) for t = 0..horizon-1 plus the SE levels.

    ``mu_hat`` has horizon+1 entries: mu_hat[t] is the predicted on-support mean of
    the beliefs produced at iteration t, so mu_hat[horizon] sets the threshold.
    """

    d: int
    variant: str
    coeffs: tuple
    mu_hat: tuple
    lam: float | tuple = 0.0

    @property
    def horizon(self) -> int:
        return len(self.coeffs)

    def __getitem__(self, t) -> HermiteCoeffs:
        return self.coeffs[t]

    def to_json(self) -> str:
        return json.dumps({
            "d": self.d,
            "variant": self.variant,
            "lambda": self.lam,
            "horizon": self.horizon,
            "mu_hat": list(self.mu_hat),
            "coeffs": [list(c.a) for c in self.coeffs],
        })

    @classmethod
    def from_json(cls, text: str) -> "NonlinearitySchedule":
        obj = json.loads(text)
        lam = obj["lambda"]
        return cls(obj["d"], obj["variant"],
                   tuple(HermiteCoeffs(tuple(c)) for c in obj["coeffs"]),
                   tuple(obj["mu_hat"]), tuple(lam) if isinstance(lam, list) else lam)


def _coeffs_for(variant, d, mu_hat_values):
    if variant == "linear":
        return (CONSTANT_ONE,) + (IDENTITY,) * (len(mu_hat_values) - 1)
    # mu_hat_0 = 0, so entry 0 is the constant 1 padded to degree d.
    return tuple(optimal_coeffs(m, d) for m in mu_hat_values)


def linear_trace(lam: float, M: float | None = None, horizon: int | None = None,
                 max_iter: int = 10_000):
    """mu_t = lambda^{t/2} for f(.,0)=1, f(x,t)=x."""
    from .errors import NoDivergence

    if horizon is not None:
        return [0.0] + [lam ** (t / 2) for t in range(1, horizon + 1)]
    if lam <= 1.0:
        raise NoDivergence(f"linear message passing needs lambda > 1, got {lam}")
    vals = [0.0]
    for t in range(1, max_iter + 1):
        vals.append(lam ** (t / 2))
        if vals[-1] > M:
            return vals
    raise NoDivergence("linear trace did not cross M within the iteration cap")


def build_schedule(lam: float, d: int, M: float | None = None, variant: str = "optimal",
                   horizon: int | None = None) -> NonlinearitySchedule:
    """Schedule for the symmetric engine.

    With ``M`` the horizon is t*(lambda, M), the first t with mu_hat_t > M; an
    explicit ``horizon`` skips the divergence requirement (used for sub-critical
    sweeps).  ``affine`` is the optimal rule at d = 1.
    """
    from .state_evolution import se_trace

    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    if M is None and horizon is None:
        raise ValueError("give M or horizon")
    if variant == "affine":
        d = 1
    if variant == "linear":
        vals = linear_trace(lam, M, horizon)
    else:
        trace = se_trace(lam, d, T=horizon, M=None if horizon is not None else M)
        vals = list(trace.values)
    t_star = len(vals) - 1
    return NonlinearitySchedule(d, variant, _coeffs_for(variant, d, vals[:t_star]),
                                tuple(vals), lam)


def build_schedule_bicluster(lam1: float, lam2: float, d: int, M: float | None = None,
                             horizon: int | None = None) -> NonlinearitySchedule:
    """Schedule with t*+1 entries (rows read at even t*, columns at t*+1)."""
    from .state_evolution import se_trace_bicluster

    if horizon is not None:
        trace = se_trace_bicluster(lam1, lam2, d, T=horizon + 1)
        t_star = horizon
    else:
        trace = se_trace_bicluster(lam1, lam2, d, M=M)
        t_star = trace.t_star
    vals = list(trace.values[: t_star + 2])
    return NonlinearitySchedule(d, "optimal", _coeffs_for("optimal", d, vals[: t_star + 1]),
                                tuple(vals), (lam1, lam2))
