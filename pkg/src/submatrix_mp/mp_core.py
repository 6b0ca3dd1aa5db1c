"""Non-backtracking message passing (symmetric and bicluster) and belief thresholding.

Messages live in one dense array: ``messages[i, j]`` is theta_{i->j}.  One step
evaluates f once per directed message into ``g``, forms the full sums
S_i = sum_{l != i} A_{li} g_{l->i}, and recovers every message from the identity

    theta_{i->j} = S_i - A_{ji} g_{j->i},

which costs O(n^2) per step instead of O(n^3) for the literal sums.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .polynomials import eval_nonlinearity


@dataclass
class MessageState:
    t: int
    messages: np.ndarray
    beliefs: np.ndarray

    @classmethod
    def initial(cls, n: int) -> "MessageState":
        return cls(0, np.zeros((n, n)), np.zeros(n))


def mp_step(A: np.ndarray, state: MessageState, f_t) -> MessageState:
    n = state.messages.shape[0]
    if A.shape != (n, n):
        raise ValidationError(f"A has shape {A.shape}, messages have {state.messages.shape}")
    g = _apply(f_t, state.messages)
    g *= A
    np.fill_diagonal(g, 0.0)
    s = g.sum(axis=0)
    messages = s[:, None] - g.T
    np.fill_diagonal(messages, 0.0)
    return MessageState(state.t + 1, messages, s)


def _apply(f, x):
    if callable(f) and not hasattr(f, "a"):
        return np.array(f(x), dtype=float)
    return np.asarray(eval_nonlinearity(f, x), dtype=float)


def mp_step_direct(A: np.ndarray, messages: np.ndarray, f_t):
    """Literal evaluation of the message and belief sums; O(n^3), test oracle only."""
    n = A.shape[0]
    g = _apply(f_t, messages)
    new = np.zeros((n, n))
    beliefs = np.zeros(n)
    for i in range(n):
        beliefs[i] = sum(A[l, i] * g[l, i] for l in range(n) if l != i)
        for j in range(n):
            if j != i:
                new[i, j] = sum(A[l, i] * g[l, i] for l in range(n) if l != i and l != j)
    return new, beliefs


def run_mp(A: np.ndarray, schedule, history: bool = False, dump=None):
    """Apply schedule entries f(., 0..t*-1); returns theta^{t*} (and all states if asked).

    The last pass is the belief computation for t*; ``dump`` is an optional
    :class:`BeliefDump` that receives the beliefs of every iteration.
    """
    if schedule.horizon < 1:
        raise ValidationError("schedule horizon must be >= 1")
    state = MessageState.initial(A.shape[0])
    states = [state] if history else None
    for t in range(schedule.horizon):
        state = mp_step(A, state, schedule[t])
        if history:
            states.append(state)
        if dump is not None:
            dump.append(state.t, state.beliefs)
    return (state.beliefs, states) if history else state.beliefs


class BeliefDump:
    """Collects per-iteration beliefs and writes CSV rows (t, index, belief, in_support)."""

    def __init__(self, support=()):
        self.support = set(int(i) for i in support)
        self.rows = []

    def append(self, t, beliefs):
        for i, b in enumerate(beliefs):
            self.rows.append((t, i, float(b), int(i in self.support)))

    def write(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "index", "belief", "in_support"])
            for t, i, b, s in self.rows:
                w.writerow([t, i, repr(b), s])


def threshold_beliefs(beliefs: np.ndarray, mu_hat_tstar: float) -> np.ndarray:
    """Indices with belief >= mu_hat / 2."""
    if mu_hat_tstar <= 0:
        raise ValidationError("mu_hat must be positive")
    return np.flatnonzero(np.asarray(beliefs) >= mu_hat_tstar / 2)


# ---------------------------------------------------------------- bicluster


@dataclass
class BiclusterMessageState:
    """Alternating state.

    ``row_msgs[i, j]`` = theta_{i->j} (row i to column j), ``col_msgs[j, i]`` =
    theta_{j->i}.  Column quantities are produced at odd t and row quantities at
    even t; at t = 0 the row-to-column messages are zero.
    """

    t: int
    row_msgs: np.ndarray
    col_msgs: np.ndarray
    row_beliefs: np.ndarray
    col_beliefs: np.ndarray
    row_t: int = 0
    col_t: int = -1

    @classmethod
    def initial(cls, n1: int, n2: int) -> "BiclusterMessageState":
        return cls(0, np.zeros((n1, n2)), np.zeros((n2, n1)), np.zeros(n1), np.zeros(n2))


def mp_step_bicluster(W: np.ndarray, state: BiclusterMessageState, f_t,
                      parity: int | None = None) -> BiclusterMessageState:
    n1, n2 = state.row_msgs.shape
    if W.shape != (n1, n2):
        raise ValidationError(f"W has shape {W.shape}, state is {(n1, n2)}")
    if parity is not None and parity != state.t % 2:
        raise ValidationError(f"parity {parity} does not match t={state.t}")
    t = state.t
    if t % 2 == 0:
        # rows -> columns: column j sums over rows l != i.
        g = _apply(f_t, state.row_msgs)
        g *= W
        g /= np.sqrt(n1)
        s = g.sum(axis=0)
        col_msgs = s[:, None] - g.T
        return BiclusterMessageState(t + 1, state.row_msgs, col_msgs, state.row_beliefs, s,
                                     state.row_t, t + 1)
    g = _apply(f_t, state.col_msgs)
    g *= W.T
    g /= np.sqrt(n2)
    s = g.sum(axis=0)
    row_msgs = s[:, None] - g.T
    return BiclusterMessageState(t + 1, row_msgs, state.col_msgs, s, state.col_beliefs,
                                 t + 1, state.col_t)


def mp_step_bicluster_direct(W: np.ndarray, state: BiclusterMessageState, f_t):
    """Literal sums for one half-step; returns (new messages, new beliefs)."""
    n1, n2 = W.shape
    if state.t % 2 == 0:
        g = _apply(f_t, state.row_msgs)
        new = np.zeros((n2, n1))
        bel = np.array([sum(W[l, j] * g[l, j] for l in range(n1)) for j in range(n2)])
        for j in range(n2):
            for i in range(n1):
                new[j, i] = sum(W[l, j] * g[l, j] for l in range(n1) if l != i)
        return new / np.sqrt(n1), bel / np.sqrt(n1)
    g = _apply(f_t, state.col_msgs)
    new = np.zeros((n1, n2))
    bel = np.array([sum(W[i, l] * g[l, i] for l in range(n2)) for i in range(n1)])
    for i in range(n1):
        for j in range(n2):
            new[i, j] = sum(W[i, l] * g[l, i] for l in range(n2) if l != j)
    return new / np.sqrt(n2), bel / np.sqrt(n2)


def run_mp_bicluster(W: np.ndarray, schedule):
    """Run t*+1 half-steps; returns (row beliefs at t*, column beliefs at t*+1, state)."""
    t_star = schedule.horizon - 1
    if t_star % 2:
        raise ValidationError("bicluster horizon t* must be even")
    state = BiclusterMessageState.initial(*W.shape)
    for t in range(t_star + 1):
        state = mp_step_bicluster(W, state, schedule[t], parity=t % 2)
        assert state.row_t % 2 == 0 and state.col_t % 2 == 1 or state.col_t == -1
    return state.row_beliefs, state.col_beliefs, state
