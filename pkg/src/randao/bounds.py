"""Bounds showing the single-game model is close to the interleaved protocol.

When an adversary controls an entire epoch it can look more than one epoch
ahead.  These bounds cap how often that happens and how long such an episode
can last, which in turn caps the reward the simple model leaves out.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .epoch import ModelParams
from .errors import DomainError, InstabilityError, SolverError
from .evaluator import tailmax_transition_row


@dataclass
class BoundReport:
    alpha: float
    ell: int
    q: float
    stable: bool
    takeover: float
    expected_height_bound: Optional[float] = None
    reset_time: Optional[np.ndarray] = field(default=None, repr=False)
    reset_time_max: Optional[float] = None
    error_bound: Optional[float] = None
    residual: Optional[float] = None


def takeover_probability(params: ModelParams) -> float:
    """Union bound (2 alpha)^ell on seeding an epoch with no honest slot."""
    return min((2 * params.alpha) ** params.ell, 1.0)


def stability_q(params: ModelParams) -> tuple[float, bool]:
    """Per-level branching bound q of the look-ahead tree; the bounds need q < 1."""
    a, ell = params.alpha, params.ell
    q = (2 * a) ** ell + (1 - a**ell) * (4 * a) ** ell
    return q, q < 1


def tree_height_tail_bound(params: ModelParams, lam: int) -> float:
    """Pr(tree height >= lam) <= q^(lam - 2)."""
    if lam < 2:
        raise DomainError("tree height bound needs lambda >= 2")
    q, _ = stability_q(params)
    return min(max(q ** (lam - 2), 0.0), 1.0)


def expected_height_bound(params: ModelParams) -> float:
    q, stable = stability_q(params)
    if not stable:
        raise InstabilityError(f"q = {q!r} >= 1 at alpha = {params.alpha}")
    return 1 + 1 / (1 - q)


def reset_time_bound(params: ModelParams):
    """Solve the reset-time system over tail pairs (t, t'); returns (x, max x).

    ``x[t, t']`` bounds the expected number of epochs until the second tail
    hits zero.  Transitions use the tail-maximising policy, indexed by the
    first coordinate of the pair.
    """
    height = expected_height_bound(params)
    ell = params.ell
    n = ell + 1
    P = np.array([tailmax_transition_row(params, t) for t in range(n)])

    def idx(t, tp):
        return t * n + tp

    A = np.zeros((n * n, n * n))
    b = np.zeros(n * n)
    for t in range(n):
        # x[t, 0] = 0
        A[idx(t, 0), idx(t, 0)] = 1.0
        # x[t, ell] = 1 + height + x[ell-1, ell-1]
        r = idx(t, ell)
        A[r, r] += 1.0
        A[r, idx(ell - 1, ell - 1)] -= 1.0
        b[r] = 1.0 + height
        # x[t, t'] = 1 + sum_t'' P(t -> t'') x[t', t'']
        for tp in range(1, ell):
            r = idx(t, tp)
            A[r, r] += 1.0
            A[r, idx(tp, 0): idx(tp, 0) + n] -= P[t]
            b[r] = 1.0
    try:
        sol = np.linalg.solve(A, b)
    except np.linalg.LinAlgError as exc:
        raise InstabilityError(f"reset-time system is singular: {exc}") from exc
    if not np.all(np.isfinite(sol)):
        raise SolverError("reset-time solution is not finite")
    x = sol.reshape(n, n)
    return x, float(x.max())


def reset_time_residual(params: ModelParams, x: np.ndarray) -> float:
    """Largest violation of the reset-time equations by ``x``."""
    ell = params.ell
    height = expected_height_bound(params)
    P = np.array([tailmax_transition_row(params, t) for t in range(ell + 1)])
    worst = float(np.max(np.abs(x[:, 0])))
    worst = max(worst, float(np.max(np.abs(x[:, ell] - 1 - height - x[ell - 1, ell - 1]))))
    for t in range(ell + 1):
        for tp in range(1, ell):
            worst = max(worst, abs(x[t, tp] - 1 - P[t] @ x[tp]))
    return worst


def reward_gap_bound(params: ModelParams) -> float:
    """ell * X * (2 alpha)^ell: reward the single-game model can miss per epoch."""
    if params.alpha == 0:
        return 0.0
    _, X = reset_time_bound(params)
    return params.ell * X * takeover_probability(params)


def bound_report(params: ModelParams) -> BoundReport:
    """Every bound at once; the stability-dependent fields stay None when q >= 1."""
    q, stable = stability_q(params)
    rep = BoundReport(params.alpha, params.ell, q, stable, takeover_probability(params))
    if stable:
        rep.expected_height_bound = expected_height_bound(params)
        x, X = reset_time_bound(params)
        rep.reset_time, rep.reset_time_max = x, X
        rep.error_bound = params.ell * X * rep.takeover
        rep.residual = reset_time_residual(params, x)
    return rep
