"""Exact transition probabilities and rewards for any order policy.

From tail state ``t`` the adversary sees ``2**t`` iid draws from the joint
(tail, count) law, ``comb(t, i)`` of them shifted down by ``i`` withheld
slots, and keeps the one ranked highest.  The CDF of that maximum along the
order factorises over the shifts:

    Pr(max <= o) = prod_i  S_i(o) ** comb(t, i)

with ``S_i(o)`` the joint mass of pairs at or below ``o`` once ``i`` is added
to the count.  Point masses are CDF differences along the order.

``S_i`` is carried together with its complement ``Q_i = 1 - S_i`` (mass
strictly above ``o``), each accumulated directly.  Near the top of the order
the logarithm is taken as ``log1p(-Q_i)``, so huge exponents such as
``comb(32, 16)`` do not amplify the rounding of ``1 - Q_i`` and the CDF at
the maximum is exactly 1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .epoch import ModelParams, Observation, joint_pmf, tail_pmf_vector
from .errors import DomainError, NumericalFailure
from .policy import PolicyOrder, predecessor

#: Epoch lengths above this get the near-one clamp.
CLAMP_ABOVE_ELL = 32
CLAMP_EPS = 1e-14
#: Largest rounding overshoot of a probability above 1 that is silently clipped.
OVERSHOOT_TOL = 1e-12
NEG_MASS_TOL = 1e-12
ROW_TOL = 1e-9


@dataclass(frozen=True)
class MarkovModel:
    """Row-stochastic transition matrix over tails plus expected rewards."""

    transition: np.ndarray = field(repr=False)
    reward: np.ndarray = field(repr=False)

    @property
    def n_states(self) -> int:
        return len(self.reward)

    def close_to(self, other: "MarkovModel", tol: float = 1e-12) -> bool:
        return (
            self.transition.shape == other.transition.shape
            and np.max(np.abs(self.transition - other.transition)) <= tol
            and np.max(np.abs(self.reward - other.reward)) <= tol
        )


def maxtail_cdf(params: ModelParams, t: int, tprime: int) -> float:
    """Pr(max of 2**t iid tails <= tprime)."""
    ell = params.ell
    if not (0 <= t <= ell and 0 <= tprime <= ell):
        raise DomainError(f"tails ({t}, {tprime}) outside [0, {ell}]")
    if tprime == ell:
        return 1.0
    above = params.alpha ** (tprime + 1)
    # log1p keeps (1 - above) ** 2**t accurate for large t
    return math.exp(2.0**t * math.log1p(-above)) if above < 1 else 0.0


def tailmax_transition_row(params: ModelParams, t: int) -> np.ndarray:
    cdf = np.array([maxtail_cdf(params, t, tp) for tp in range(params.ell + 1)])
    return np.diff(cdf, prepend=0.0)


def _clamp_active(params: ModelParams) -> bool:
    return params.ell > CLAMP_ABOVE_ELL


def clamped_power(base: float, exponent: int, params: ModelParams) -> float:
    """``base ** exponent`` for a probability, with the long-epoch clamp.

    For ell > 32 a base within 1e-14 of one is treated as exactly one: the
    float error in such a base would otherwise be blown up by exponents in
    the 1e18..1e37 range.
    """
    if exponent < 0:
        raise DomainError("exponent must be nonnegative")
    if base < 0 or base > 1 + OVERSHOOT_TOL:
        raise NumericalFailure(f"probability base {base!r} outside [0, 1]")
    base = min(base, 1.0)
    if _clamp_active(params) and base >= 1 - CLAMP_EPS:
        return 1.0
    return base**exponent


def _binomial_matrix(ell: int) -> np.ndarray:
    """``B[t, i] = comb(t, i)`` as floats."""
    B = np.zeros((ell + 1, ell + 1))
    for t in range(ell + 1):
        for i in range(t + 1):
            B[t, i] = float(math.comb(t, i))
    return B


def shifted_prefix_sums(params: ModelParams, order: PolicyOrder):
    """Per-rank inclusive sums ``S`` and strict upper sums ``Q`` for every shift.

    Row ``k`` is the observation of rank ``k``; column ``i`` is the number of
    withheld slots.  ``S[k, i] + Q[k, i]`` is the total joint mass (one).
    """
    if order.ell != params.ell:
        raise DomainError("order and params disagree on ell")
    ell = params.ell
    F = joint_pmf(params).table
    space = order.space
    om = space.omegas[order.ranking]
    tl = space.tails[order.ranking]
    counts = om[:, None] + np.arange(ell + 1)[None, :]
    valid = (counts >= 0) & (counts <= ell)
    A = np.where(valid, F[tl[:, None], np.clip(counts, 0, ell)], 0.0)
    S = np.cumsum(A, axis=0)
    Q = np.zeros_like(A)
    Q[:-1] = np.cumsum(A[::-1], axis=0)[::-1][1:]
    return S, Q


def _log_factors(S: np.ndarray, Q: np.ndarray, params: ModelParams) -> np.ndarray:
    if np.any(S > 1 + OVERSHOOT_TOL):
        raise NumericalFailure(f"prefix mass {S.max()!r} exceeds one")
    with np.errstate(divide="ignore"):
        L = np.where(S < 0.5, np.log(S), np.log1p(-np.minimum(Q, 1.0)))
    if _clamp_active(params):
        L = np.where(Q <= CLAMP_EPS, 0.0, L)
    return L


@lru_cache(maxsize=16)
def maxpair_cdf_table(params: ModelParams, order: PolicyOrder) -> np.ndarray:
    """``C[k, t] = Pr(maxPair(t) <= order.at(k))`` for every rank and state."""
    S, Q = shifted_prefix_sums(params, order)
    L = _log_factors(S, Q, params)
    B = _binomial_matrix(params.ell)
    zero = np.isneginf(L)
    log_cdf = np.where(zero, 0.0, L) @ B.T
    # any factor that is exactly zero with a positive exponent kills the product
    killed = (zero.astype(float) @ (B.T > 0)) > 0
    cdf = np.exp(log_cdf)
    cdf[killed] = 0.0
    cdf.setflags(write=False)
    return cdf


def maxpair_cdf(params: ModelParams, order: PolicyOrder, t: int, obs: Observation | None) -> float:
    if not (0 <= t <= params.ell):
        raise DomainError(f"tail {t} outside [0, {params.ell}]")
    if obs is None:
        return 0.0
    return float(maxpair_cdf_table(params, order)[order.rank(obs), t])


def maxpair_cdf_direct(params: ModelParams, order: PolicyOrder, t: int, obs: Observation | None) -> float:
    """Reference evaluation: explicit prefix sums and clamped powers.

    Quadratic in the size of the observation space and imprecise for large
    exponents; meant for cross-checks at small ``ell``.
    """
    if obs is None:
        return 0.0
    F = joint_pmf(params)
    top = order.rank(obs)
    below = [order.at(k) for k in range(top + 1)]
    out = 1.0
    for i in range(t + 1):
        s = math.fsum(F[o.tail, o.omega + i] for o in below)
        out *= clamped_power(s, math.comb(t, i), params)
    return out


def point_mass(params: ModelParams, order: PolicyOrder, t: int, obs: Observation) -> float:
    """Pr(maxPair(t) = obs) as a CDF difference."""
    return maxpair_cdf(params, order, t, obs) - maxpair_cdf(params, order, t, predecessor(order, obs))


def _finish(P: np.ndarray, R: np.ndarray, params: ModelParams) -> MarkovModel:
    sums = P.sum(axis=1)
    drift = np.max(np.abs(sums - 1.0))
    if drift > ROW_TOL:
        raise NumericalFailure(f"transition rows drift {drift:.3g} from one")
    P = P / sums[:, None]
    t = np.arange(params.ell + 1)
    if np.any(R < -t - 1e-9) or np.any(R > params.ell + 1e-9):
        raise NumericalFailure("expected reward outside [-t, ell]")
    P.setflags(write=False)
    R.setflags(write=False)
    return MarkovModel(P, R)


@lru_cache(maxsize=16)
def transition_and_reward(params: ModelParams, order: PolicyOrder) -> MarkovModel:
    """Transition matrix and expected per-epoch reward under ``order``."""
    cdf = maxpair_cdf_table(params, order)
    mass = np.diff(cdf, axis=0, prepend=0.0)
    worst = mass.min()
    if worst < -NEG_MASS_TOL:
        raise NumericalFailure(f"negative point mass {worst!r}; order or precision broken")
    mass = np.maximum(mass, 0.0)
    ell = params.ell
    space = order.space
    tl = space.tails[order.ranking]
    onehot = np.zeros((len(tl), ell + 1))
    onehot[np.arange(len(tl)), tl] = 1.0
    P = mass.T @ onehot
    R = mass.T @ space.rewards[order.ranking].astype(float)
    return _finish(P, R, params)


def honest_model(params: ModelParams) -> MarkovModel:
    """Honest play takes the single no-withholding draw whatever the tail."""
    row = tail_pmf_vector(params)
    n = params.ell + 1
    P = np.tile(row, (n, 1))
    R = np.full(n, joint_pmf(params).expected_slots())
    return _finish(P, R, params)
