"""Epoch model: tail/count distributions and the observation space.

An epoch of ``ell`` slots is summarised by its *tail* (number of trailing
adversarial slots) and its *count* (adversarial slots before the honest slot
that precedes the tail).  Observations are ``(omega, tail)`` pairs where
``omega`` is the count minus the number of withheld slots.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from math import comb

import numpy as np

from .errors import DomainError

#: Tolerance on pmf normalization checks.
PMF_TOL = 1e-12


@dataclass(frozen=True)
class ModelParams:
    """Adversarial stake ``alpha`` and epoch length ``ell``."""

    alpha: float
    ell: int = 32

    def __post_init__(self):
        if not (0.0 <= self.alpha < 1.0):
            raise DomainError(f"alpha must lie in [0, 1), got {self.alpha!r}")
        if int(self.ell) != self.ell or self.ell < 1:
            raise DomainError(f"ell must be a positive integer, got {self.ell!r}")
        object.__setattr__(self, "ell", int(self.ell))
        object.__setattr__(self, "alpha", float(self.alpha))

    @property
    def provable(self) -> bool:
        # float64 evaluation is only trusted up to ell = 32
        return self.ell <= 32


@dataclass(frozen=True, order=True)
class Observation:
    omega: int
    tail: int

    def reward(self) -> int:
        """Slots won in the next epoch when this observation is chosen."""
        return self.omega + self.tail


def _check_tail(params: ModelParams, t: int) -> None:
    if not (0 <= t <= params.ell):
        raise DomainError(f"tail {t} outside [0, {params.ell}]")


def tail_pmf(params: ModelParams, t: int) -> float:
    """Pr(T = t) for the truncated geometric tail distribution."""
    _check_tail(params, t)
    a = params.alpha
    if t == params.ell:
        return a**params.ell
    return (1.0 - a) * a**t


def tail_pmf_vector(params: ModelParams) -> np.ndarray:
    return np.array([tail_pmf(params, t) for t in range(params.ell + 1)])


def count_pmf(params: ModelParams, t: int, c: int) -> float:
    """Pr(C = c | T = t); the count is binomial over the ell - t - 1 free slots."""
    _check_tail(params, t)
    ell, a = params.ell, params.alpha
    if c < 0:
        return 0.0
    if t >= ell - 1:
        return 1.0 if c == 0 else 0.0
    n = ell - t - 1
    if c > n:
        return 0.0
    return comb(n, c) * a**c * (1.0 - a) ** (n - c)


@dataclass(frozen=True)
class JointPmf:
    """Joint law of (tail, count); ``table[t, c]``."""

    params: ModelParams
    table: np.ndarray = field(repr=False)

    def __getitem__(self, key) -> float:
        t, c = key
        if not (0 <= t <= self.params.ell) or not (0 <= c <= self.params.ell):
            return 0.0
        return float(self.table[t, c])

    def total(self) -> float:
        return float(self.table.sum())

    def tail_marginal(self) -> np.ndarray:
        return self.table.sum(axis=1)

    def expected_slots(self) -> float:
        """E[C + T] by direct summation over the table."""
        ell = self.params.ell
        t = np.arange(ell + 1)[:, None]
        c = np.arange(ell + 1)[None, :]
        return float((self.table * (t + c)).sum())


def joint_pmf(params: ModelParams) -> JointPmf:
    ell = params.ell
    table = np.zeros((ell + 1, ell + 1))
    for t in range(ell + 1):
        pt = tail_pmf(params, t)
        for c in range(ell - t if t < ell else 1):
            table[t, c] = pt * count_pmf(params, t, c)
    s = table.sum()
    if abs(s - 1.0) > PMF_TOL:
        raise DomainError(f"joint pmf sums to {s!r}")
    table /= s
    table.setflags(write=False)
    return JointPmf(params, table)


def honest_fraction(params: ModelParams) -> float:
    """Slot fraction of an honest proposer.

    Every slot is adversarial with probability alpha, so E[C + T] = alpha * ell
    and the long-run fraction is alpha regardless of ell.
    """
    return params.alpha


def omega_bounds(ell: int, t: int) -> tuple[int, int]:
    """Inclusive range of omega admitted alongside tail ``t``."""
    return -ell, (0 if t == ell else ell - t - 1)


class ObservationSpace:
    """All admissible observations, ascending tail then ascending omega.

    Pairs with omega < -t are kept even though no state with tail t can
    produce them; they simply carry zero probability.
    """

    def __init__(self, ell: int):
        if int(ell) != ell or ell < 1:
            raise DomainError(f"ell must be a positive integer, got {ell!r}")
        self.ell = int(ell)
        omegas, tails = [], []
        for t in range(self.ell + 1):
            lo, hi = omega_bounds(self.ell, t)
            for w in range(lo, hi + 1):
                omegas.append(w)
                tails.append(t)
        self.omegas = np.array(omegas, dtype=np.int64)
        self.tails = np.array(tails, dtype=np.int64)
        self.omegas.setflags(write=False)
        self.tails.setflags(write=False)
        # (tail, omega + ell) -> position, -1 where not admissible
        lookup = np.full((self.ell + 1, 2 * self.ell + 1), -1, dtype=np.int64)
        lookup[self.tails, self.omegas + self.ell] = np.arange(len(omegas))
        lookup.setflags(write=False)
        self.lookup = lookup

    def __len__(self) -> int:
        return len(self.omegas)

    def __getitem__(self, k: int) -> Observation:
        return Observation(int(self.omegas[k]), int(self.tails[k]))

    def __iter__(self):
        for k in range(len(self)):
            yield self[k]

    def __contains__(self, obs) -> bool:
        return self.position(obs, strict=False) >= 0

    @cached_property
    def items(self) -> tuple[Observation, ...]:
        return tuple(self)

    @cached_property
    def rewards(self) -> np.ndarray:
        r = self.omegas + self.tails
        r.setflags(write=False)
        return r

    def position(self, obs: Observation, strict: bool = True) -> int:
        """Canonical index of ``obs``; -1 (or DomainError if strict) when absent."""
        w, t = obs.omega, obs.tail
        k = -1
        if 0 <= t <= self.ell and -self.ell <= w <= self.ell:
            k = int(self.lookup[t, w + self.ell])
        if k < 0 and strict:
            raise DomainError(f"{obs} is not an admissible observation for ell={self.ell}")
        return k


_SPACES: dict[int, ObservationSpace] = {}


def observation_space(ell: int) -> ObservationSpace:
    """Cached canonical observation space for epoch length ``ell``."""
    if ell not in _SPACES:
        _SPACES[ell] = ObservationSpace(ell)
    return _SPACES[ell]
