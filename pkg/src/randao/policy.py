"""Policies of the reduced MDP as total orders over the observation space.

A policy ranks every observation; from each drawn batch the adversary keeps
the highest-ranked candidate.  ``ranking`` lists canonical positions from
least to most preferred.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .epoch import Observation, ObservationSpace, observation_space
from .errors import DomainError


@dataclass(frozen=True, eq=False)
class PolicyOrder:
    space: ObservationSpace = field(repr=False)
    ranking: np.ndarray = field(repr=False)
    keys: np.ndarray = field(repr=False)
    name: str = "order"

    def __post_init__(self):
        n = len(self.space)
        ranking = np.asarray(self.ranking, dtype=np.int64)
        if ranking.shape != (n,) or not np.array_equal(np.sort(ranking), np.arange(n)):
            raise DomainError("ranking is not a permutation of the observation space")
        rank_index = np.empty(n, dtype=np.int64)
        rank_index[ranking] = np.arange(n)
        for a in (ranking, rank_index):
            a.setflags(write=False)
        object.__setattr__(self, "ranking", ranking)
        object.__setattr__(self, "rank_index", rank_index)

    @property
    def ell(self) -> int:
        return self.space.ell

    def __len__(self) -> int:
        return len(self.ranking)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PolicyOrder):
            return NotImplemented
        return self.ell == other.ell and np.array_equal(self.ranking, other.ranking)

    def __hash__(self):
        return hash((self.ell, self.ranking.tobytes()))

    def at(self, k: int) -> Observation:
        """Observation holding rank ``k`` (0 = least preferred)."""
        return self.space[int(self.ranking[k])]

    def rank(self, obs: Observation) -> int:
        return int(self.rank_index[self.space.position(obs)])

    def maximum(self) -> Observation:
        return self.at(len(self) - 1)

    def minimum(self) -> Observation:
        return self.at(0)

    def prefers(self, a: Observation, b: Observation) -> bool:
        """True when ``a`` is ranked strictly above ``b``."""
        return self.rank(a) > self.rank(b)

    def descending(self):
        """Yield ``(rank, observation, sort_key)`` from most preferred down, rank 1 at the top."""
        for r, k in enumerate(self.ranking[::-1]):
            yield r + 1, self.space[int(k)], float(self.keys[k])

    def serialize(self) -> str:
        return "".join(f"{r},{o.tail},{o.omega},{key!r}\n" for r, o, key in self.descending())


class PolicyKind(enum.Enum):
    HONEST = "honest"
    TAILMAX = "tailmax"
    VALUEMAX = "valuemax"
    ORDER = "order"


@dataclass(frozen=True)
class PolicySpec:
    kind: PolicyKind
    order: Optional[PolicyOrder] = None

    def __post_init__(self):
        if self.kind is PolicyKind.HONEST and self.order is not None:
            raise DomainError("the honest policy carries no order")
        if self.kind is PolicyKind.ORDER and self.order is None:
            raise DomainError("an ORDER spec needs a PolicyOrder")

    @classmethod
    def honest(cls) -> "PolicySpec":
        return cls(PolicyKind.HONEST)

    @classmethod
    def tailmax(cls) -> "PolicySpec":
        return cls(PolicyKind.TAILMAX)

    @classmethod
    def valuemax(cls) -> "PolicySpec":
        return cls(PolicyKind.VALUEMAX)

    @classmethod
    def from_order(cls, order: PolicyOrder) -> "PolicySpec":
        return cls(PolicyKind.ORDER, order)

    @property
    def name(self) -> str:
        return self.order.name if self.kind is PolicyKind.ORDER else self.kind.value

    def resolve(self, ell: int) -> Optional[PolicyOrder]:
        """The concrete order for ``ell``; None for the honest policy."""
        if self.kind is PolicyKind.HONEST:
            return None
        if self.kind is PolicyKind.TAILMAX:
            return tailmax_order(ell)
        if self.kind is PolicyKind.VALUEMAX:
            return valuemax_order(ell)
        if self.order.ell != ell:
            raise DomainError(f"order built for ell={self.order.ell}, params have ell={ell}")
        return self.order


def tailmax_order(ell: int) -> PolicyOrder:
    """Longest tail wins; ties go to the larger omega."""
    space = observation_space(ell)
    ranking = np.lexsort((space.omegas, space.tails))
    # reported key: tails dominate any omega difference
    keys = (space.omegas + (2 * ell + 2) * space.tails).astype(float)
    return PolicyOrder(space, ranking, keys, name="tailmax")


def valuemax_order(ell: int) -> PolicyOrder:
    """Greedy next-epoch reward omega + t; ties by tail, then omega."""
    space = observation_space(ell)
    ranking = np.lexsort((space.omegas, space.tails, space.rewards))
    return PolicyOrder(space, ranking, space.rewards.astype(float), name="valuemax")


def order_from_values(ell: int, v: Sequence[float], name: str = "order") -> PolicyOrder:
    """Sort observations by omega + t + v[t].

    Equal keys put the larger immediate reward omega + t on top, then the
    larger tail.  Tied keys have equal Bellman value, so the choice cannot
    change the gain; it only has to be deterministic.
    """
    v = np.asarray(v, dtype=float)
    if v.shape != (ell + 1,):
        raise DomainError(f"value vector needs {ell + 1} entries, got {v.shape}")
    space = observation_space(ell)
    keys = space.rewards + v[space.tails]
    ranking = np.lexsort((space.tails, space.rewards, keys))
    return PolicyOrder(space, ranking, keys, name=name)


def predecessor(order: PolicyOrder, obs: Observation) -> Optional[Observation]:
    """The observation ranked immediately below ``obs``, None at the bottom."""
    r = order.rank(obs)
    return None if r == 0 else order.at(r - 1)


def successor(order: PolicyOrder, obs: Observation) -> Optional[Observation]:
    r = order.rank(obs)
    return None if r == len(order) - 1 else order.at(r + 1)
