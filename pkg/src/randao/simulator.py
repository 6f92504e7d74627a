"""Monte Carlo play of the refined manipulation game.

Each epoch the adversary holding tail ``t`` draws ``2**t`` (count, tail)
samples, ``comb(t, i)`` of them charged ``i`` withheld slots, keeps one
according to the policy, and collects ``omega + tail`` slots out of ``ell``.

Epochs are split into independent batches (one chain each) with their own
Philox stream spawned from the run seed.  Chains are advanced in lockstep
with numpy, but every chain only ever reads its own stream, so results do
not depend on how batches are scheduled.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .epoch import ModelParams, Observation, tail_pmf_vector
from .errors import CapExceeded, DomainError
from .policy import PolicyKind, PolicySpec

DEFAULT_TAIL_CAP = 16
DEFAULT_BATCHES = 100
_MIN_POOL = 4096


@dataclass(frozen=True)
class SampleBatch:
    """Candidates drawn from tail ``t``; parallel arrays in draw order."""

    t: int
    withheld: np.ndarray
    count: np.ndarray
    tail: np.ndarray

    @property
    def omega(self) -> np.ndarray:
        return self.count - self.withheld

    def __len__(self) -> int:
        return len(self.withheld)

    def observations(self) -> list[Observation]:
        return [Observation(int(w), int(t)) for w, t in zip(self.omega, self.tail)]


@dataclass
class MonteCarloEstimate:
    mean_fraction: float
    std_error: float
    epochs: int
    seed: int
    per_state_visits: np.ndarray = field(repr=False)
    transition_counts: np.ndarray = field(repr=False)
    reward_sums: np.ndarray = field(repr=False)
    batches: int = DEFAULT_BATCHES

    def transition_frequencies(self) -> np.ndarray:
        visits = np.maximum(self.per_state_visits, 1)
        return self.transition_counts / visits[:, None]


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def withheld_pattern(t: int) -> np.ndarray:
    """Withheld-slot label of each candidate: one 0, t ones, comb(t, 2) twos..."""
    return np.repeat(np.arange(t + 1), [math.comb(t, i) for i in range(t + 1)])


def draw_joint(params: ModelParams, rng: np.random.Generator, n: int):
    """``n`` iid (count, tail) draws: inverse-CDF tail, then coin-flip count.

    Each draw consumes one row of ``ell`` uniforms, so a stream yields the
    same sample sequence however it is chunked.
    """
    ell, a = params.ell, params.alpha
    cdf = np.cumsum(tail_pmf_vector(params))
    cdf[-1] = 1.0
    u = rng.random((n, ell))
    tails = np.minimum(np.searchsorted(cdf, u[:, 0], side="right"), ell).astype(np.int64)
    free = np.maximum(ell - tails - 1, 0)
    flips = (u[:, 1:] < a) & (np.arange(ell - 1)[None, :] < free[:, None])
    return flips.sum(axis=1).astype(np.int64), tails


def sample_joint(params: ModelParams, rng: np.random.Generator) -> tuple[int, int]:
    c, t = draw_joint(params, rng, 1)
    return int(c[0]), int(t[0])


def _check_cap(t: int, cap: int) -> None:
    if t > cap:
        raise CapExceeded(f"tail {t} needs 2**{t} candidates; cap is {cap}")


def draw_batch(params: ModelParams, t: int, rng: np.random.Generator, cap: int = DEFAULT_TAIL_CAP) -> SampleBatch:
    if not (0 <= t <= params.ell):
        raise DomainError(f"tail {t} outside [0, {params.ell}]")
    _check_cap(t, cap)
    counts, tails = draw_joint(params, rng, 2**t)
    return SampleBatch(t, withheld_pattern(t), counts, tails)


def _rank_table(params: ModelParams, spec: PolicySpec) -> np.ndarray | None:
    """``table[tail, omega + ell]`` -> rank under the policy, or None for honest."""
    order = spec.resolve(params.ell)
    if order is None:
        return None
    space = order.space
    table = np.full(space.lookup.shape, -1, dtype=np.int64)
    table[space.tails, space.omegas + params.ell] = order.rank_index
    return table


def select(params: ModelParams, spec: PolicySpec, batch: SampleBatch) -> Observation:
    """The candidate the policy keeps; ties resolve to the first drawn."""
    if spec.kind is PolicyKind.HONEST:
        return Observation(int(batch.count[0]), int(batch.tail[0]))
    ranks = _rank_table(params, spec)[batch.tail, batch.omega + params.ell]
    k = int(np.argmax(ranks))
    return Observation(int(batch.omega[k]), int(batch.tail[k]))


def sample_choices(
    params: ModelParams,
    spec: PolicySpec,
    t: int,
    n: int,
    rng: np.random.Generator,
    cap: int = DEFAULT_TAIL_CAP,
):
    """Chosen ``(omega, tail)`` for ``n`` independent batches drawn from state ``t``."""
    _check_cap(t, cap)
    size = 2**t
    counts, tails = draw_joint(params, rng, n * size)
    counts = counts.reshape(n, size)
    tails = tails.reshape(n, size)
    omegas = counts - withheld_pattern(t)[None, :]
    table = _rank_table(params, spec)
    if table is None:
        return omegas[:, 0], tails[:, 0]
    k = np.argmax(table[tails, omegas + params.ell], axis=1)
    rows = np.arange(n)
    return omegas[rows, k], tails[rows, k]


class _Pools:
    """Per-batch buffers of pre-drawn (count, tail) samples, one row per batch.

    Rows are refilled (and the buffer widened) on demand; because draws are
    chunking-invariant, a batch sees the same samples in any schedule.
    """

    def __init__(self, params: ModelParams, streams):
        self.params, self.streams = params, streams
        self.width = 0
        B = len(streams)
        self.count = np.empty((B, 0), dtype=np.int16)
        self.tail = np.empty((B, 0), dtype=np.int16)
        self.ptr = np.zeros(B, dtype=np.int64)
        self._resize(_MIN_POOL)

    def _resize(self, width: int) -> None:
        B = len(self.streams)
        count = np.empty((B, width), dtype=np.int16)
        tail = np.empty((B, width), dtype=np.int16)
        for b in range(B):
            self._refill_row(b, count, tail)
        self.count, self.tail, self.width = count, tail, width
        self.ptr[:] = 0

    def _refill_row(self, b, count, tail) -> None:
        kept = self.width - self.ptr[b]
        count[b, :kept] = self.count[b, self.ptr[b]:]
        tail[b, :kept] = self.tail[b, self.ptr[b]:]
        count[b, kept:], tail[b, kept:] = draw_joint(self.params, self.streams[b], count.shape[1] - kept)

    def take(self, rows: np.ndarray, need: np.ndarray):
        """Consume ``need[j]`` samples from row ``rows[j]``; returns flat arrays."""
        if need.max() > self.width:
            self._resize(max(2 * self.width, 2 * int(need.max())))
        for j in np.flatnonzero(self.ptr[rows] + need > self.width):
            b = rows[j]
            self._refill_row(b, self.count, self.tail)
            self.ptr[b] = 0
        seg = np.cumsum(need) - need
        owner = np.repeat(np.arange(len(rows)), need)
        offset = np.arange(int(need.sum())) - seg[owner]
        r = rows[owner]
        col = self.ptr[r] + offset
        self.ptr[rows] += need
        return self.count[r, col].astype(np.int64), self.tail[r, col].astype(np.int64), seg, owner, offset


def simulate(
    params: ModelParams,
    spec: PolicySpec,
    epochs: int,
    seed: int,
    cap: int = DEFAULT_TAIL_CAP,
    batches: int = DEFAULT_BATCHES,
) -> MonteCarloEstimate:
    """Long-run slot fraction of ``spec`` with a batch-means standard error."""
    if epochs < 1:
        raise DomainError("epochs must be positive")
    ell = params.ell
    if spec.kind is not PolicyKind.HONEST and ell > cap:
        raise CapExceeded(f"ell={ell} exceeds the simulation tail cap {cap}")
    honest = spec.kind is PolicyKind.HONEST
    B = min(batches, epochs)
    quota = np.full(B, epochs // B, dtype=np.int64)
    quota[: epochs % B] += 1

    streams = [np.random.Generator(np.random.Philox(s)) for s in np.random.SeedSequence(seed).spawn(B)]
    state = np.empty(B, dtype=np.int64)
    for b, g in enumerate(streams):
        state[b] = sample_joint(params, g)[1]
    table = _rank_table(params, spec)
    order = spec.resolve(ell)
    # honest play keeps the single no-withholding candidate, so it draws only that one
    max_t = 0 if honest else ell
    pools = _Pools(params, streams)
    pattern = np.zeros((max_t + 1, 2**max_t), dtype=np.int64)
    for t in range(max_t + 1):
        pattern[t, : 2**t] = withheld_pattern(t)

    rewards = np.zeros(B, dtype=np.int64)
    visits = np.zeros(ell + 1, dtype=np.int64)
    trans = np.zeros((ell + 1, ell + 1), dtype=np.int64)
    rsum = np.zeros(ell + 1, dtype=np.int64)

    for step in range(int(quota.max())):
        active = np.flatnonzero(quota > step)
        t_now = state[active]
        need = np.ones_like(t_now) if honest else 2**t_now
        count, tail, seg, owner, offset = pools.take(active, need)
        omega = count if honest else count - pattern[t_now[owner], offset]
        if honest:
            ch_omega, ch_tail = omega, tail
        else:
            best = np.maximum.reduceat(table[tail, omega + ell], seg)
            picked = order.ranking[best]
            ch_omega, ch_tail = order.space.omegas[picked], order.space.tails[picked]
        r = ch_omega + ch_tail
        rewards[active] += r
        np.add.at(visits, t_now, 1)
        np.add.at(trans, (t_now, ch_tail), 1)
        np.add.at(rsum, t_now, r)
        state[active] = ch_tail

    per_batch = rewards / (ell * quota)
    mean = float(rewards.sum() / (ell * epochs))
    se = float(per_batch.std(ddof=1) / math.sqrt(B)) if B > 1 else 0.0
    return MonteCarloEstimate(mean, se, epochs, seed, visits, trans, rsum, B)
