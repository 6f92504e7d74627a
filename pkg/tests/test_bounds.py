import numpy as np
import pytest

from randao.bounds import (
    bound_report,
    expected_height_bound,
    reset_time_bound,
    reset_time_residual,
    reward_gap_bound,
    stability_q,
    takeover_probability,
    tree_height_tail_bound,
)
from randao.epoch import ModelParams
from randao.errors import DomainError, InstabilityError

GRID = np.round(np.arange(0, 0.2401, 0.01), 2)


def P(a, ell=32):
    return ModelParams(float(a), ell)


def test_takeover():
    assert takeover_probability(P(0.25)) == 2.0**-32
    assert takeover_probability(P(0.0)) == 0.0
    assert takeover_probability(P(0.5)) == 1.0
    assert takeover_probability(P(0.7)) == 1.0


def test_stability_threshold():
    assert stability_q(P(0.24))[1]
    q, stable = stability_q(P(0.25))
    assert not stable and q > 1
    assert stability_q(P(0.0)) == (0.0, True)


def test_tree_height_tail():
    assert tree_height_tail_bound(P(0.1), 2) == 1.0
    q, _ = stability_q(P(0.1))
    assert tree_height_tail_bound(P(0.1), 3) == q < 1e-12
    vals = [tree_height_tail_bound(P(0.2), lam) for lam in range(2, 12)]
    assert all(b <= a for a, b in zip(vals, vals[1:]))
    with pytest.raises(DomainError):
        tree_height_tail_bound(P(0.1), 1)


def test_expected_height():
    assert expected_height_bound(P(1e-6)) == pytest.approx(2.0, abs=1e-12)
    # (4 * 0.2)^32 ~ 7.9e-4 dominates q here
    q = 0.4**32 + (1 - 0.2**32) * 0.8**32
    assert expected_height_bound(P(0.2)) == pytest.approx(1 + 1 / (1 - q), rel=1e-14)
    assert 2.0007 < expected_height_bound(P(0.2)) < 2.0009
    vals = [expected_height_bound(P(a)) for a in GRID]
    assert all(b >= a for a, b in zip(vals, vals[1:]))
    assert vals[-1] > vals[0]
    with pytest.raises(InstabilityError):
        expected_height_bound(P(0.25))


def test_monotone_in_alpha():
    for f in (lambda p: stability_q(p)[0], takeover_probability, lambda p: tree_height_tail_bound(p, 4)):
        vals = [f(P(a)) for a in GRID]
        assert all(b >= a for a, b in zip(vals, vals[1:]))


def test_reset_time_structure():
    x, X = reset_time_bound(P(0.2))
    assert np.all(x[:, 0] == 0)
    assert np.isfinite(X) and X > 0
    assert np.ptp(x[:, 32]) < 1e-12
    assert np.all(x >= -1e-12)
    assert X == x.max()
    assert reset_time_residual(P(0.2), x) < 1e-8


def test_reset_time_small_ell_by_hand():
    # ell = 2: unknowns x[t, 1] and x[t, 2]; check against the written equations directly
    p = P(0.1, 2)
    x, _ = reset_time_bound(p)
    from randao.evaluator import tailmax_transition_row

    rows = [tailmax_transition_row(p, t) for t in range(3)]
    h = expected_height_bound(p)
    for t in range(3):
        assert x[t, 2] == pytest.approx(1 + h + x[1, 1], abs=1e-12)
        assert x[t, 1] == pytest.approx(1 + rows[t] @ x[1], abs=1e-12)


@pytest.mark.parametrize("alpha,limit", [(0.05, 1e-29), (0.1, 1e-19), (0.2, 1e-10), (0.24, 1e-7)])
def test_reward_gap_magnitudes(alpha, limit):
    assert 0 < reward_gap_bound(P(alpha)) < limit


def test_reward_gap_small_everywhere_stable():
    assert reward_gap_bound(P(0.0)) == 0.0
    for a in GRID:
        assert reward_gap_bound(P(a)) < 1e-7
    with pytest.raises(InstabilityError):
        reward_gap_bound(P(0.25))


def test_report():
    rep = bound_report(P(0.2))
    assert rep.stable and rep.residual < 1e-8
    assert rep.error_bound == pytest.approx(32 * rep.reset_time_max * 0.4**32)
    rep = bound_report(P(0.25))
    assert not rep.stable and rep.error_bound is None and rep.reset_time is None
