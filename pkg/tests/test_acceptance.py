"""End-to-end acceptance checks, one test per criterion.

Run alone with ``pytest tests/test_acceptance.py``; a PASS/FAIL line per
criterion is printed in the terminal summary.
"""
import subprocess
import sys
import time

import numpy as np
import pytest

from oracles import tailmax_pair_cdf
from randao import cli
from randao.bounds import bound_report, reward_gap_bound, stability_q
from randao.epoch import ModelParams
from randao.evaluator import maxpair_cdf_table
from randao.mdp import evaluate_policy, improvement_over_honest, policy_iteration
from randao.policy import PolicySpec, tailmax_order
from randao.simulator import simulate

GRID = [round(0.01 * k, 2) for k in range(1, 46)]

REFERENCE_PERCENT = {
    0.01: 1.00107, 0.05: 5.04834, 0.10: 10.18807, 0.15: 15.39960, 0.20: 20.67770,
    0.25: 26.02472, 0.30: 31.45164, 0.35: 36.97348, 0.40: 42.62435, 0.45: 48.49184,
}

REFERENCE_BIAS = [
    0.00, 0.90, 1.66, 2.30, 2.86, 3.35, 3.79, 4.19, 4.55, 4.89, 5.21,
    5.50, 5.78, 6.05, 6.30, 6.55, 6.78, 7.00, 7.22, 7.43, 7.63, 7.82,
    8.01, 8.19, 8.37, 8.54, 8.71, 8.87, 9.03, 9.19, 9.34, 9.49, 9.64,
]


@pytest.fixture
def criterion(request):
    def tag(n, title):
        request.node.user_properties.append(("criterion", (n, title)))

    def detail(text):
        request.node.user_properties.append(("detail", text))

    tag.detail = detail
    return tag


@pytest.fixture(scope="module")
def grid_results():
    """Every policy evaluated at every grid alpha, ell = 32."""
    out = {}
    for a in GRID:
        p = ModelParams(a, 32)
        out[a] = {
            "optimal": policy_iteration(p),
            "tailmax": evaluate_policy(p, PolicySpec.tailmax()),
            "valuemax": evaluate_policy(p, PolicySpec.valuemax()),
            "honest": evaluate_policy(p, PolicySpec.honest()),
        }
    return out


def test_criterion_01_optimal_fractions(criterion):
    criterion(1, "optimal fractions at ell=32 within 2e-5 pp")
    worst, slowest = 0.0, 0.0
    for a, ref in REFERENCE_PERCENT.items():
        start = time.perf_counter()
        res = policy_iteration(ModelParams(a, 32))
        slowest = max(slowest, time.perf_counter() - start)
        worst = max(worst, abs(100 * res.fraction - ref))
    criterion.detail(f"max err {worst:.2e} pp, slowest {slowest:.2f}s")
    assert worst <= 2e-5
    assert slowest < 10


def test_criterion_02_bias_vector(criterion, solved):
    criterion(2, "bias vector at alpha=0.2 within 0.005")
    bias = solved(0.2).bias
    err = np.max(np.abs(bias - np.array(REFERENCE_BIAS)))
    criterion.detail(f"max deviation {err:.4f}")
    assert len(bias) == 33
    assert err <= 0.005
    assert np.round(bias, 2).tolist() == REFERENCE_BIAS


def test_criterion_03_iteration_count(criterion, grid_results):
    criterion(3, "policy iteration under 10 steps on the grid")
    iters = [grid_results[a]["optimal"].iterations for a in GRID]
    criterion.detail(f"max {max(iters)} steps")
    assert max(iters) < 10


def test_criterion_04_improvement_at_quarter(criterion, solved):
    criterion(4, "improvement at alpha=0.25 is 4.09% +- 0.01pp")
    imp = 100 * improvement_over_honest(solved(0.25), ModelParams(0.25, 32))
    criterion.detail(f"{imp:.4f}%")
    assert abs(imp - 4.09) <= 0.01


def test_criterion_05_dominance_and_monotonicity(criterion, grid_results):
    criterion(5, "optimal dominates, tailmax beats honest, optimal monotone")
    for a in GRID:
        r = {k: v.fraction for k, v in grid_results[a].items()}
        assert r["optimal"] >= max(r["tailmax"], r["valuemax"], r["honest"]), a
        assert r["tailmax"] >= r["honest"], a
    opt = [grid_results[a]["optimal"].fraction for a in GRID]
    assert all(y >= x for x, y in zip(opt, opt[1:]))


@pytest.mark.slow
def test_criterion_06_monte_carlo_agreement(criterion, solved):
    criterion(6, "Monte Carlo within 3 SE at ell=8")
    worst_z, slowest = 0.0, 0.0
    for alpha in (0.1, 0.2, 0.3):
        p = ModelParams(alpha, 8)
        specs = [PolicySpec.honest(), PolicySpec.tailmax(), PolicySpec.valuemax(),
                 PolicySpec.from_order(solved(alpha, 8).order)]
        for k, spec in enumerate(specs):
            exact = evaluate_policy(p, spec).fraction
            start = time.perf_counter()
            est = simulate(p, spec, 10**6, seed=1000 + 10 * k + int(alpha * 10))
            slowest = max(slowest, time.perf_counter() - start)
            z = abs(est.mean_fraction - exact) / est.std_error
            worst_z = max(worst_z, z)
            assert z <= 3, (alpha, spec.name, est.mean_fraction, exact)
    criterion.detail(f"max |z| {worst_z:.2f}, slowest {slowest:.1f}s")
    assert slowest < 60


def test_criterion_07_tailmax_closed_form(criterion):
    criterion(7, "general CDF equals the tail-max closed form within 1e-10")
    worst = 0.0
    for ell in (8, 16, 32):
        order = tailmax_order(ell)
        for alpha in (0.1, 0.3):
            table = maxpair_cdf_table(ModelParams(alpha, ell), order)
            for k in range(len(order)):
                o = order.at(k)
                for t in range(ell + 1):
                    worst = max(worst, abs(table[k, t] - tailmax_pair_cdf(alpha, ell, t, o.tail, o.omega)))
    criterion.detail(f"max diff {worst:.1e}")
    assert worst < 1e-10


def test_criterion_08_linear_algebra_residuals(criterion, grid_results):
    criterion(8, "stationary, Bellman and row-sum residuals")
    st = be = rs = 0.0
    for a in GRID:
        for res in grid_results[a].values():
            st = max(st, res.stationary_residual())
            be = max(be, res.bellman_residual())
            rs = max(rs, float(np.max(np.abs(res.model.transition.sum(axis=1) - 1))))
    criterion.detail(f"stationary {st:.1e}, bellman {be:.1e}, rows {rs:.1e}")
    assert st < 1e-10 and be < 1e-9 and rs <= 1e-9


def test_criterion_09_takeover_bounds(criterion):
    criterion(9, "stability threshold, reward gap magnitudes, reset-time residual")
    assert stability_q(ModelParams(0.24, 32))[1]
    assert not stability_q(ModelParams(0.25, 32))[1]
    limits = {0.05: 1e-29, 0.1: 1e-19, 0.2: 1e-10, 0.24: 1e-7}
    gaps = {}
    for a, lim in limits.items():
        gaps[a] = reward_gap_bound(ModelParams(a, 32))
        assert gaps[a] < lim, (a, gaps[a])
        assert bound_report(ModelParams(a, 32)).residual < 1e-8
    criterion.detail(", ".join(f"{a}:{g:.1e}" for a, g in gaps.items()))


@pytest.mark.slow
def test_criterion_10_epoch_length_sweeps(criterion):
    criterion(10, "sweeps at ell 16/64/128 finish and beat honest")
    counts = []
    for ell, policies in ((16, cli.POLICIES), (64, ("optimal", "honest")), (128, ("optimal", "honest"))):
        cfg = cli.RunConfig("sweep", cli.parse_alpha("0.01:0.45:0.01"), ell=ell, policies=policies)
        rows = cli.run_sweep(cfg)
        assert len(rows) == 45 * len(policies)
        for r in rows:
            assert r["error"] == "", r
            assert r["provable"] == (ell <= 32)
        frac = {(r["alpha"], r["policy"]): r["fraction"] for r in rows}
        for a in cfg.alphas:
            assert frac[(a, "optimal")] >= frac[(a, "honest")], (ell, a)
        counts.append(len(rows))
    criterion.detail(f"rows {counts}")


def _invoke(*argv):
    return subprocess.run([sys.executable, "-m", "randao", *argv], capture_output=True, check=True).stdout


def test_criterion_11_determinism(criterion):
    criterion(11, "repeated solve and simulate are byte-identical")
    solve = ("solve", "--alpha", "0.2", "--ell", "32")
    sim = ("simulate", "--alpha", "0.2", "--ell", "8", "--policy", "tailmax", "--epochs", "1000000", "--seed", "7")
    for argv in (solve, sim, solve + ("--format", "json")):
        assert _invoke(*argv) == _invoke(*argv)
