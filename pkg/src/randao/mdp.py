"""Average-reward machinery and policy iteration over order policies."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .epoch import ModelParams, honest_fraction
from .errors import DomainError, NonConvergenceError, SolverError
from .evaluator import MarkovModel, honest_model, transition_and_reward
from .policy import PolicyKind, PolicyOrder, PolicySpec, order_from_values

log = logging.getLogger(__name__)

STATIONARY_TOL = 1e-10
BELLMAN_TOL = 1e-9
MODEL_TOL = 1e-12
GAIN_TOL = 1e-13


@dataclass
class SolveResult:
    gain: float
    fraction: float
    bias: np.ndarray = field(repr=False)
    stationary: np.ndarray = field(repr=False)
    iterations: int = 0
    order: Optional[PolicyOrder] = field(default=None, repr=False)
    model: Optional[MarkovModel] = field(default=None, repr=False)
    policy: str = ""
    provable: bool = True

    def bellman_residual(self) -> float:
        P, R = self.model.transition, self.model.reward
        return float(np.max(np.abs(self.bias + self.gain - R - P @ self.bias)))

    def stationary_residual(self) -> float:
        P = self.model.transition
        return float(np.max(np.abs(self.stationary @ P - self.stationary)))


def stationary_distribution(P: np.ndarray) -> np.ndarray:
    """Solve sigma P = sigma with sum(sigma) = 1 as one dense system.

    The last balance equation is redundant for a unichain and is replaced by
    the normalisation.
    """
    P = np.asarray(P, dtype=float)
    n = P.shape[0]
    if P.shape != (n, n):
        raise SolverError(f"transition matrix must be square, got {P.shape}")
    if np.any(P < 0) or np.max(np.abs(P.sum(axis=1) - 1)) > 1e-9:
        raise SolverError("transition matrix is not row-stochastic")
    A = P.T - np.eye(n)
    A[-1, :] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    try:
        sigma = np.linalg.solve(A, b)
    except np.linalg.LinAlgError as exc:
        raise SolverError(f"stationary system is singular: {exc}") from exc
    if not np.all(np.isfinite(sigma)) or sigma.min() < -1e-9:
        raise SolverError("chain has no unique stationary distribution")
    sigma = np.maximum(sigma, 0.0)
    sigma /= sigma.sum()
    if np.max(np.abs(sigma @ P - sigma)) > 1e-8:
        raise SolverError("stationary solve did not converge (chain not ergodic?)")
    return sigma


def gain_bias(model: MarkovModel, pivot: int = 0):
    """Gain from the stationary law and bias from the evaluation equations.

    Unknowns are the gain and the bias vector; one extra row pins
    ``bias[pivot] = 0``.  Returns ``(gain, bias, stationary)``.
    """
    P, R = model.transition, model.reward
    n = len(R)
    sigma = stationary_distribution(P)
    gain = float(sigma @ R)
    M = np.zeros((n + 1, n + 1))
    M[:n, 0] = 1.0
    M[:n, 1:] = np.eye(n) - P
    M[n, 1 + pivot] = 1.0
    rhs = np.append(R, 0.0)
    try:
        sol = np.linalg.solve(M, rhs)
    except np.linalg.LinAlgError as exc:
        raise SolverError(f"gain/bias system is singular: {exc}") from exc
    bias = sol[1:] + 0.0  # no negative zeros in output
    bias[pivot] = 0.0
    if abs(sol[0] - gain) > 1e-9:
        raise SolverError(f"gain mismatch: linear solve {sol[0]!r} vs stationary {gain!r}")
    return gain, bias, sigma


def _result(params, model, policy, iterations=0, order=None, fraction=None) -> SolveResult:
    gain, bias, sigma = gain_bias(model)
    return SolveResult(
        gain=gain,
        fraction=gain / params.ell if fraction is None else fraction,
        bias=bias,
        stationary=sigma,
        iterations=iterations,
        order=order,
        model=model,
        policy=policy,
        provable=params.provable,
    )


def evaluate_policy(params: ModelParams, spec: PolicySpec) -> SolveResult:
    if spec.kind is PolicyKind.HONEST:
        res = _result(params, honest_model(params), "honest", fraction=honest_fraction(params))
        res.gain = params.alpha * params.ell
        return res
    order = spec.resolve(params.ell)
    return _result(params, transition_and_reward(params, order), spec.name, order=order)


def policy_iteration(
    params: ModelParams,
    initial: PolicySpec | None = None,
    max_iter: int = 100,
) -> SolveResult:
    """Howard policy iteration, re-ranking observations by omega + t + v[t].

    Stops once the improved order induces the same (P, R) as the current one,
    or the gain no longer rises by more than 1e-13.  ``iterations`` counts
    improvement steps, including the final one that changed nothing.
    """
    initial = PolicySpec.valuemax() if initial is None else initial
    if initial.kind is PolicyKind.HONEST:
        raise DomainError("policy iteration needs an order-based starting policy")
    order = initial.resolve(params.ell)
    model = transition_and_reward(params, order)
    gain, bias, sigma = gain_bias(model)
    for step in range(1, max_iter + 1):
        new_order = order_from_values(params.ell, bias, name="optimal")
        new_model = transition_and_reward(params, new_order)
        if new_model.close_to(model, MODEL_TOL):
            # same induced chain: report the value-induced order
            order = new_order
            break
        new_gain, new_bias, new_sigma = gain_bias(new_model)
        log.debug("alpha=%g step %d gain %.15g -> %.15g", params.alpha, step, gain, new_gain)
        if new_gain <= gain + GAIN_TOL:
            break
        order, model, gain, bias, sigma = new_order, new_model, new_gain, new_bias, new_sigma
    else:
        raise NonConvergenceError(f"no convergence after {max_iter} improvement steps")
    return SolveResult(
        gain=gain,
        fraction=gain / params.ell,
        bias=bias,
        stationary=sigma,
        iterations=step,
        order=order,
        model=model,
        policy="optimal",
        provable=params.provable,
    )


def improvement_over_honest(result: SolveResult, params: ModelParams) -> float:
    """Relative gain over honest play, fraction / alpha - 1."""
    if params.alpha <= 0:
        raise DomainError("improvement over honest is undefined at alpha = 0")
    return result.fraction / honest_fraction(params) - 1.0
