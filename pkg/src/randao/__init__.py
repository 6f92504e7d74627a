"""Optimal RANDAO manipulation: exact solver, evaluator, simulator and bounds."""
from .epoch import ModelParams, Observation, joint_pmf, observation_space
from .mdp import SolveResult, evaluate_policy, improvement_over_honest, policy_iteration
from .policy import PolicySpec, order_from_values, tailmax_order, valuemax_order

__all__ = [
    "ModelParams",
    "Observation",
    "PolicySpec",
    "SolveResult",
    "evaluate_policy",
    "improvement_over_honest",
    "joint_pmf",
    "observation_space",
    "order_from_values",
    "policy_iteration",
    "tailmax_order",
    "valuemax_order",
]
