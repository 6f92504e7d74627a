"""Command-line front end.

    randao solve --alpha 0.2
    randao sweep --alpha 0.01:0.45:0.01 --format csv --output fig.csv
    randao simulate --alpha 0.2 --ell 8 --policy tailmax --epochs 1000000 --seed 7
    randao bounds --alpha 0:0.24:0.01
    randao policy-dump --alpha 0.2 --policy optimal
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional

from .bounds import bound_report
from .epoch import ModelParams
from .errors import (
    CapExceeded,
    DomainError,
    InstabilityError,
    NonConvergenceError,
    NumericalFailure,
    RandaoError,
    SolverError,
)
from .mdp import SolveResult, evaluate_policy, improvement_over_honest, policy_iteration
from .policy import PolicySpec
from .simulator import DEFAULT_TAIL_CAP, simulate

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_NONCONVERGENCE = 4
EXIT_IO = 5

POLICIES = ("optimal", "tailmax", "valuemax", "honest")
COMMANDS = ("solve", "evaluate", "sweep", "simulate", "bounds", "policy-dump")

log = logging.getLogger("randao")


class ConfigError(RandaoError):
    pass


@dataclass
class RunConfig:
    command: str
    alphas: list[float]
    ell: int = 32
    policies: tuple[str, ...] = ("optimal",)
    epochs: int = 1_000_000
    seed: int = 0
    format: str = "csv"
    output: Optional[str] = None
    cap_override: bool = False
    jobs: int = 1

    def __post_init__(self):
        if not self.alphas:
            raise ConfigError("empty alpha grid")
        for a in self.alphas:
            if not (0.0 <= a < 1.0):
                raise ConfigError(f"alpha {a!r} outside [0, 1)")
        if self.ell < 1:
            raise ConfigError("ell must be positive")
        for p in self.policies:
            if p not in POLICIES:
                raise ConfigError(f"unknown policy {p!r}; choose from {', '.join(POLICIES)}")
        if self.epochs < 1:
            raise ConfigError("epochs must be positive")
        if not (0 <= self.seed < 2**64):
            raise ConfigError("seed must be an unsigned 64-bit integer")

    @property
    def alpha(self) -> float:
        if len(self.alphas) != 1:
            raise ConfigError(f"{self.command} takes a single alpha, got a grid")
        return self.alphas[0]

    @property
    def policy(self) -> str:
        if len(self.policies) != 1:
            raise ConfigError(f"{self.command} takes a single policy")
        return self.policies[0]


def parse_alpha(text: str) -> list[float]:
    """``x`` or an inclusive grid ``start:stop:step``."""
    parts = text.split(":")
    try:
        nums = [float(p) for p in parts]
    except ValueError:
        raise ConfigError(f"cannot parse alpha {text!r}") from None
    if len(nums) == 1:
        return nums
    if len(nums) != 3:
        raise ConfigError("alpha grid must look like start:stop:step")
    start, stop, step = nums
    if step <= 0 or start > stop:
        raise ConfigError("alpha grid needs step > 0 and start <= stop")
    n = math.floor((stop - start) / step + 1e-9) + 1
    return [round(start + k * step, 12) for k in range(n)]


# ---------------------------------------------------------------- records


def _policy_spec(name: str, params: ModelParams) -> PolicySpec:
    if name == "optimal":
        return PolicySpec.from_order(policy_iteration(params).order)
    return {"honest": PolicySpec.honest, "tailmax": PolicySpec.tailmax, "valuemax": PolicySpec.valuemax}[name]()


def _improvement(res: SolveResult, params: ModelParams) -> Optional[float]:
    return improvement_over_honest(res, params) if params.alpha > 0 else None


def _solve_record(params: ModelParams, res: SolveResult) -> dict:
    return {
        "alpha": params.alpha,
        "ell": params.ell,
        "policy": res.policy,
        "fraction": res.fraction,
        "gain_per_epoch": res.gain,
        "improvement_over_honest": _improvement(res, params),
        "iterations": res.iterations,
        "provable": res.provable,
        "bias": [float(v) for v in res.bias],
    }


def _evaluate(params: ModelParams, name: str) -> SolveResult:
    if name == "optimal":
        return policy_iteration(params)
    return evaluate_policy(params, _policy_spec(name, params))


def _sweep_point(args) -> list[dict]:
    alpha, ell, policies = args
    params = ModelParams(alpha, ell)
    rows = []
    for name in policies:
        row = {"alpha": alpha, "ell": ell, "policy": name, "fraction": None,
               "improvement": None, "provable": params.provable, "error": ""}
        try:
            res = _evaluate(params, name)
            row["fraction"] = res.fraction
            row["improvement"] = _improvement(res, params)
        except RandaoError as exc:
            row["error"] = f"{type(exc).__name__}: {exc}"
        rows.append(row)
    return rows


# ---------------------------------------------------------------- commands


def run_solve(cfg: RunConfig) -> dict:
    params = ModelParams(cfg.alpha, cfg.ell)
    return _solve_record(params, policy_iteration(params))


def run_evaluate(cfg: RunConfig) -> list[dict]:
    rows = []
    for a in cfg.alphas:
        params = ModelParams(a, cfg.ell)
        for name in cfg.policies:
            rows.append(_solve_record(params, _evaluate(params, name)))
    return rows


def run_sweep(cfg: RunConfig) -> list[dict]:
    tasks = [(a, cfg.ell, cfg.policies) for a in sorted(cfg.alphas)]
    if cfg.jobs > 1:
        with ProcessPoolExecutor(cfg.jobs) as pool:
            chunks = list(pool.map(_sweep_point, tasks))
    else:
        chunks = [_sweep_point(t) for t in tasks]
    return [row for chunk in chunks for row in chunk]


def run_simulate(cfg: RunConfig) -> dict:
    params = ModelParams(cfg.alpha, cfg.ell)
    cap = max(cfg.ell, DEFAULT_TAIL_CAP) if cfg.cap_override else DEFAULT_TAIL_CAP
    if cfg.policy != "honest" and cfg.ell > cap:
        raise CapExceeded(f"ell={cfg.ell} exceeds the simulation cap {cap}; pass --cap-override")
    spec = _policy_spec(cfg.policy, params)
    est = simulate(params, spec, cfg.epochs, cfg.seed, cap=cap)
    return {
        "alpha": params.alpha,
        "ell": params.ell,
        "policy": cfg.policy,
        "epochs": est.epochs,
        "seed": est.seed,
        "mean_fraction": est.mean_fraction,
        "std_error": est.std_error,
        "batches": est.batches,
        "per_state_visits": [int(v) for v in est.per_state_visits],
    }


def run_bounds(cfg: RunConfig) -> list[dict]:
    rows = []
    for a in cfg.alphas:
        rep = bound_report(ModelParams(a, cfg.ell))
        rows.append({
            "alpha": rep.alpha,
            "ell": rep.ell,
            "q": rep.q,
            "stable": rep.stable,
            "takeover": rep.takeover,
            "expected_height_bound": rep.expected_height_bound,
            "reset_time_max": rep.reset_time_max,
            "error_bound": rep.error_bound,
            "error": "" if rep.stable else "InstabilityError: q >= 1",
        })
    return rows


def run_policy_dump(cfg: RunConfig) -> dict:
    params = ModelParams(cfg.alpha, cfg.ell)
    if cfg.policy == "honest":
        raise ConfigError("the honest policy is not an order and cannot be dumped")
    order = _policy_spec(cfg.policy, params).resolve(params.ell)
    rows = [{"rank": r, "tail": o.tail, "omega": o.omega, "sort_key": k} for r, o, k in order.descending()]
    return {"alpha": params.alpha, "ell": params.ell, "policy": cfg.policy, "rows": rows}


# ---------------------------------------------------------------- output


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _flatten(rec: dict) -> dict:
    out = {}
    for k, v in rec.items():
        if isinstance(v, list):
            for i, x in enumerate(v):
                out[f"{k}_{i}"] = x
        else:
            out[k] = v
    return out


def to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    if rows:
        flat = [_flatten(r) for r in rows]
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(flat[0].keys())
        for r in flat:
            w.writerow(_cell(v) for v in r.values())
    return buf.getvalue()


def to_json(obj) -> str:
    return json.dumps(obj, indent=1, allow_nan=False) + "\n"


def render(command: str, result, fmt: str) -> str:
    if fmt == "json":
        if isinstance(result, list):
            result = {"command": command, "rows": result}
        return to_json(result)
    if command == "policy-dump":
        return to_csv(result["rows"])
    return to_csv(result if isinstance(result, list) else [result])


RUNNERS = {
    "solve": run_solve,
    "evaluate": run_evaluate,
    "sweep": run_sweep,
    "simulate": run_simulate,
    "bounds": run_bounds,
    "policy-dump": run_policy_dump,
}

DEFAULT_POLICY = {
    "solve": "optimal",
    "evaluate": "tailmax",
    "sweep": ",".join(POLICIES),
    "simulate": "tailmax",
    "bounds": "optimal",
    "policy-dump": "optimal",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="randao", description="Optimal RANDAO manipulation solver")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--alpha", required=True, help="x or start:stop:step (inclusive)")
        p.add_argument("--ell", type=int, default=32)
        p.add_argument("--policy", default=None,
                       help="honest|tailmax|valuemax|optimal; sweep/evaluate take a comma list")
        p.add_argument("--epochs", type=int, default=1_000_000)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--output", default=None)
        p.add_argument("--cap-override", action="store_true",
                       help="let simulate run order policies with ell above the tail cap")
        p.add_argument("--jobs", type=int, default=1, help="worker processes for sweep")
    return parser


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    policy = ns.policy or DEFAULT_POLICY[ns.command]
    return RunConfig(
        command=ns.command,
        alphas=parse_alpha(ns.alpha),
        ell=ns.ell,
        policies=tuple(p.strip() for p in policy.split(",") if p.strip()),
        epochs=ns.epochs,
        seed=ns.seed,
        format=ns.format,
        output=ns.output,
        cap_override=ns.cap_override,
        jobs=ns.jobs,
    )


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if ns.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = config_from_args(ns)
        text = render(cfg.command, RUNNERS[cfg.command](cfg), cfg.format)
    except (ConfigError, DomainError, CapExceeded) as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    except NonConvergenceError as exc:
        log.error("%s", exc)
        return EXIT_NONCONVERGENCE
    except (NumericalFailure, SolverError, InstabilityError) as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_NUMERICAL
    try:
        if cfg.output:
            with open(cfg.output, "w", newline="") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
    except OSError as exc:
        log.error("cannot write output: %s", exc)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
