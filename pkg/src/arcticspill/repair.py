"""Solve, check residuals and widen the station budget until the plan is clean.

The formulation already guarantees feasibility, so in practice the loop stops
after one pass; the evaluator is injectable so the adjustment path can be
exercised.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .core_model import ProblemInstance
from .formulation import Solution, formulate
from .solver.bnb import SolverOptions, solve_milp


@dataclass
class Residuals:
    inventory_overdraft: float = 0.0  # max over (i, k, r) of use beyond stock
    unmet_demand: float = 0.0  # max shortfall on a covered spill
    time_violation: float = 0.0  # max response time beyond tau_max, hours

    def clean(self, tol: float = 1e-6) -> bool:
        return max(self.inventory_overdraft, self.unmet_demand, self.time_violation) <= tol


def residuals(solution: Solution, instance: ProblemInstance) -> Residuals:
    inv = instance.inventory
    Z, A = solution.Z, solution.A
    net = Z.sum(axis=1) + A.sum(axis=1) - A.sum(axis=0)  # (I, K, R)
    over = float(np.max(net - inv[:, None, :], initial=0.0))
    covered = solution.covered
    got = Z.sum(axis=0)  # (O, K, R)
    short = np.where(covered[:, :, None], instance.demand - got, 0.0)
    late = np.where(covered, solution.T - instance.config.tau_max, 0.0)
    return Residuals(max(over, 0.0), float(np.max(short, initial=0.0)), float(np.max(late, initial=0.0)))


@dataclass
class RepairResult:
    solution: Solution
    instance: ProblemInstance
    iterations: int
    budgets: list[int] = field(default_factory=list)
    clean: bool = True


def repair_loop(instance: ProblemInstance, options: SolverOptions | None = None,
                evaluator: Callable[[Solution, ProblemInstance], Residuals] = residuals) -> RepairResult:
    inst = instance
    budgets = []
    while True:
        budgets.append(inst.config.n_max_stations)
        sol, _ = solve_milp(formulate(inst), options)
        if evaluator(sol, inst).clean():
            return RepairResult(sol, inst, len(budgets), budgets, True)
        if inst.config.n_max_stations >= inst.n_stations:
            warnings.warn("residual violations remain with every station allowed", RuntimeWarning, stacklevel=2)
            return RepairResult(sol, inst, len(budgets), budgets, False)
        inst = inst.with_n_max(inst.config.n_max_stations + 1)
