"""Value of information: recourse problem, wait-and-see, expected-value problem.

All sub-instances (single scenarios, the mean-value scenario) inherit the
parent's normalization so objective values stay on one scale.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .core_model import ProblemInstance, Scenario, Weights
from .errors import OrderingViolation
from .formulation import MilpProblem, Solution, VarKey, formulate
from .solver.bnb import SolverOptions, solve_milp

ORDER_TOL = 1e-6


def _solve(instance: ProblemInstance, weights: Weights | None, options: SolverOptions | None,
           fix_x: np.ndarray | None = None) -> Solution:
    problem = formulate(instance, weights)
    if fix_x is not None:
        problem = _fix_first_stage(problem, fix_x)
    sol, _ = solve_milp(problem, options)
    return sol


def _fix_first_stage(problem: MilpProblem, x: np.ndarray) -> MilpProblem:
    lb, ub = problem.lb.copy(), problem.ub.copy()
    for i, v in enumerate(np.asarray(x, dtype=float)):
        j = problem.index[VarKey("X", (i,))]
        lb[j] = ub[j] = round(v)
    return problem.with_bounds(lb, ub)


def solve_rp(instance: ProblemInstance, weights: Weights | None = None,
             options: SolverOptions | None = None) -> Solution:
    """The full stochastic model over all scenarios."""
    return _solve(instance, weights, options)


@dataclass
class WaitAndSee:
    ws: list[float]
    probabilities: list[float]
    solutions: list[Solution] = field(repr=False, default_factory=list)

    @property
    def ews(self) -> float:
        return math.fsum(p * v for p, v in zip(self.probabilities, self.ws))


def solve_wait_and_see(instance: ProblemInstance, weights: Weights | None = None,
                       options: SolverOptions | None = None) -> WaitAndSee:
    sols = [_solve(instance.single_scenario(k), weights, options) for k in range(instance.n_scenarios)]
    return WaitAndSee([s.objective for s in sols], instance.probabilities.tolist(), sols)


def mean_scenario(instance: ProblemInstance) -> Scenario:
    """Probability-weighted means of volume, ESI and demand (demand stays fractional)."""
    rho = instance.probabilities
    vol = instance.volumes @ rho
    esi = instance.esi @ rho
    dem = np.einsum("okr,k->or", instance.demand, rho)
    return Scenario(0, 1.0, vol, esi, dem)


def solve_expected_value_problem(instance: ProblemInstance, weights: Weights | None = None,
                                 options: SolverOptions | None = None) -> tuple[Solution, ProblemInstance]:
    mean_inst = instance.with_scenarios([mean_scenario(instance)])
    return _solve(mean_inst, weights, options), mean_inst


@dataclass
class EevResult:
    values: list[float]
    probabilities: list[float]
    solutions: list[Solution] = field(repr=False, default_factory=list)

    @property
    def eev(self) -> float:
        return math.fsum(p * v for p, v in zip(self.probabilities, self.values))


def evaluate_eev(instance: ProblemInstance, evp_solution: Solution, weights: Weights | None = None,
                 options: SolverOptions | None = None) -> EevResult:
    """Re-solve every scenario's recourse with the stations fixed to ``evp_solution.X``.

    Spills the fixed stations cannot serve in time simply stay uncovered.
    """
    x = np.asarray(evp_solution.X, dtype=float)
    sols = [_solve(instance.single_scenario(k), weights, options, fix_x=x) for k in range(instance.n_scenarios)]
    return EevResult([s.objective for s in sols], instance.probabilities.tolist(), sols)


@dataclass
class ScenarioBreakdown:
    scenario_id: int
    probability: float
    ws_value: float
    evp_eval_value: float


@dataclass
class VoiReport:
    rp: float
    ews: float
    evp: float
    eev: float
    per_scenario: list[ScenarioBreakdown] = field(default_factory=list)

    @property
    def vss(self) -> float:
        return self.rp - self.eev

    @property
    def evpi(self) -> float:
        return self.ews - self.rp

    @property
    def relative(self) -> dict[str, float]:
        def pct(v: float, base: float) -> float:
            return 100.0 * v / base if base != 0 else math.nan
        return {
            "RP": pct(self.rp, self.rp),
            "EWS": pct(self.ews, self.rp),
            "EVP": pct(self.evp, self.rp),
            "EEV": pct(self.eev, self.rp),
            "VSS": pct(self.vss, self.eev),
            "EVPI": pct(self.evpi, self.rp),
        }

    def rows(self) -> list[tuple[str, float, float]]:
        rel = self.relative
        vals = {"RP": self.rp, "EWS": self.ews, "EVP": self.evp, "EEV": self.eev, "VSS": self.vss, "EVPI": self.evpi}
        return [(k, vals[k], rel[k]) for k in ("RP", "EWS", "EVP", "EEV", "VSS", "EVPI")]

    def to_dict(self) -> dict:
        def clean(v):
            return None if isinstance(v, float) and not math.isfinite(v) else v
        return {
            "metrics": {k: v for k, v, _ in self.rows()},
            "relative_percent": {k: clean(p) for k, _, p in self.rows()},
            "per_scenario": [b.__dict__ for b in self.per_scenario],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n"

    def to_text(self) -> str:
        labels = {"RP": "RP (Recourse Problem)", "EWS": "EWS (Perfect Information)",
                  "EVP": "EVP (Expected Value Problem)", "EEV": "EEV (Expected value of EVP solution)",
                  "VSS": "VSS (RP - EEV)", "EVPI": "EVPI (EWS - RP)"}
        lines = [f"{'Metric':<40}{'Value':>10}{'Relative (%)':>15}", "-" * 65]
        for k, v, p in self.rows():
            rel = f"{p:.2f}" if math.isfinite(p) else "n/a"
            lines.append(f"{labels[k]:<40}{v:>10.4f}{rel:>15}")
        if self.per_scenario:
            lines += ["", f"{'Scenario':<10}{'Prob.':>8}{'WS':>10}{'EVP eval':>10}", "-" * 38]
            for b in self.per_scenario:
                lines.append(f"{b.scenario_id:<10}{b.probability:>8.4f}{b.ws_value:>10.4f}{b.evp_eval_value:>10.4f}")
        return "\n".join(lines) + "\n"


def compute_voi(rp: float, ews: float, eev: float, evp: float,
                per_scenario: list[ScenarioBreakdown] | None = None, tol: float = ORDER_TOL) -> VoiReport:
    vals = (rp, ews, eev, evp)
    if not all(math.isfinite(v) for v in vals):
        raise ValueError("value-of-information inputs must be finite")
    if ews < rp - tol:
        raise OrderingViolation(f"EWS {ews} is below RP {rp}")
    if rp < eev - tol:
        raise OrderingViolation(f"RP {rp} is below EEV {eev}")
    return VoiReport(rp=rp, ews=ews, evp=evp, eev=eev, per_scenario=list(per_scenario or []))


@dataclass
class Evaluation:
    report: VoiReport
    rp_solution: Solution
    evp_solution: Solution
    wait_and_see: WaitAndSee
    eev: EevResult


def evaluate(instance: ProblemInstance, weights: Weights | None = None,
             options: SolverOptions | None = None) -> Evaluation:
    """Run the full protocol and assemble the report."""
    rp = solve_rp(instance, weights, options)
    ws = solve_wait_and_see(instance, weights, options)
    evp, _ = solve_expected_value_problem(instance, weights, options)
    ev = evaluate_eev(instance, evp, weights, options)
    per = [ScenarioBreakdown(sc.id, sc.probability, w, e)
           for sc, w, e in zip(instance.scenarios, ws.ws, ev.values)]
    report = compute_voi(rp.objective, ws.ews, ev.eev, evp.objective, per)
    return Evaluation(report, rp, evp, ws, ev)
