import pytest

from arcticspill.evaluation import compute_voi
from arcticspill.formulation import formulate
from arcticspill.repair import Residuals, repair_loop, residuals
from arcticspill.reports import assignment_svg, k1_coverage_svg, pareto_svg, voi_csv
from arcticspill.solver.bnb import solve_milp
from arcticspill.sweep import SweepRun, pareto_frontier, normalize_runs
from arcticspill.core_model import Weights

from factories import random_instance


class TestRepair:
    def test_clean_instance_single_pass(self):
        inst = random_instance(1, n_max=1)
        rr = repair_loop(inst)
        assert rr.iterations == 1 and rr.clean and rr.budgets == [1]

    def test_residuals_of_solution_are_zero(self):
        inst = random_instance(2)
        sol, _ = solve_milp(formulate(inst))
        assert residuals(sol, inst).clean()

    def test_injected_fault_once(self):
        inst = random_instance(1, n_i=3, n_max=1)
        calls = []

        def faulty(sol, instance):
            calls.append(instance.config.n_max_stations)
            return Residuals(inventory_overdraft=1.0) if len(calls) == 1 else Residuals()

        rr = repair_loop(inst, evaluator=faulty)
        assert rr.budgets == [1, 2] and rr.clean
        assert rr.instance.config.n_max_stations == 2

    def test_budget_exhausted_warns(self):
        inst = random_instance(1, n_i=2, n_max=2)
        with pytest.warns(RuntimeWarning):
            rr = repair_loop(inst, evaluator=lambda s, i: Residuals(unmet_demand=3.0))
        assert not rr.clean and rr.iterations == 1

    def test_detects_overdraft(self):
        inst = random_instance(2)
        sol, _ = solve_milp(formulate(inst))
        sol.Z[0, 0, 0, 0] += inst.inventory[0, 0] + 5
        assert residuals(sol, inst).inventory_overdraft >= 5 - 1e-9


def _runs():
    rs = []
    for n, k1 in enumerate((0.2, 0.2, 0.6, 0.6)):
        rs.append(SweepRun(Weights.from_k1(k1, (0.2, 0.3, 0.5)), "Optimal", objective=0.1 * n,
                           coverage_value=float(n), cost_value=float(n % 3), stations=(0,)))
    normalize_runs(rs)
    return rs


class TestReports:
    def test_voi_csv(self):
        text = voi_csv(compute_voi(1.9855, 1.9855, 1.4659, 1.7855))
        assert text.splitlines()[0] == "metric,value,relative_percent"
        assert text.splitlines()[5].startswith("VSS,0.5196")

    def test_svgs_deterministic_and_wellformed(self):
        import xml.dom.minidom as md

        rs = _runs()
        front = pareto_frontier(rs)
        for fn in (lambda: k1_coverage_svg(rs), lambda: pareto_svg(rs, front)):
            a, b = fn(), fn()
            assert a == b
            md.parseString(a)

    def test_assignment_svg(self):
        inst = random_instance(3)
        sol, _ = solve_milp(formulate(inst))
        svg = assignment_svg(sol, inst, 0)
        assert svg == assignment_svg(sol, inst, 0)
        assert svg.count("<rect") == 1 + inst.n_stations

    def test_empty_sweep_svg(self):
        assert k1_coverage_svg([]).startswith("<svg")
        assert pareto_svg([], []).startswith("<svg")
