import io

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import Bounds, LinearConstraint, milp

from arcticspill.formulation import (GE, LE, VarKey, check_invariants, coverage_stats, decode, formulate,
                                     read_mps, write_mps)
from arcticspill.errors import IntegralityError, ObjectiveMismatch
from arcticspill.solver.bnb import solve_milp

from factories import one_by_one, random_instance, zero_spill_instance


def highs_milp(problem):
    """Solve with scipy's HiGHS MILP as an external reference."""
    lo = np.where(problem.sense == LE, -np.inf, problem.rhs)
    hi = np.where(problem.sense == GE, np.inf, problem.rhs)
    res = milp(-problem.c, constraints=LinearConstraint(problem.A, lo, hi),
               integrality=problem.is_int.astype(int), bounds=Bounds(problem.lb, problem.ub),
               options={"mip_rel_gap": 1e-9})
    assert res.success
    return -res.fun, res.x


class TestColumnCounts:
    def test_bundled(self, bundled):
        p = formulate(bundled)
        n_pairs = len(bundled.pairs)
        assert n_pairs == 30
        assert p.count("X") == 4
        assert p.count("Y") == n_pairs * 5
        assert p.count("Z") == n_pairs * 5 * 3
        assert p.count("A") == 4 * 3 * 5 * 3
        assert p.count("T") == 17 * 5
        assert p.n_cols == 4 + n_pairs * 5 * 4 + 180 + 85

    def test_objective_coefficients(self, bundled):
        p = formulate(bundled)
        w = bundled.weights
        cfg = bundled.config
        j = p.index[VarKey("X", (2,))]
        assert p.c[j] == pytest.approx(-w.k2 * 11.25 / cfg.cost_scale)
        j = p.index[VarKey("T", (3, 1))]
        assert p.c[j] == pytest.approx(-w.k1 * bundled.probabilities[1] * w.omega3 / cfg.tau_max)
        np.testing.assert_allclose(p.c, w.k1 * p.c_cov - w.k2 * p.c_cost)


class TestZeroSpill:
    def test_only_x_and_budget(self):
        p = formulate(zero_spill_instance())
        assert p.n_cols == 2 and p.count("X") == 2
        assert p.row_names == ["budget"]

    def test_optimum_opens_nothing(self):
        sol, _ = solve_milp(formulate(zero_spill_instance()))
        assert sol.objective == 0.0
        assert sol.selected_stations == []

    def test_decode_all_zero(self):
        p = formulate(zero_spill_instance())
        sol = decode(p, np.zeros(p.n_cols))
        assert sol.objective == 0.0 and sol.selected_stations == []


class TestOneByOne:
    def test_closed_form(self):
        inst = one_by_one()
        sol, _ = solve_milp(formulate(inst))
        w = inst.weights
        lead = inst.derived.travel_time[0, 0] + inst.derived.prep_time[0, 0, 0]
        # single population: both normalized terms are 1 by the degenerate-range rule
        expected = w.omega1 * 1.0 + w.omega2 * 1.0 - w.omega3 * lead / inst.config.tau_max
        assert sol.objective == pytest.approx(expected, abs=1e-9)
        assert sol.Y[0, 0, 0] == 1 and sol.T[0, 0] == pytest.approx(lead)
        np.testing.assert_allclose(sol.Z[0, 0, 0], [4.0])

    def test_short_inventory_leaves_uncovered(self):
        sol, _ = solve_milp(formulate(one_by_one(inventory=(3.0,), demand=(4.0,))))
        assert sol.objective == 0.0 and sol.Y.sum() == 0


class TestDecode:
    def test_bundled_selection(self, bundled):
        p = formulate(bundled)
        x = np.zeros(p.n_cols)
        for i in (2, 3):
            x[p.index[VarKey("X", (i,))]] = 1.0
        sol = decode(p, x)
        assert [i + 1 for i in sol.selected_stations] == [3, 4]
        assert sol.fixed_cost(bundled) == pytest.approx(18.75)

    def test_fractional_binary(self):
        p = formulate(one_by_one())
        x = np.zeros(p.n_cols)
        x[p.index[VarKey("Y", (0, 0, 0))]] = 0.4
        with pytest.raises(IntegralityError):
            decode(p, x)

    def test_objective_mismatch(self):
        p = formulate(one_by_one())
        with pytest.raises(ObjectiveMismatch):
            decode(p, np.zeros(p.n_cols), objective=1.0)

    def test_rounds_within_tolerance(self):
        p = formulate(one_by_one())
        x = np.zeros(p.n_cols)
        x[p.index[VarKey("X", (0,))]] = 1 - 5e-7
        assert decode(p, x).X[0] == 1.0


class TestCoverageStats:
    def test_published_rate_arithmetic(self):
        assert round(100 * 30 / 85, 1) == 35.3

    def test_nothing_covered(self):
        inst = one_by_one()
        p = formulate(inst)
        cs = coverage_stats(decode(p, np.zeros(p.n_cols)), inst)
        assert cs.coverage_rate == 0 and cs.covered_pairs == 0
        assert np.all(cs.utilization == 0)

    @pytest.mark.parametrize("seed", range(5))
    def test_brute_force_recount(self, seed):
        inst = random_instance(seed, 2, 2, 2, 2)
        sol, _ = solve_milp(formulate(inst))
        cs = coverage_stats(sol, inst)
        counts = [sum(int(round(sol.Y[i, o, k])) for i in range(2) for o in range(2)) for k in range(2)]
        assert cs.covered_per_scenario == counts
        assert cs.coverage_rate == pytest.approx(sum(counts) / 4)
        for i in range(2):
            for r in range(2):
                if inst.inventory[i, r] > 0:
                    peak = max((sol.Z[i, :, k, r].sum() + sol.A[i, :, k, r].sum()) / inst.inventory[i, r]
                               for k in range(2))
                    assert cs.utilization[i, r] == pytest.approx(peak)


class TestInvariants:
    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 10_000))
    def test_solutions_satisfy_invariants(self, seed):
        inst = random_instance(seed, 3, 3, 2, 2)
        sol, _ = solve_milp(formulate(inst))
        assert check_invariants(sol, inst) == []

    def test_detects_phantom(self):
        inst = one_by_one()
        sol, _ = solve_milp(formulate(inst))
        sol.X[:] = 0
        assert any("phantom" in m for m in check_invariants(sol, inst))


class TestMps:
    @pytest.mark.parametrize("seed", range(3))
    def test_round_trip(self, seed):
        p = formulate(random_instance(seed))
        q = read_mps(write_mps(p))
        assert q.n_cols == p.n_cols and q.n_rows == p.n_rows
        np.testing.assert_allclose(q.c, p.c, rtol=1e-5, atol=1e-12)
        np.testing.assert_allclose(q.A.toarray(), p.A.toarray(), rtol=1e-5)
        np.testing.assert_allclose(q.rhs, p.rhs, rtol=1e-5)
        np.testing.assert_array_equal(q.sense, p.sense)
        np.testing.assert_array_equal(q.is_int, p.is_int)
        np.testing.assert_allclose(q.ub, p.ub, rtol=1e-5)

    def test_header_and_stream(self):
        buf = io.StringIO()
        text = write_mps(formulate(one_by_one()), buf)
        assert buf.getvalue() == text
        assert "OBJSENSE\n    MAX" in text and text.endswith("ENDATA\n")
        assert "'INTORG'" in text

    @pytest.mark.parametrize("seed", range(4))
    def test_external_solver_agrees(self, seed):
        p = formulate(random_instance(seed))
        ref, _ = highs_milp(read_mps(write_mps(p)))
        sol, _ = solve_milp(p)
        assert sol.objective == pytest.approx(ref, rel=1e-4, abs=1e-6)
