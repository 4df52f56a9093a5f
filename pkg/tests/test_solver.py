import io
import math
import os
import subprocess
import sys

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st
from scipy.optimize import linprog

from arcticspill.errors import InfeasibleError, SolverError, TooLarge
from arcticspill.formulation import MilpProblem, VarKey, formulate
from arcticspill.solver.bnb import SolverOptions, branch_and_bound, solve_milp
from arcticspill.solver.decomp import Decomposition
from arcticspill.solver.oracle import enumerate_oracle
from arcticspill.solver.simplex import SimplexEngine, solve_lp

from factories import one_by_one, random_instance, zero_spill_instance
from test_formulation import highs_milp


def generic(c, A, sense, rhs, lb, ub, is_int=None):
    c = np.asarray(c, dtype=float)
    return MilpProblem(c=c, A=sp.csr_matrix(np.atleast_2d(A)), sense=np.array(sense), rhs=rhs, lb=lb, ub=ub,
                       is_int=np.zeros(c.size, bool) if is_int is None else is_int)


def random_lp(seed, m=10, n=10):
    rng = np.random.default_rng(seed)
    A = rng.uniform(-1, 3, (m, n))
    A[rng.random((m, n)) < 0.3] = 0.0
    return generic(rng.normal(size=n), A, rng.choice(["L", "G", "E"], m, p=[0.7, 0.2, 0.1]),
                   rng.uniform(0, 10, m), np.zeros(n), rng.uniform(1, 5, n))


def linprog_max(p):
    dense = p.A.toarray()
    le, ge, eq = p.sense == "L", p.sense == "G", p.sense == "E"
    A_ub = np.vstack([dense[le], -dense[ge]])
    b_ub = np.concatenate([p.rhs[le], -p.rhs[ge]])
    res = linprog(-p.c, A_ub=A_ub if A_ub.size else None, b_ub=b_ub if A_ub.size else None,
                  A_eq=dense[eq] if eq.any() else None, b_eq=p.rhs[eq] if eq.any() else None,
                  bounds=list(zip(p.lb, p.ub)), method="highs")
    return res


class TestSimplex:
    def test_single_variable(self):
        r = solve_lp(generic([1.0], [[1.0]], ["L"], [3.0], [0.0], [10.0]))
        assert r.status == "Optimal" and r.objective == pytest.approx(3.0)

    def test_zero_spill_relaxation(self):
        assert solve_lp(formulate(zero_spill_instance()).relaxed()).objective == pytest.approx(0.0)

    def test_infeasible(self):
        r = solve_lp(generic([1.0], [[1.0]], ["G"], [20.0], [0.0], [10.0]))
        assert r.status == "Infeasible"

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 100_000))
    def test_random_10x10_matches_highs(self, seed):
        p = random_lp(seed)
        ref = linprog_max(p)
        ours = solve_lp(p)
        if ref.status == 2:
            assert ours.status == "Infeasible"
            return
        assert ref.status == 0
        assert ours.status == "Optimal"
        assert ours.objective == pytest.approx(-ref.fun, abs=1e-6, rel=1e-6)
        assert p.max_violation(ours.x) < 1e-6

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 100_000))
    def test_strong_duality(self, seed):
        p = random_lp(seed)
        r = solve_lp(p)
        if r.status != "Optimal":
            return
        assert r.dual_objective == pytest.approx(r.objective, abs=1e-6, rel=1e-6)

    def test_relaxation_bounds_milp(self, bundled):
        p = formulate(bundled)
        lp = solve_lp(p.relaxed())
        sol, _ = solve_milp(p)
        assert lp.objective >= sol.objective - 1e-9

    def test_snapshot_restore(self):
        p = formulate(random_instance(3)).relaxed()
        eng = SimplexEngine(p)
        eng.cold_start()
        assert eng.reoptimize() == "Optimal"
        snap = eng.snapshot()
        first = eng.objective()
        ub = p.ub.copy()
        ub[:] = 0.5 * ub
        eng.set_bounds(p.lb, ub)
        eng.reoptimize()
        eng.restore(snap)
        eng.set_bounds(p.lb, p.ub)
        eng.reoptimize()
        assert eng.objective() == pytest.approx(first)


class TestBranchAndBound:
    @pytest.mark.parametrize("seed", range(8))
    def test_integer_knapsack_vs_highs(self, seed):
        rng = np.random.default_rng(seed)
        n = 8
        p = generic(rng.uniform(1, 10, n), rng.uniform(1, 6, (2, n)), ["L", "L"], rng.uniform(8, 20, 2),
                    np.zeros(n), np.full(n, 3.0), np.ones(n, bool))
        ref, _ = highs_milp(p)
        res = branch_and_bound(p, SolverOptions())
        assert res.status == "Optimal"
        assert res.objective == pytest.approx(ref, rel=1e-6)

    def test_infeasible_root(self):
        p = generic([1.0], [[1.0]], ["G"], [2.0], [0.0], [1.0], np.array([True]))
        assert branch_and_bound(p).status == "Infeasible"

    def test_solve_milp_raises_on_infeasible(self):
        inst = one_by_one()
        p = formulate(inst)
        lb = p.lb.copy()
        lb[p.index[VarKey("Y", (0, 0, 0))]] = 1.0
        ub = p.ub.copy()
        ub[p.index[VarKey("X", (0,))]] = 0.0
        with pytest.raises(InfeasibleError):
            solve_milp(p.with_bounds(lb, ub), SolverOptions(method="monolithic"))

    def test_decompose_requires_structure(self):
        p = random_lp(0)
        assert Decomposition.detect(p) is None

    def test_decompose_on_unsuitable_model_raises(self):
        inst = random_instance(1, n_i=3)
        p = formulate(inst)
        p.is_int[:] = False
        with pytest.raises(SolverError):
            solve_milp(p, SolverOptions(method="decompose"))

    @pytest.mark.parametrize("method", ["monolithic", "auto"])
    def test_bound_history_monotone(self, method):
        _, stats = solve_milp(formulate(random_instance(5, 3, 4, 3, 2)), SolverOptions(method=method))
        bounds = stats.bound_history
        assert bounds
        assert all(b2 <= b1 + 1e-9 for b1, b2 in zip(bounds, bounds[1:]))
        assert stats.best_bound >= stats.best_incumbent - 1e-9

    def test_node_limit_gives_gap_limit_or_optimal(self):
        p = formulate(random_instance(11, 3, 4, 3, 2))
        res = branch_and_bound(p, SolverOptions(node_limit=1, method="monolithic"))
        assert res.status in ("GapLimit", "Optimal")
        if res.x is not None:
            assert p.max_violation(res.x) < 1e-6
            assert res.stats.best_bound >= res.objective - 1e-9

    def test_trace_lines(self):
        buf = io.StringIO()
        p = formulate(random_instance(2))
        res = branch_and_bound(p, SolverOptions(trace=buf, method="monolithic"))
        lines = buf.getvalue().splitlines()
        assert len(lines) == res.stats.nodes
        for line in lines:
            node, bound, inc = line.split()
            int(node)
            float(bound), float(inc)

    def test_trace_callable_decomposed(self):
        got = []
        solve_milp(formulate(random_instance(2)), SolverOptions(trace=got.append))
        assert got and all(len(g.split()) == 3 for g in got)

    @pytest.mark.parametrize("method", ["monolithic", "auto"])
    @pytest.mark.parametrize("rule", ["most-fractional", "pseudo-cost"])
    def test_deterministic(self, method, rule):
        p = formulate(random_instance(9, 3, 3, 3, 2))
        opts = SolverOptions(method=method, branch_rule=rule)
        a, sa = solve_milp(p, opts)
        b, sb = solve_milp(p, opts)
        assert a.objective == b.objective
        np.testing.assert_array_equal(a.values, b.values)
        assert sa.nodes == sb.nodes

    def test_bad_options(self):
        with pytest.raises(ValueError):
            SolverOptions(branch_rule="random")
        with pytest.raises(ValueError):
            SolverOptions(rel_gap_tol=0)


class TestOracle:
    def test_closed_form(self):
        inst = one_by_one()
        sol, _ = solve_milp(formulate(inst))
        assert enumerate_oracle(formulate(inst)).objective == pytest.approx(sol.objective, abs=1e-9)

    def test_unreachable_spill_left_uncovered(self):
        with pytest.warns(UserWarning):
            inst = one_by_one(tau_max=0.5)
            res = enumerate_oracle(formulate(inst))
        assert res.objective == pytest.approx(0.0)

    def test_too_large(self):
        inst = random_instance(0, n_i=3, n_o=17, n_k=5, n_r=1)
        with pytest.raises(TooLarge):
            enumerate_oracle(formulate(inst))

    @pytest.mark.parametrize("seed", range(12))
    @pytest.mark.parametrize("method", ["monolithic", "auto"])
    def test_matches_solver_2x3x2x2(self, seed, method):
        p = formulate(random_instance(seed, n_i=2, n_o=3, n_k=2, n_r=2))
        ora = enumerate_oracle(p)
        sol, _ = solve_milp(p, SolverOptions(method=method))
        assert sol.objective == pytest.approx(ora.objective, rel=1e-6, abs=1e-9)
        if ora.first_stage_unique:
            n_i = p.dims[0]
            np.testing.assert_array_equal(sol.X, ora.x[:n_i])


def test_numpy_fallback_gives_same_answer():
    code = ("import sys; sys.path.insert(0, 'tests');"
            "from factories import random_instance;"
            "from arcticspill.formulation import formulate;"
            "from arcticspill.solver.bnb import solve_milp, SolverOptions;"
            "from arcticspill._accel import USE_NUMBA;"
            "s, _ = solve_milp(formulate(random_instance(4, 3, 3, 2, 2)), SolverOptions(method='monolithic'));"
            "print(USE_NUMBA, repr(s.objective))")
    root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
    out = {}
    for flag in ("0", "1"):
        env = dict(os.environ, ARCTICSPILL_DISABLE_NUMBA=flag)
        r = subprocess.run([sys.executable, "-c", code], env=env, cwd=root, capture_output=True, text=True, check=True)
        used, obj = r.stdout.split()
        out[flag] = (used, float(obj))
    assert out["1"][0] == "False"
    assert out["0"][1] == pytest.approx(out["1"][1], rel=1e-9, abs=1e-12)
