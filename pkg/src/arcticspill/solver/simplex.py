"""Dense bounded-variable simplex on a condensed tableau.

The engine keeps the ``m x n`` tableau ``T = B^-1 N`` over the nonbasic
columns only (slack columns are added implicitly, one per row). Every
structural column must have finite bounds; slacks carry the row sense as a
one-sided or fixed bound. A cold start picks whichever of the primal or dual
simplex has a feasible starting basis, so no artificial phase is needed.
"""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from ..errors import SolverError, UnboundedError
from ..formulation import EQ, GE, LE, MilpProblem
from . import kernels

INF = np.inf


@dataclass
class LpResult:
    status: str  # "Optimal", "Infeasible" or "Unbounded"
    objective: float
    x: np.ndarray
    iterations: int
    duals: np.ndarray | None = None
    reduced_costs: np.ndarray | None = None
    dual_objective: float = float("nan")


@dataclass
class SimplexOptions:
    feas_tol: float = 1e-7
    opt_tol: float = 1e-9
    piv_tol: float = 1e-9
    max_iter: int = 500_000
    refactor_every: int = 400
    bland_after: int | None = None  # defaults to 5 * (rows + cols)
    deadline: float | None = None  # time.perf_counter() value


@dataclass
class Snapshot:
    basis: np.ndarray
    nonbasic: np.ndarray
    at_ub: np.ndarray
    lb: np.ndarray  # scaled structural bounds when the snapshot was taken
    ub: np.ndarray
    T: np.ndarray | None = None
    d: np.ndarray | None = None
    xB: np.ndarray | None = None

    @property
    def nbytes(self) -> int:
        return 0 if self.T is None else self.T.nbytes


class SimplexEngine:
    """Stateful LP solver used for cold solves and branch-and-bound warm starts.

    Bounds may be changed between solves with :meth:`set_bounds`; the current
    basis stays dual feasible so :meth:`reoptimize` only needs dual pivots.
    """

    def __init__(self, problem: MilpProblem, options: SimplexOptions | None = None):
        self.opt = options or SimplexOptions()
        A = problem.A.toarray()
        m, n = A.shape
        if np.any(~np.isfinite(problem.lb)) or np.any(~np.isfinite(problem.ub)):
            raise SolverError("all structural columns need finite bounds")
        self.m, self.n = m, n
        # equilibrate: rows to unit max-abs, then columns
        row_s = np.abs(A).max(axis=1) if n else np.ones(m)
        row_s = np.where(row_s > 0, 1.0 / np.where(row_s > 0, row_s, 1.0), 1.0)
        A = A * row_s[:, None]
        col_s = np.abs(A).max(axis=0) if m else np.ones(n)
        col_s = np.where(col_s > 0, 1.0 / np.where(col_s > 0, col_s, 1.0), 1.0)
        A = A * col_s[None, :]
        self.row_scale, self.col_scale = row_s, col_s
        self.A = A
        self.b = problem.rhs * row_s
        self.c = np.concatenate([problem.c * col_s, np.zeros(m)])
        slack_lb = np.where(problem.sense == GE, -INF, 0.0)
        slack_ub = np.where(problem.sense == LE, INF, 0.0)
        self.lb = np.concatenate([problem.lb / col_s, slack_lb])
        self.ub = np.concatenate([problem.ub / col_s, slack_ub])
        self.problem = problem
        self.iterations = 0
        self._since_refactor = 0
        self._M = None
        self.T = None

    # -- state helpers --------------------------------------------------------

    def _nonbasic_values(self) -> np.ndarray:
        nb = self.nonbasic
        return np.where(self.at_ub, self.ub[nb], self.lb[nb])

    def _full_matrix(self) -> np.ndarray:
        if self._M is None:
            self._M = np.hstack([self.A, np.eye(self.m)])
        return self._M

    def cold_start(self) -> None:
        m, n = self.m, self.n
        self.basis = np.arange(n, n + m)
        self.nonbasic = np.arange(n)
        self.T = self.A.copy()
        self.d = self.c[:n].copy()
        # start at lower bounds if that is primal feasible, else at the
        # dual-feasible corner (attractive columns at their upper bound)
        self.at_ub = np.zeros(n, dtype=bool)
        xB = self.b - self.A @ self._nonbasic_values()
        if self._infeasibility(xB) > self.opt.feas_tol:
            self.at_ub = self.d > 0
            xB = self.b - self.A @ self._nonbasic_values()
        self.xB = xB
        self._since_refactor = 0

    def _infeasibility(self, xB: np.ndarray) -> float:
        lbB, ubB = self.lb[self.basis], self.ub[self.basis]
        v = np.maximum(lbB - xB, xB - ubB)
        return float(v.max(initial=0.0))

    def refactor(self) -> None:
        """Rebuild ``T``, ``x_B`` and ``d`` from the basis and original data."""
        M = self._full_matrix()
        B = M[:, self.basis]
        N = M[:, self.nonbasic]
        try:
            lu = np.linalg.solve(B, np.hstack([N, self.b[:, None]]))
        except np.linalg.LinAlgError as exc:  # pragma: no cover - basis kept nonsingular by pivoting
            raise SolverError("singular basis during refactorization") from exc
        self.T = np.ascontiguousarray(lu[:, :-1])
        h = lu[:, -1]
        self.xB = h - self.T @ self._nonbasic_values()
        cB = self.c[self.basis]
        self.d = self.c[self.nonbasic] - cB @ self.T
        self._since_refactor = 0

    def snapshot(self, with_tableau: bool = True) -> Snapshot:
        n = self.n
        s = Snapshot(self.basis.copy(), self.nonbasic.copy(), self.at_ub.copy(),
                     self.lb[:n].copy(), self.ub[:n].copy())
        if with_tableau:
            s.T = self.T.copy()
            s.d = self.d.copy()
            s.xB = self.xB.copy()
        return s

    def restore(self, snap: Snapshot) -> None:
        """Return to a snapshot, including the bounds it was taken under."""
        n = self.n
        self.basis = snap.basis.copy()
        self.nonbasic = snap.nonbasic.copy()
        self.at_ub = snap.at_ub.copy()
        self.lb[:n], self.ub[:n] = snap.lb, snap.ub
        if snap.T is not None:
            self.T = snap.T.copy()
            self.d = snap.d.copy()
            self.xB = snap.xB.copy()
            self._since_refactor = 0
        else:
            self.refactor()

    def set_bounds(self, lb: np.ndarray, ub: np.ndarray) -> None:
        """Replace structural bounds (unscaled) keeping the basis."""
        new_lb = np.asarray(lb, dtype=float) / self.col_scale
        new_ub = np.asarray(ub, dtype=float) / self.col_scale
        if self.T is None:
            self.lb[: self.n], self.ub[: self.n] = new_lb, new_ub
            return
        old = self._nonbasic_values()
        self.lb[: self.n], self.ub[: self.n] = new_lb, new_ub
        new = self._nonbasic_values()
        delta = new - old
        moved = np.flatnonzero(delta)
        if moved.size:
            self.xB -= self.T[:, moved] @ delta[moved]

    # -- iterations -------------------------------------------------------------

    def _check_budget(self) -> None:
        if self.iterations >= self.opt.max_iter:
            raise SolverError("simplex iteration limit reached")
        if self.opt.deadline is not None and time.perf_counter() > self.opt.deadline:
            raise TimeoutError("time limit reached inside LP")

    def _maybe_refactor(self) -> None:
        self._since_refactor += 1
        if self._since_refactor >= self.opt.refactor_every:
            self.refactor()

    def _dual_phase(self) -> bool:
        """Dual simplex until primal feasible. Returns False if infeasible."""
        tol = self.opt.feas_tol
        piv = self.opt.piv_tol
        bland_after = self.opt.bland_after or 5 * (self.m + self.n)
        stall = 0
        best_obj = INF
        while True:
            lbB, ubB = self.lb[self.basis], self.ub[self.basis]
            below = lbB - self.xB
            above = self.xB - ubB
            viol = np.maximum(below, above)
            if viol.size == 0 or viol.max() <= tol:
                return True
            self._check_budget()
            if stall > bland_after:
                cand = np.flatnonzero(viol > tol)
                r = int(cand[np.argmin(self.basis[cand])])
            else:
                r = int(np.argmax(viol))
            increase = below[r] > above[r]
            nb = self.nonbasic
            free_range = self.ub[nb] > self.lb[nb]
            movable_up = (~self.at_ub) & free_range
            movable_down = self.at_ub & free_range
            row = self.T[r]
            q = kernels.dual_ratio(row, self.d, movable_up, movable_down, increase, piv)
            if q < 0:
                return False
            target = lbB[r] if increase else ubB[r]
            step = (target - self.xB[r]) / (-row[q])
            entering_val = self._nonbasic_values()[q] + step
            self.xB -= step * self.T[:, q]
            leaving = self.basis[r]
            kernels.pivot(self.T, self.d, r, q)
            self.basis[r] = nb[q]
            self.nonbasic[q] = leaving
            self.at_ub[q] = not increase
            self.xB[r] = entering_val
            self.iterations += 1
            obj = self.objective_scaled()
            if obj < best_obj - 1e-12:
                best_obj = obj
                stall = 0
            else:
                stall += 1
            self._maybe_refactor()

    def _primal_phase(self) -> str:
        """Primal simplex from a primal feasible basis."""
        tol = self.opt.opt_tol
        piv = self.opt.piv_tol
        bland_after = self.opt.bland_after or 5 * (self.m + self.n)
        stall = 0
        best_obj = -INF
        while True:
            nb = self.nonbasic
            free_range = self.ub[nb] > self.lb[nb]
            gain = np.where(self.at_ub, -self.d, self.d)
            gain = np.where(free_range, gain, 0.0)
            if gain.size == 0 or gain.max() <= tol:
                return "Optimal"
            self._check_budget()
            if stall > bland_after:
                cand = np.flatnonzero(gain > tol)
                q = int(cand[np.argmin(nb[cand])])
            else:
                q = int(np.argmax(gain))
            sigma = -1.0 if self.at_ub[q] else 1.0
            col = self.T[:, q]
            lbB, ubB = self.lb[self.basis], self.ub[self.basis]
            step, r, to_upper = kernels.primal_ratio(col, self.xB, lbB, ubB, sigma, piv)
            flip = self.ub[nb[q]] - self.lb[nb[q]]
            if flip <= step:
                if not np.isfinite(flip):
                    return "Unbounded"
                self.xB -= sigma * flip * col
                self.at_ub[q] = not self.at_ub[q]
            else:
                if r < 0:
                    return "Unbounded"
                delta = sigma * step
                entering_val = self._nonbasic_values()[q] + delta
                self.xB -= delta * col
                leaving = self.basis[r]
                kernels.pivot(self.T, self.d, r, q)
                self.basis[r] = nb[q]
                self.nonbasic[q] = leaving
                self.at_ub[q] = to_upper
                self.xB[r] = entering_val
                self._maybe_refactor()
            self.iterations += 1
            obj = self.objective_scaled()
            if obj > best_obj + 1e-12:
                best_obj = obj
                stall = 0
            else:
                stall += 1

    def objective_scaled(self) -> float:
        return float(self.c[self.basis] @ self.xB + self.c[self.nonbasic] @ self._nonbasic_values())

    def residual(self) -> float:
        """Max row residual of the current point in scaled units."""
        x = self.x_scaled()
        return float(np.abs(self.A @ x[: self.n] + x[self.n:] - self.b).max(initial=0.0))

    def reoptimize(self) -> str:
        """Restore optimality after bound changes (or from a cold start)."""
        for _ in range(3):
            if not self._dual_phase():
                if self._since_refactor:
                    self.refactor()
                    continue
                return "Infeasible"
            status = self._primal_phase()
            if status != "Optimal":
                return status
            if self.residual() <= 1e-9 * (1.0 + np.abs(self.b).max(initial=0.0)):
                return "Optimal"
            self.refactor()
            if (self._infeasibility(self.xB) <= self.opt.feas_tol
                    and self._dual_infeasibility() <= self.opt.opt_tol):
                return "Optimal"
        return "Optimal" if self._infeasibility(self.xB) <= self.opt.feas_tol else "Infeasible"

    def _dual_infeasibility(self) -> float:
        nb = self.nonbasic
        free_range = self.ub[nb] > self.lb[nb]
        gain = np.where(self.at_ub, -self.d, self.d)
        return float(np.where(free_range, gain, 0.0).max(initial=0.0))

    # -- results ----------------------------------------------------------------

    def x_scaled(self) -> np.ndarray:
        full = np.empty(self.n + self.m)
        full[self.nonbasic] = self._nonbasic_values()
        full[self.basis] = self.xB
        return full

    def values(self) -> np.ndarray:
        """Structural values in original units."""
        return self.x_scaled()[: self.n] * self.col_scale

    def objective(self) -> float:
        return self.objective_scaled()


def _dual_certificate(problem: MilpProblem, basis: np.ndarray, lb: np.ndarray, ub: np.ndarray):
    """Row duals from the final basis and the Lagrangian bound they certify."""
    m, n = problem.n_rows, problem.n_cols
    M = np.hstack([problem.A.toarray(), np.eye(m)])
    c = np.concatenate([problem.c, np.zeros(m)])
    B = M[:, basis]
    y = np.linalg.solve(B.T, c[basis]) if m else np.zeros(0)
    d = problem.c - problem.A.T @ y
    bound = float(problem.rhs @ y) + float(np.maximum(d * lb, d * ub).sum())
    # slack s_i has cost -y_i; its sup over the slack range must be finite
    le, ge = problem.sense == LE, problem.sense == GE
    bad = (le & (y < -1e-7)) | (ge & (y > 1e-7))
    if np.any(bad):
        bound = INF
    return y, d, bound


def solve_lp(problem: MilpProblem, options: SimplexOptions | None = None) -> LpResult:
    """Solve the continuous relaxation of ``problem`` (integrality ignored)."""
    eng = SimplexEngine(problem, options)
    if np.any(problem.lb > problem.ub):
        return LpResult("Infeasible", float("nan"), np.full(problem.n_cols, np.nan), 0)
    eng.cold_start()
    status = eng.reoptimize()
    if status == "Unbounded":
        raise UnboundedError("LP relaxation is unbounded")
    if status == "Infeasible":
        return LpResult("Infeasible", float("nan"), np.full(problem.n_cols, np.nan), eng.iterations)
    x = np.clip(eng.values(), problem.lb, problem.ub)
    y, d, bound = _dual_certificate(problem, eng.basis, problem.lb, problem.ub)
    return LpResult("Optimal", float(problem.c @ x), x, eng.iterations, duals=y, reduced_costs=d,
                    dual_objective=bound)
