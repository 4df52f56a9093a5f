"""Brute-force reference solver for tiny models.

Enumerates the first-stage binaries, then for each scenario the second-stage
binaries, and solves the remaining continuous LP with scipy's HiGHS. It shares
no code with the simplex engine, which makes it a usable test oracle.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from ..errors import TooLarge
from ..formulation import MilpProblem, VarKey

MAX_WORK = 2 ** 24


@dataclass
class OracleResult:
    objective: float
    x: np.ndarray
    first_stage_unique: bool  # no other first-stage vector reaches the optimum
    lp_solves: int


def _groups(problem: MilpProblem) -> tuple[np.ndarray, list[np.ndarray]]:
    """Column indices of the first stage and of each scenario block."""
    keys = problem.keys
    if not keys or not all(isinstance(k, VarKey) for k in keys):
        return np.arange(problem.n_cols), []
    first = np.array([j for j, k in enumerate(keys) if k.scenario is None], dtype=int)
    n_k = problem.dims[2] if problem.dims else 1 + max((k.scenario for k in keys if k.scenario is not None), default=-1)
    blocks = [np.array([j for j, k in enumerate(keys) if k.scenario == s], dtype=int) for s in range(n_k)]
    return first, blocks


def _binary_only(problem: MilpProblem, cols: np.ndarray) -> None:
    ints = cols[problem.is_int[cols]]
    if np.any(problem.lb[ints] < 0) or np.any(problem.ub[ints] > 1):
        raise TooLarge("oracle only enumerates binary columns")


class _Block:
    """Rows touching a column set, with the fixed columns moved to the rhs."""

    def __init__(self, problem: MilpProblem, cols: np.ndarray, fixed: np.ndarray):
        A = problem.A.tocsc()
        touched = np.unique(A[:, cols].tocoo().row) if cols.size else np.zeros(0, dtype=int)
        self.rows = touched
        sub = A[touched]
        self.A_free = sub[:, cols].toarray()
        self.A_fixed = sub[:, fixed].toarray()
        self.sense = problem.sense[touched]
        self.rhs = problem.rhs[touched]
        self.cols = cols
        self.fixed = fixed
        self.ints = problem.is_int[cols]
        self.c = problem.c[cols]
        self.lb = problem.lb[cols]
        self.ub = problem.ub[cols]
        # rows whose free part is purely integer can be checked without an LP
        cont = ~self.ints
        self.int_rows = np.flatnonzero(np.all(self.A_free[:, cont] == 0, axis=1)) if cont.any() else np.arange(len(touched))

    def _lp(self, rhs: np.ndarray, lb: np.ndarray, ub: np.ndarray):
        le = self.sense == "L"
        ge = self.sense == "G"
        eq = self.sense == "E"
        A_ub = np.vstack([self.A_free[le], -self.A_free[ge]])
        b_ub = np.concatenate([rhs[le], -rhs[ge]])
        res = linprog(-self.c, A_ub=A_ub if A_ub.size else None, b_ub=b_ub if A_ub.size else None,
                      A_eq=self.A_free[eq] if eq.any() else None, b_eq=rhs[eq] if eq.any() else None,
                      bounds=list(zip(lb, ub)), method="highs")
        if res.status == 2:
            return None
        if res.status != 0:
            raise RuntimeError(f"HiGHS failed: {res.message}")
        return -res.fun, res.x

    def best(self, fixed_vals: np.ndarray, tol: float = 1e-9):
        """Best value of this block for the given fixed columns, or None."""
        rhs = self.rhs - self.A_fixed @ fixed_vals if self.fixed.size else self.rhs.copy()
        int_idx = np.flatnonzero(self.ints)
        best_val, best_x, solves = None, None, 0
        ir = self.int_rows
        for bits in itertools.product((0.0, 1.0), repeat=int_idx.size):
            bits = np.array(bits)
            if np.any(bits < self.lb[int_idx] - tol) or np.any(bits > self.ub[int_idx] + tol):
                continue
            if ir.size:
                act = self.A_free[np.ix_(ir, int_idx)] @ bits
                s, r = self.sense[ir], rhs[ir]
                bad = ((s == "L") & (act > r + tol)) | ((s == "G") & (act < r - tol)) | ((s == "E") & (np.abs(act - r) > tol))
                if bad.any():
                    continue
            lb = self.lb.copy()
            ub = self.ub.copy()
            lb[int_idx] = bits
            ub[int_idx] = bits
            solves += 1
            out = self._lp(rhs, lb, ub)
            if out is None:
                continue
            if best_val is None or out[0] > best_val:
                best_val, best_x = out
        return best_val, best_x, solves


def enumerate_oracle(problem: MilpProblem, tol: float = 1e-7) -> OracleResult:
    """Solve ``problem`` exactly by enumeration.

    Raises :class:`TooLarge` when ``2^|first stage| * sum_k 2^|block k|``
    binaries exceeds ``2**24`` or when an integer column is not binary.
    """
    first, blocks = _groups(problem)
    _binary_only(problem, np.arange(problem.n_cols))
    n_first = int(problem.is_int[first].sum())
    per_block = sum(2 ** int(problem.is_int[b].sum()) for b in blocks) if blocks else 1
    if 2 ** n_first * per_block > MAX_WORK:
        raise TooLarge(f"enumeration needs {2 ** n_first * per_block} combinations")

    first_int = first[problem.is_int[first]]
    first_cont = first[~problem.is_int[first]]
    if first_cont.size and blocks:
        # continuous first-stage columns couple the blocks; fold everything together
        first, blocks = np.arange(problem.n_cols), []
        first_int = first[problem.is_int]
    empty = np.zeros(0, dtype=int)

    if not blocks:
        whole = _Block(problem, np.arange(problem.n_cols), empty)
        val, x, solves = whole.best(np.zeros(0))
        if val is None:
            from ..errors import InfeasibleError
            raise InfeasibleError("no feasible point")
        return OracleResult(float(val), x, True, solves)

    head = _Block(problem, first_int, empty)
    head_rows_only = np.setdiff1d(head.rows, np.concatenate([_Block(problem, b, first_int).rows for b in blocks]) if blocks else empty)
    blocks_data = [_Block(problem, b, first_int) for b in blocks]
    results = []  # (value, x)
    solves = 0
    for bits in itertools.product((0.0, 1.0), repeat=first_int.size):
        xf = np.array(bits)
        if np.any(xf < problem.lb[first_int]) or np.any(xf > problem.ub[first_int]):
            continue
        # first-stage-only rows (budget)
        A = problem.A[head_rows_only][:, first_int].toarray() if head_rows_only.size else np.zeros((0, first_int.size))
        act = A @ xf
        s, r = problem.sense[head_rows_only], problem.rhs[head_rows_only]
        if np.any(((s == "L") & (act > r + 1e-9)) | ((s == "G") & (act < r - 1e-9)) | ((s == "E") & (np.abs(act - r) > 1e-9))):
            continue
        total = float(problem.c[first_int] @ xf)
        x = np.zeros(problem.n_cols)
        x[first_int] = xf
        ok = True
        for blk in blocks_data:
            val, bx, ns = blk.best(xf)
            solves += ns
            if val is None:
                ok = False
                break
            total += val
            x[blk.cols] = bx
        if ok:
            results.append((total, x))
    if not results:
        from ..errors import InfeasibleError
        raise InfeasibleError("no feasible point")
    values = np.array([v for v, _ in results])
    k = int(np.argmax(values))
    best = values[k]
    near = np.sum(values >= best - tol * max(1.0, abs(best)))
    return OracleResult(float(best), results[k][1], bool(near == 1), solves)
