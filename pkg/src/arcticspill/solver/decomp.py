"""Exact scenario decomposition for models with few first-stage binaries.

Once the station vector ``X`` is fixed the scenarios share no rows, so
``max_X c_X X + sum_k Q_k(X)`` can be solved by enumerating feasible ``X``
vectors in order of their LP bound and running branch and bound on each
scenario block separately. Blocks are shrunk first by propagating singleton
rows (a closed station fixes its ``Y`` columns to zero, which in turn fixes the
matching ``Z`` columns).
"""
from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, replace

import numpy as np
import scipy.sparse as sp

from ..formulation import MilpProblem
from .bnb import MilpResult, SolveStats, SolverOptions, branch_and_bound
from .simplex import SimplexOptions, solve_lp

MAX_FIRST_STAGE = 12


@dataclass
class _Block:
    cols: np.ndarray
    rows: np.ndarray
    A: sp.csr_matrix  # rows x block columns
    A_first: sp.csr_matrix  # rows x first-stage columns


@dataclass
class _Reduced:
    problem: MilpProblem | None  # None when nothing is left free
    free: np.ndarray  # indices into block.cols
    x_fixed: np.ndarray  # values of all block columns (free ones are placeholders)
    constant: float


class Decomposition:
    """Row and column partition of a two-stage model."""

    def __init__(self, problem: MilpProblem, first: np.ndarray, blocks: list[_Block], head_rows: np.ndarray):
        self.problem = problem
        self.first = first
        self.blocks = blocks
        self.head_rows = head_rows

    @classmethod
    def detect(cls, problem: MilpProblem) -> "Decomposition | None":
        keys = problem.keys
        if not keys or not all(hasattr(k, "scenario") for k in keys):
            return None
        scen = np.array([-1 if k.scenario is None else k.scenario for k in keys])
        first = np.flatnonzero(scen < 0)
        if first.size == 0 or first.size > MAX_FIRST_STAGE or not problem.is_int[first].all():
            return None
        if np.any(problem.lb[first] < 0) or np.any(problem.ub[first] > 1):
            return None
        A = problem.A.tocsr()
        n_blocks = int(scen.max()) + 1
        row_block = np.full(problem.n_rows, -1)
        for i in range(problem.n_rows):
            s = set(scen[A.indices[A.indptr[i]:A.indptr[i + 1]]].tolist()) - {-1}
            if len(s) > 1:
                return None
            if s:
                row_block[i] = s.pop()
        A_csc = A.tocsc()
        blocks = []
        for k in range(n_blocks):
            cols = np.flatnonzero(scen == k)
            rows = np.flatnonzero(row_block == k)
            sub = A_csc[rows]
            blocks.append(_Block(cols, rows, sub[:, cols].tocsr(), sub[:, first].tocsr()))
        return cls(problem, first, blocks, np.flatnonzero(row_block < 0))

    # -- first stage ----------------------------------------------------------

    def first_stage_candidates(self) -> list[np.ndarray]:
        p = self.problem
        A = p.A.tocsr()[self.head_rows][:, self.first]
        rhs, sense = p.rhs[self.head_rows], p.sense[self.head_rows]
        lo, hi = p.lb[self.first], p.ub[self.first]
        out = []
        for bits in itertools.product((0.0, 1.0), repeat=self.first.size):
            x = np.array(bits)
            if np.any(x < lo - 1e-9) or np.any(x > hi + 1e-9):
                continue
            act = A @ x
            if np.any((sense == "L") & (act > rhs + 1e-9)) or np.any((sense == "G") & (act < rhs - 1e-9)) \
                    or np.any((sense == "E") & (np.abs(act - rhs) > 1e-9)):
                continue
            out.append(x)
        return out

    # -- block reduction --------------------------------------------------------

    def reduce(self, k: int, x_first: np.ndarray, int_tol: float = 1e-6) -> _Reduced | None:
        """Block ``k`` with the first stage fixed, or ``None`` if infeasible."""
        p = self.problem
        blk = self.blocks[k]
        cols = blk.cols
        lb = p.lb[cols].copy()
        ub = p.ub[cols].copy()
        is_int = p.is_int[cols]
        rhs = p.rhs[blk.rows] - blk.A_first @ x_first
        sense = p.sense[blk.rows]
        A = blk.A
        pattern = A.copy()
        pattern.data[:] = 1.0
        for _ in range(10):
            fixed = ub - lb <= 1e-12
            xf = np.where(fixed, lb, 0.0)
            r = rhs - A @ xf
            nfree = pattern @ (~fixed).astype(float)
            single = np.flatnonzero(nfree == 1)
            changed = False
            for i in single:
                lo_, hi_ = A.indptr[i], A.indptr[i + 1]
                idx = A.indices[lo_:hi_]
                vals = A.data[lo_:hi_]
                m = ~fixed[idx]
                j, a = int(idx[m][0]), float(vals[m][0])
                bound = r[i] / a
                s = sense[i]
                upper = (s == "L" and a > 0) or (s == "G" and a < 0) or s == "E"
                lower = (s == "L" and a < 0) or (s == "G" and a > 0) or s == "E"
                if upper:
                    nb = math.floor(bound + int_tol) if is_int[j] else bound
                    if nb < ub[j] - 1e-12:
                        ub[j] = max(nb, lb[j]) if nb >= lb[j] - 1e-9 else nb
                        changed = True
                if lower:
                    nb = math.ceil(bound - int_tol) if is_int[j] else bound
                    if nb > lb[j] + 1e-12:
                        lb[j] = min(nb, ub[j]) if nb <= ub[j] + 1e-9 else nb
                        changed = True
            if np.any(lb > ub + 1e-9):
                return None
            if not changed:
                break
        fixed = ub - lb <= 1e-12
        xf = np.where(fixed, lb, 0.0)
        r = rhs - A @ xf
        nfree = pattern @ (~fixed).astype(float)
        dead = nfree == 0
        s = sense[dead]
        rd = r[dead]
        if np.any((s == "L") & (rd < -1e-9)) or np.any((s == "G") & (rd > 1e-9)) or np.any((s == "E") & (np.abs(rd) > 1e-9)):
            return None
        free = np.flatnonzero(~fixed)
        const = float(p.c[cols] @ xf)
        if free.size == 0:
            return _Reduced(None, free, xf, const)
        live = np.flatnonzero(~dead)
        sub = MilpProblem(
            c=p.c[cols][free],
            A=A[live][:, free],
            sense=sense[live],
            rhs=r[live],
            lb=lb[free],
            ub=ub[free],
            is_int=is_int[free],
            keys=[p.keys[cols[j]] for j in free],
            row_names=[p.row_names[blk.rows[i]] for i in live],
        )
        return _Reduced(sub, free, xf, const)


def _lp_bound(red: _Reduced, deadline: float | None) -> float:
    if red.problem is None:
        return red.constant
    res = solve_lp(red.problem.relaxed(), SimplexOptions(deadline=deadline))
    if res.status != "Optimal":
        return -math.inf
    return red.constant + res.objective


def solve_decomposed(problem: MilpProblem, dec: Decomposition, options: SolverOptions | None = None) -> MilpResult:
    opt = options or SolverOptions()
    t0 = time.perf_counter()
    deadline = t0 + opt.time_limit if opt.time_limit is not None else None
    stats = SolveStats()
    n_blocks = len(dec.blocks)
    c_first = problem.c[dec.first]

    def gap(obj: float) -> float:
        return opt.rel_gap_tol * max(1.0, abs(obj)) if math.isfinite(obj) else 0.0

    # bound every first-stage candidate by its LP relaxation
    cands = []
    try:
        for x in dec.first_stage_candidates():
            reds = [dec.reduce(k, x, opt.int_tol) for k in range(n_blocks)]
            if any(r is None for r in reds):
                continue
            ub = float(c_first @ x) + sum(_lp_bound(r, deadline) for r in reds)
            if math.isfinite(ub):
                cands.append((ub, x, reds))
    except TimeoutError:
        stats.wall_time = time.perf_counter() - t0
        return MilpResult("GapLimit", math.nan, None, stats)
    if not cands:
        stats.wall_time = time.perf_counter() - t0
        return MilpResult("Infeasible", math.nan, None, stats)
    # stable: equal bounds keep the enumeration order
    order = sorted(range(len(cands)), key=lambda i: -cands[i][0])

    best_x, best_obj = None, -math.inf
    limit_hit = False
    open_bound = -math.inf
    sub_gap = opt.rel_gap_tol / max(n_blocks, 1)
    for pos, ci in enumerate(order):
        ub, xf, reds = cands[ci]
        if ub <= best_obj + gap(best_obj):
            break
        remaining_time = None if deadline is None else deadline - time.perf_counter()
        if remaining_time is not None and remaining_time <= 0:
            limit_hit, open_bound = True, ub
            break
        x = np.zeros(problem.n_cols)
        x[dec.first] = xf
        total = float(c_first @ xf)
        candidate_bound = float(c_first @ xf)
        exact = True
        feasible = True
        for k, red in enumerate(reds):
            blk = dec.blocks[k]
            vals = red.x_fixed.copy()
            if red.problem is not None:
                sub_opt = replace(opt, rel_gap_tol=sub_gap, trace=None,
                                  time_limit=None if deadline is None else max(deadline - time.perf_counter(), 1e-3),
                                  node_limit=max(opt.node_limit - stats.nodes, 1))
                res = branch_and_bound(red.problem, sub_opt)
                stats.nodes += res.stats.nodes
                stats.lp_iterations += res.stats.lp_iterations
                if res.x is None:
                    feasible = False
                    if res.status != "Infeasible":
                        limit_hit = True
                    break
                if res.status != "Optimal":
                    exact = False
                vals[red.free] = res.x
                total += red.constant + res.objective
                candidate_bound += red.constant + max(res.stats.best_bound, res.objective)
            else:
                total += red.constant
                candidate_bound += red.constant
            x[blk.cols] = vals
        if feasible and total > best_obj:
            best_obj, best_x = total, x
        if not exact:
            limit_hit = True
            open_bound = max(open_bound, candidate_bound)
        nxt = cands[order[pos + 1]][0] if pos + 1 < len(order) else -math.inf
        stats.bound_history.append(max(best_obj, nxt, open_bound))
        if opt.trace is not None:
            line = f"{pos + 1} {stats.bound_history[-1]:.12g} {best_obj:.12g}"
            opt.trace(line) if callable(opt.trace) else opt.trace.write(line + "\n")
        if limit_hit and (deadline is not None and time.perf_counter() > deadline or stats.nodes >= opt.node_limit):
            rest = [cands[order[j]][0] for j in range(pos + 1, len(order))]
            open_bound = max([open_bound] + rest)
            break

    stats.wall_time = time.perf_counter() - t0
    stats.best_incumbent = best_obj
    if best_x is None:
        return MilpResult("GapLimit" if limit_hit else "Infeasible", math.nan, None, stats)
    stats.best_bound = max(best_obj, open_bound)
    status = "GapLimit" if limit_hit and stats.best_bound > best_obj + gap(best_obj) else "Optimal"
    return MilpResult(status, best_obj, best_x, stats)
