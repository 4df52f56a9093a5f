"""Best-bound branch and bound with depth-first plunging.

Child nodes are re-optimised from the parent's tableau with the dual simplex.
The sibling that is not plunged into is queued with a copy of the tableau
while the snapshot budget allows, otherwise with its basis only (restored by
refactorisation).
"""
from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass, field
from typing import IO, Callable

import numpy as np

from ..errors import InfeasibleError, SolverError
from ..formulation import MilpProblem, Solution, decode
from .simplex import SimplexEngine, SimplexOptions


@dataclass
class SolverOptions:
    rel_gap_tol: float = 1e-6
    int_tol: float = 1e-6
    feas_tol: float = 1e-7
    node_limit: int = 1_000_000
    time_limit: float | None = None  # seconds
    branch_rule: str = "most-fractional"  # or "pseudo-cost"
    seed: int = 0
    trace: IO[str] | Callable[[str], None] | None = None
    snapshot_budget_mb: float = 256.0
    method: str = "auto"  # auto, monolithic or decompose

    def __post_init__(self):
        for name in ("rel_gap_tol", "int_tol", "feas_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        if self.branch_rule not in ("most-fractional", "pseudo-cost"):
            raise ValueError(f"unknown branch rule {self.branch_rule!r}")
        if self.method not in ("auto", "monolithic", "decompose"):
            raise ValueError(f"unknown method {self.method!r}")


@dataclass
class SolveStats:
    nodes: int = 0
    lp_iterations: int = 0
    best_bound: float = -math.inf
    best_incumbent: float = -math.inf
    wall_time: float = 0.0
    bound_history: list = field(default_factory=list)


@dataclass
class MilpResult:
    status: str  # Optimal, Infeasible or GapLimit
    objective: float
    x: np.ndarray | None
    stats: SolveStats


@dataclass(order=True)
class _Node:
    key: float  # -bound, so heapq pops the best bound first
    seq: int
    lb: np.ndarray = field(compare=False)
    ub: np.ndarray = field(compare=False)
    snap: object = field(compare=False)
    depth: int = field(compare=False, default=0)
    branch: tuple | None = field(compare=False, default=None)  # (column, direction, distance)

    @property
    def bound(self) -> float:
        return -self.key


class _PseudoCosts:
    def __init__(self, n: int):
        self.sum = np.zeros((2, n))
        self.cnt = np.zeros((2, n))

    def update(self, j: int, direction: int, dist: float, degradation: float) -> None:
        if dist > 0:
            self.sum[direction, j] += max(degradation, 0.0) / dist
            self.cnt[direction, j] += 1

    def score(self, cand: np.ndarray, frac: np.ndarray) -> np.ndarray | None:
        cnt = self.cnt[:, cand]
        if not np.all(cnt.sum(axis=0) > 0):
            return None
        mean_all = self.sum.sum(axis=1) / np.maximum(self.cnt.sum(axis=1), 1)
        pc = np.where(cnt > 0, self.sum[:, cand] / np.maximum(cnt, 1), mean_all[:, None])
        down = pc[0] * frac
        up = pc[1] * (1.0 - frac)
        return np.maximum(down, 1e-6) * np.maximum(up, 1e-6)


def _emit(trace, line: str) -> None:
    if trace is None:
        return
    if callable(trace):
        trace(line)
    else:
        trace.write(line + "\n")


def branch_and_bound(problem: MilpProblem, options: SolverOptions | None = None) -> MilpResult:
    """Maximise ``problem`` over its integer columns."""
    opt = options or SolverOptions()
    t0 = time.perf_counter()
    deadline = t0 + opt.time_limit if opt.time_limit is not None else None
    stats = SolveStats()
    n = problem.n_cols
    ints = np.flatnonzero(problem.is_int)
    rownorm = np.abs(problem.A).max(axis=1).toarray().ravel() if problem.n_rows else np.zeros(0)
    rownorm = np.where(rownorm > 0, rownorm, 1.0)

    lb0 = problem.lb.copy()
    ub0 = problem.ub.copy()
    lb0[ints] = np.ceil(lb0[ints] - opt.int_tol)
    ub0[ints] = np.floor(ub0[ints] + opt.int_tol)
    if np.any(lb0 > ub0):
        stats.wall_time = time.perf_counter() - t0
        return MilpResult("Infeasible", math.nan, None, stats)

    eng = SimplexEngine(problem.with_bounds(lb0, ub0),
                        SimplexOptions(feas_tol=opt.feas_tol, deadline=deadline))
    budget = opt.snapshot_budget_mb * 1024 * 1024
    stored = 0
    incumbent = None
    inc_obj = -math.inf
    heap: list[_Node] = []
    seq = 0
    pseudo = _PseudoCosts(n)

    def gap(obj: float) -> float:
        return opt.rel_gap_tol * max(1.0, abs(obj)) if math.isfinite(obj) else 0.0

    def scaled_violation(x: np.ndarray) -> float:
        act = problem.A @ x
        s = problem.sense
        v = np.where(s == "L", act - problem.rhs, np.where(s == "G", problem.rhs - act, np.abs(act - problem.rhs)))
        return float((v / rownorm).max(initial=0.0))

    def try_incumbent(x: np.ndarray) -> bool:
        nonlocal incumbent, inc_obj
        xr = x.copy()
        xr[ints] = np.round(xr[ints])
        xr = np.clip(xr, lb0, ub0)
        if scaled_violation(xr) > 10 * opt.feas_tol:
            return False
        obj = float(problem.c @ xr)
        if obj > inc_obj:
            incumbent, inc_obj = xr, obj
            return True
        return False

    try:
        eng.cold_start()
        status = eng.reoptimize()
    except TimeoutError:
        stats.wall_time = time.perf_counter() - t0
        return MilpResult("GapLimit", math.nan, None, stats)
    if status == "Infeasible":
        stats.lp_iterations = eng.iterations
        stats.wall_time = time.perf_counter() - t0
        return MilpResult("Infeasible", math.nan, None, stats)
    if status == "Unbounded":
        raise SolverError("LP relaxation unbounded; every column needs finite bounds")

    root_x = eng.values()
    try_incumbent(root_x)  # LP rounding

    cur_lb, cur_ub = lb0.copy(), ub0.copy()
    cur_status = status
    cur_parent_bound = math.inf
    cur_branch = None
    cur_depth = 0
    limit_hit = False
    best_bound_seen = math.inf

    while True:
        stats.nodes += 1
        node_id = stats.nodes
        open_node = False
        if cur_status == "Optimal":
            bound = min(eng.objective(), cur_parent_bound)
            if cur_branch is not None and opt.branch_rule == "pseudo-cost":
                j, direction, dist = cur_branch
                pseudo.update(j, direction, dist, cur_parent_bound - bound)
            if bound > inc_obj + gap(inc_obj):
                x = eng.values()
                xi = x[ints]
                frac = np.abs(xi - np.round(xi))
                cand = np.flatnonzero(frac > opt.int_tol)
                if cand.size == 0:
                    try_incumbent(x)
                else:
                    open_node = True
        else:
            bound = -math.inf

        # global bound: best among open nodes, the current one and the incumbent
        open_best = max((-heap[0].key if heap else -math.inf), bound if open_node else -math.inf, inc_obj)
        best_bound_seen = min(best_bound_seen, open_best)
        stats.bound_history.append(best_bound_seen)
        _emit(opt.trace, f"{node_id} {best_bound_seen:.12g} {inc_obj:.12g}")

        if open_node:
            x = eng.values()
            xi = x[ints]
            fpart = xi - np.floor(xi)
            dist_half = np.abs(fpart - 0.5)
            cand = np.flatnonzero(np.minimum(fpart, 1 - fpart) > opt.int_tol)
            pick = None
            if opt.branch_rule == "pseudo-cost":
                sc = pseudo.score(ints[cand], fpart[cand])
                if sc is not None:
                    pick = cand[int(np.argmax(sc))]
            if pick is None:
                best = dist_half[cand].min()
                pick = cand[np.flatnonzero(dist_half[cand] <= best + 1e-12)[0]]
            j = int(ints[pick])
            v = x[j]
            f = v - math.floor(v)
            down_ub = cur_ub.copy()
            down_ub[j] = math.floor(v)
            up_lb = cur_lb.copy()
            up_lb[j] = math.ceil(v)
            go_up = f >= 0.5
            # queue the sibling with the parent's state
            with_tab = stored + eng.T.nbytes <= budget
            snap = eng.snapshot(with_tableau=with_tab)
            stored += snap.nbytes
            if go_up:
                sib = _Node(-bound, seq, cur_lb.copy(), down_ub, snap, cur_depth + 1, (j, 0, f))
            else:
                sib = _Node(-bound, seq, up_lb, cur_ub.copy(), snap, cur_depth + 1, (j, 1, 1 - f))
            seq += 1
            heapq.heappush(heap, sib)
            if go_up:
                cur_lb, cur_branch = up_lb, (j, 1, 1 - f)
            else:
                cur_ub, cur_branch = down_ub, (j, 0, f)
            cur_parent_bound = bound
            cur_depth += 1
        else:
            # backtrack to the best open node
            nxt = None
            while heap:
                cand_node = heapq.heappop(heap)
                stored -= cand_node.snap.nbytes
                if cand_node.bound > inc_obj + gap(inc_obj):
                    nxt = cand_node
                    break
            if nxt is None:
                break
            eng.restore(nxt.snap)
            cur_lb, cur_ub = nxt.lb, nxt.ub
            cur_parent_bound = nxt.bound
            cur_branch = nxt.branch
            cur_depth = nxt.depth

        if stats.nodes >= opt.node_limit or (deadline is not None and time.perf_counter() > deadline):
            limit_hit = True
            break
        try:
            eng.set_bounds(cur_lb, cur_ub)
            cur_status = eng.reoptimize()
        except TimeoutError:
            limit_hit = True
            break

    stats.lp_iterations = eng.iterations
    stats.wall_time = time.perf_counter() - t0
    stats.best_incumbent = inc_obj
    if limit_hit:
        remaining = max((-nd.key for nd in heap), default=-math.inf)
        stats.best_bound = max(inc_obj, remaining, cur_parent_bound if cur_parent_bound < math.inf else -math.inf)
        if incumbent is None:
            return MilpResult("GapLimit", math.nan, None, stats)
        if stats.best_bound <= inc_obj + gap(inc_obj):
            return MilpResult("Optimal", inc_obj, incumbent, stats)
        return MilpResult("GapLimit", inc_obj, incumbent, stats)
    stats.best_bound = inc_obj
    if incumbent is None:
        return MilpResult("Infeasible", math.nan, None, stats)
    return MilpResult("Optimal", inc_obj, incumbent, stats)


def solve_milp(problem: MilpProblem, options: SolverOptions | None = None) -> tuple[Solution, SolveStats]:
    """Solve a model built by :func:`~arcticspill.formulation.formulate`."""
    from .decomp import Decomposition, solve_decomposed

    opt = options or SolverOptions()
    dec = Decomposition.detect(problem) if opt.method != "monolithic" else None
    if opt.method == "decompose" and dec is None:
        raise SolverError("model has no small binary first stage to decompose on")
    res = solve_decomposed(problem, dec, opt) if dec is not None else branch_and_bound(problem, opt)
    if res.status == "Infeasible":
        raise InfeasibleError("model is infeasible")
    if res.x is None:
        raise SolverError("no feasible solution found within the limits")
    sol = decode(problem, res.x, res.objective, int_tol=opt.int_tol, status=res.status)
    return sol, res.stats
