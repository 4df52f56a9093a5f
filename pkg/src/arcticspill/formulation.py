"""Sparse MILP for station siting and multi-resource allocation.

Variables (all per scenario except ``X``):

* ``X(i)``         station opened (binary)
* ``Y(i,o,k)``     station ``i`` covers spill ``o`` (binary, eligible pairs only)
* ``Z(i,o,k,r)``   units of resource ``r`` deployed from ``i`` to ``o``
* ``A(i,j,k,r)``   units of resource ``r`` transferred from ``i`` to ``j != i``
* ``T(o,k)``       response time at spill ``o`` in hours

The model maximises ``k1 * coverage - k2 * cost``.
"""
from __future__ import annotations

import io
import math
import warnings
from dataclasses import dataclass, field
from typing import IO, NamedTuple, Sequence

import numpy as np
import scipy.sparse as sp

from .core_model import ProblemInstance, Weights, normalize_coverage_terms
from .errors import InfeasibleDataWarning, IntegralityError, ObjectiveMismatch

LE, GE, EQ = "L", "G", "E"


class VarKey(NamedTuple):
    kind: str  # one of X, Y, Z, A, T
    idx: tuple[int, ...]

    def __str__(self) -> str:
        return f"{self.kind}({','.join(map(str, self.idx))})"

    @property
    def scenario(self) -> int | None:
        """Scenario index for second-stage columns, ``None`` for ``X``."""
        if self.kind in ("Y", "Z", "A"):
            return self.idx[2]
        if self.kind == "T":
            return self.idx[1]
        return None


@dataclass(eq=False)
class MilpProblem:
    """``max c @ x`` subject to ``A x (sense) rhs`` and ``lb <= x <= ub``."""

    c: np.ndarray
    A: sp.csr_matrix
    sense: np.ndarray  # "L", "G" or "E" per row
    rhs: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    is_int: np.ndarray
    keys: list = field(default_factory=list)
    row_names: list = field(default_factory=list)
    # unweighted split of the objective: c == k1 * c_cov - k2 * c_cost
    c_cov: np.ndarray | None = None
    c_cost: np.ndarray | None = None
    weights: Weights | None = None
    dims: tuple[int, int, int, int] | None = None  # (I, O, K, R)

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        n = self.c.size
        self.A = sp.csr_matrix(self.A, shape=(len(self.rhs), n), dtype=float)
        self.sense = np.asarray(self.sense, dtype="<U1").reshape(-1)
        self.rhs = np.asarray(self.rhs, dtype=float).reshape(-1)
        self.lb = np.asarray(self.lb, dtype=float)
        self.ub = np.asarray(self.ub, dtype=float)
        self.is_int = np.asarray(self.is_int, dtype=bool)
        if not self.keys:
            self.keys = [f"x{j}" for j in range(n)]
        if not self.row_names:
            self.row_names = [f"r{i}" for i in range(self.n_rows)]
        self.index = {k: j for j, k in enumerate(self.keys)}

    @property
    def n_cols(self) -> int:
        return self.c.size

    @property
    def n_rows(self) -> int:
        return self.rhs.size

    @property
    def columns(self) -> list[tuple]:
        return [(self.keys[j], self.lb[j], self.ub[j], bool(self.is_int[j]), self.c[j]) for j in range(self.n_cols)]

    @property
    def rows(self) -> list[tuple]:
        out = []
        for i in range(self.n_rows):
            lo, hi = self.A.indptr[i], self.A.indptr[i + 1]
            coefs = list(zip(self.A.indices[lo:hi].tolist(), self.A.data[lo:hi].tolist()))
            out.append((coefs, self.sense[i], self.rhs[i]))
        return out

    def count(self, kind: str) -> int:
        return sum(1 for k in self.keys if isinstance(k, VarKey) and k.kind == kind)

    def with_bounds(self, lb: np.ndarray | None = None, ub: np.ndarray | None = None) -> "MilpProblem":
        return MilpProblem(
            c=self.c, A=self.A, sense=self.sense, rhs=self.rhs,
            lb=self.lb if lb is None else lb, ub=self.ub if ub is None else ub,
            is_int=self.is_int, keys=self.keys, row_names=self.row_names,
            c_cov=self.c_cov, c_cost=self.c_cost, weights=self.weights, dims=self.dims,
        )

    def relaxed(self) -> "MilpProblem":
        p = self.with_bounds()
        p.is_int = np.zeros_like(self.is_int)
        return p

    def row_activity(self, x: np.ndarray) -> np.ndarray:
        return self.A @ np.asarray(x, dtype=float)

    def max_violation(self, x: np.ndarray) -> float:
        """Largest row or bound violation of ``x`` (0 when feasible)."""
        x = np.asarray(x, dtype=float)
        act = self.row_activity(x)
        viol = np.zeros(self.n_rows)
        le, ge, eq = self.sense == LE, self.sense == GE, self.sense == EQ
        viol[le] = act[le] - self.rhs[le]
        viol[ge] = self.rhs[ge] - act[ge]
        viol[eq] = np.abs(act[eq] - self.rhs[eq])
        worst = max(viol.max(initial=0.0), (self.lb - x).max(initial=0.0), (x - self.ub).max(initial=0.0))
        return float(max(worst, 0.0))


class _Builder:
    def __init__(self):
        self.keys: list[VarKey] = []
        self.lb: list[float] = []
        self.ub: list[float] = []
        self.is_int: list[bool] = []
        self.cov: list[float] = []
        self.cost: list[float] = []
        self.index: dict[VarKey, int] = {}
        self.ri: list[int] = []
        self.ci: list[int] = []
        self.vals: list[float] = []
        self.sense: list[str] = []
        self.rhs: list[float] = []
        self.names: list[str] = []

    def col(self, key: VarKey, lb: float, ub: float, integer: bool, cov: float = 0.0, cost: float = 0.0) -> int:
        j = len(self.keys)
        self.keys.append(key)
        self.lb.append(lb)
        self.ub.append(ub)
        self.is_int.append(integer)
        self.cov.append(cov)
        self.cost.append(cost)
        self.index[key] = j
        return j

    def row(self, coefs: Sequence[tuple[int, float]], sense: str, rhs: float, name: str) -> None:
        i = len(self.rhs)
        for j, v in coefs:
            if v != 0.0:
                self.ri.append(i)
                self.ci.append(j)
                self.vals.append(float(v))
        self.sense.append(sense)
        self.rhs.append(float(rhs))
        self.names.append(name)


def formulate(instance: ProblemInstance, weights: Weights | None = None) -> MilpProblem:
    """Build the two-stage MILP for ``instance``.

    Deviations from a literal transcription, all exact at integer points:

    * the bilinear inventory balance is replaced by the conservation form
      ``sum_o Z_io <= R_i + inflow - outflow``; transfers at closed stations are
      excluded by sender and receiver gates ``A_ij <= R_i X_i`` and
      ``A_ij <= R_i X_j``;
    * the ``T * Y`` product in the objective becomes a bare ``T`` term, which is
      tight because ``T`` is pushed to its lower bound and forced to zero when
      the spill is left uncovered;
    * the two deployment caps ``Z <= d Y`` and ``Z <= R Y`` are merged into
      ``Z <= min(d, R) Y``;
    * the prep-time bound is data (it holds by construction), not a row.
    """
    w = weights or instance.weights
    n_i, n_o, n_k, n_r = instance.n_stations, instance.n_spills, instance.n_scenarios, instance.n_resources
    cfg = instance.config
    tau = cfg.tau_max
    rho = instance.probabilities
    inv = instance.inventory
    dem = instance.demand
    theta = instance.derived.travel_time
    pt = instance.derived.prep_time
    dc = instance.derived.deploy_cost / (cfg.money_scale * cfg.cost_scale)
    tc = instance.derived.transfer_cost / (cfg.money_scale * cfg.cost_scale)
    v_hat, eta_hat = normalize_coverage_terms(instance)
    eligible = [instance.eligible_stations(o) for o in range(n_o)]

    b = _Builder()
    X = [b.col(VarKey("X", (i,)), 0.0, 1.0, True, cost=instance.stations[i].opening_cost / cfg.cost_scale)
         for i in range(n_i)]
    Y: dict[tuple[int, int, int], int] = {}
    Z: dict[tuple[int, int, int, int], int] = {}
    A: dict[tuple[int, int, int, int], int] = {}
    T: dict[tuple[int, int], int] = {}
    unreachable = 0
    for k in range(n_k):
        for o in range(n_o):
            gain = w.omega1 * v_hat[o, k] + w.omega2 * eta_hat[o, k]
            for i in eligible[o]:
                Y[i, o, k] = b.col(VarKey("Y", (i, o, k)), 0.0, 1.0, True, cov=rho[k] * gain)
            for i in eligible[o]:
                for r in range(n_r):
                    cap = min(dem[o, k, r], inv[i, r])
                    Z[i, o, k, r] = b.col(VarKey("Z", (i, o, k, r)), 0.0, cap, False, cost=rho[k] * dc[i, o])
            if not any(theta[i, o] + pt[i, o, k] <= tau for i in eligible[o]):
                unreachable += 1
        for i in range(n_i if n_o else 0):
            for j in range(n_i):
                if i == j:
                    continue
                for r in range(n_r):
                    A[i, j, k, r] = b.col(VarKey("A", (i, j, k, r)), 0.0, inv[i, r], False, cost=rho[k] * tc[i, j])
        for o in range(n_o):
            T[o, k] = b.col(VarKey("T", (o, k)), 0.0, tau, False, cov=-rho[k] * w.omega3 / tau)
    if unreachable:
        warnings.warn(f"{unreachable} spill-scenario pairs have no station within the response window",
                      InfeasibleDataWarning, stacklevel=2)

    # station activation and budget
    for (i, o, k), y in Y.items():
        b.row([(y, 1.0), (X[i], -1.0)], LE, 0.0, f"link[{i},{o},{k}]")
    b.row([(x, 1.0) for x in X], LE, float(cfg.n_max_stations), "budget")

    for k in range(n_k):
        for o in range(n_o):
            ys = [Y[i, o, k] for i in eligible[o]]
            if len(ys) > 1:
                b.row([(y, 1.0) for y in ys], LE, 1.0, f"single[{o},{k}]")
            for i in eligible[o]:
                for r in range(n_r):
                    cap = min(dem[o, k, r], inv[i, r])
                    if cap > 0:
                        b.row([(Z[i, o, k, r], 1.0), (Y[i, o, k], -cap)], LE, 0.0, f"deploy_cap[{i},{o},{k},{r}]")
            for r in range(n_r):
                if dem[o, k, r] > 0 and ys:
                    coefs = [(Y[i, o, k], dem[o, k, r]) for i in eligible[o]]
                    coefs += [(Z[i, o, k, r], -1.0) for i in eligible[o]]
                    b.row(coefs, LE, 0.0, f"demand[{o},{k},{r}]")
            for i in eligible[o]:
                lead = theta[i, o] + pt[i, o, k]
                if lead > 0:
                    b.row([(Y[i, o, k], lead), (T[o, k], -1.0)], LE, 0.0, f"arrival[{i},{o},{k}]")
            b.row([(T[o, k], 1.0)] + [(Y[i, o, k], -tau) for i in eligible[o]], LE, 0.0, f"window[{o},{k}]")

        for i in range(n_i if n_o else 0):
            for r in range(n_r):
                coefs = [(Z[i, o, k, r], 1.0) for o in range(n_o) if (i, o, k, r) in Z]
                coefs += [(A[i, j, k, r], 1.0) for j in range(n_i) if j != i]
                coefs += [(A[j, i, k, r], -1.0) for j in range(n_i) if j != i]
                if coefs:
                    b.row(coefs, LE, inv[i, r], f"balance[{i},{k},{r}]")
        for i in range(n_i if n_o else 0):
            for j in range(n_i):
                if i == j:
                    continue
                for r in range(n_r):
                    a = A[i, j, k, r]
                    b.row([(a, 1.0), (X[i], -inv[i, r])], LE, 0.0, f"send_gate[{i},{j},{k},{r}]")
                    b.row([(a, 1.0), (X[j], -inv[i, r])], LE, 0.0, f"recv_gate[{i},{j},{k},{r}]")

    n = len(b.keys)
    mat = sp.csr_matrix((b.vals, (b.ri, b.ci)), shape=(len(b.rhs), n))
    cov = np.array(b.cov)
    cost = np.array(b.cost)
    return MilpProblem(
        c=w.k1 * cov - w.k2 * cost,
        A=mat,
        sense=np.array(b.sense, dtype="<U1"),
        rhs=np.array(b.rhs),
        lb=np.array(b.lb),
        ub=np.array(b.ub),
        is_int=np.array(b.is_int, dtype=bool),
        keys=b.keys,
        row_names=b.names,
        c_cov=cov,
        c_cost=cost,
        weights=w,
        dims=(n_i, n_o, n_k, n_r),
    )


@dataclass(eq=False)
class Solution:
    objective: float
    coverage_term: float
    cost_term: float
    X: np.ndarray  # (I,)
    Y: np.ndarray  # (I, O, K)
    Z: np.ndarray  # (I, O, K, R)
    A: np.ndarray  # (I, I, K, R)
    T: np.ndarray  # (O, K)
    status: str = "Optimal"
    values: np.ndarray | None = None

    @property
    def selected_stations(self) -> list[int]:
        return [int(i) for i in np.flatnonzero(self.X > 0.5)]

    @property
    def covered(self) -> np.ndarray:
        """(O, K) boolean coverage mask."""
        return self.Y.sum(axis=0) > 0.5

    def fixed_cost(self, instance: ProblemInstance) -> float:
        return float(instance.opening_costs @ self.X)


def decode(problem: MilpProblem, values: np.ndarray, objective: float | None = None,
           int_tol: float = 1e-6, status: str = "Optimal") -> Solution:
    """Round binaries, rebuild domain arrays and cross-check the objective."""
    x = np.array(values, dtype=float).reshape(-1)
    if x.size != problem.n_cols:
        raise ValueError(f"expected {problem.n_cols} values, got {x.size}")
    ints = problem.is_int
    rounded = np.round(x[ints])
    resid = np.abs(x[ints] - rounded)
    if resid.size and resid.max() > int_tol:
        j = int(np.flatnonzero(ints)[np.argmax(resid)])
        raise IntegralityError(f"column {problem.keys[j]} = {x[j]!r} is not integral")
    x[ints] = rounded
    # continuous columns may carry round-off outside their bounds
    x = np.clip(x, problem.lb, problem.ub)

    obj = float(problem.c @ x)
    if objective is not None and abs(obj - objective) > 1e-5 * max(1.0, abs(objective)):
        raise ObjectiveMismatch(f"recomputed objective {obj} differs from solver value {objective}")

    n_i, n_o, n_k, n_r = problem.dims
    X = np.zeros(n_i)
    Y = np.zeros((n_i, n_o, n_k))
    Z = np.zeros((n_i, n_o, n_k, n_r))
    A = np.zeros((n_i, n_i, n_k, n_r))
    T = np.zeros((n_o, n_k))
    target = {"X": X, "Y": Y, "Z": Z, "A": A, "T": T}
    for j, key in enumerate(problem.keys):
        target[key.kind][key.idx] = x[j]
    cov = float(problem.c_cov @ x)
    cost = float(problem.c_cost @ x)
    return Solution(objective=obj, coverage_term=cov, cost_term=cost, X=X, Y=Y, Z=Z, A=A, T=T,
                    status=status, values=x)


@dataclass
class CoverageStats:
    covered_per_scenario: list[int]
    covered_pairs: int
    total_pairs: int
    coverage_rate: float
    utilization: np.ndarray  # (I, R) peak share of inventory used over scenarios

    def as_dict(self) -> dict:
        return {
            "covered_per_scenario": self.covered_per_scenario,
            "covered_pairs": self.covered_pairs,
            "total_pairs": self.total_pairs,
            "coverage_rate": self.coverage_rate,
            "utilization": self.utilization.tolist(),
        }


def coverage_stats(solution: Solution, instance: ProblemInstance) -> CoverageStats:
    covered = solution.covered
    n_o, n_k = covered.shape
    total = n_o * n_k
    used = solution.Z.sum(axis=1) + solution.A.sum(axis=1)  # (I, K, R)
    inv = instance.inventory
    with np.errstate(divide="ignore", invalid="ignore"):
        share = np.where(inv[:, None, :] > 0, used / inv[:, None, :], 0.0)
    util = share.max(axis=1) if n_k else np.zeros_like(inv)
    pairs = int(covered.sum())
    return CoverageStats(
        covered_per_scenario=[int(c) for c in covered.sum(axis=0)],
        covered_pairs=pairs,
        total_pairs=total,
        coverage_rate=pairs / total if total else 0.0,
        utilization=util,
    )


def check_invariants(solution: Solution, instance: ProblemInstance, tol: float = 1e-6) -> list[str]:
    """Return human-readable violations of the model's structural properties."""
    out = []
    inv = instance.inventory
    dem = instance.demand
    X, Y, Z, A, T = solution.X, solution.Y, solution.Z, solution.A, solution.T
    n_i, n_o, n_k, n_r = Z.shape
    w = instance.weights
    lead = instance.derived.travel_time[:, :, None] + instance.derived.prep_time

    if X.sum() > instance.config.n_max_stations + tol:
        out.append(f"budget: {X.sum():.0f} stations open, limit {instance.config.n_max_stations}")
    for k in range(n_k):
        for o in range(n_o):
            n_cov = Y[:, o, k].sum()
            if n_cov > 1 + tol:
                out.append(f"spill {o} scenario {k} assigned {n_cov:.0f} times")
            for i in np.flatnonzero(Y[:, o, k] > 0.5):
                if X[i] < 0.5:
                    out.append(f"phantom: Y[{i},{o},{k}] with station closed")
            if n_cov > 0.5:
                for r in range(n_r):
                    got = Z[:, o, k, r].sum()
                    if abs(got - dem[o, k, r]) > tol * max(1.0, dem[o, k, r]):
                        out.append(f"demand: spill {o} scen {k} res {r} got {got} of {dem[o, k, r]}")
                i = int(np.argmax(Y[:, o, k]))
                if T[o, k] > instance.config.tau_max + tol:
                    out.append(f"window: T[{o},{k}] = {T[o, k]} exceeds tau_max")
                if T[o, k] < lead[i, o, k] - tol:
                    out.append(f"arrival: T[{o},{k}] = {T[o, k]} below lead time {lead[i, o, k]}")
                if w.k1 * w.omega3 > 0 and abs(T[o, k] - lead[i, o, k]) > tol * max(1.0, lead[i, o, k]):
                    out.append(f"linearization: T[{o},{k}] = {T[o, k]} != {lead[i, o, k]}")
            else:
                if T[o, k] > tol:
                    out.append(f"linearization: uncovered T[{o},{k}] = {T[o, k]}")
                if np.abs(Z[:, o, k, :]).max(initial=0.0) > tol:
                    out.append(f"deployment to uncovered spill {o} in scenario {k}")
        for r in range(n_r):
            for i in range(n_i):
                net = Z[i, :, k, r].sum() + A[i, :, k, r].sum() - A[:, i, k, r].sum()
                if net > inv[i, r] + tol * max(1.0, inv[i, r]):
                    out.append(f"balance: station {i} scen {k} res {r} uses {net} of {inv[i, r]}")
                for j in range(n_i):
                    if A[i, j, k, r] > tol and (X[i] < 0.5 or X[j] < 0.5):
                        out.append(f"phantom: transfer {i}->{j} scen {k} res {r} touches a closed station")
    recomposed = w.k1 * solution.coverage_term - w.k2 * solution.cost_term
    if abs(recomposed - solution.objective) > tol * max(1.0, abs(solution.objective)):
        out.append(f"objective {solution.objective} != k1*coverage - k2*cost = {recomposed}")
    return out


# ---------------------------------------------------------------------------
# MPS export


def _mps_num(v: float) -> str:
    s = repr(float(v))
    if len(s) > 12:
        s = f"{v:.6g}"
        if len(s) > 12:
            s = f"{v:.5e}"
    return s


def write_mps(problem: MilpProblem, out: IO[str] | None = None, name: str = "SPILLRSP") -> str:
    """Fixed-width MPS with an ``OBJSENSE MAX`` section.

    Column and row names are positional (``C0000001``/``R0000001``) so they fit
    the eight-character fields; the mapping to model keys is written as
    comment lines.
    """
    buf = io.StringIO()
    w = buf.write
    cname = [f"C{j:07d}" for j in range(problem.n_cols)]
    rname = [f"R{i:07d}" for i in range(problem.n_rows)]
    w("* objective sense: MAXIMIZE (see OBJSENSE); coefficients are not negated\n")
    for j, key in enumerate(problem.keys):
        w(f"* {cname[j]} {key}\n")
    for i, rn in enumerate(problem.row_names):
        w(f"* {rname[i]} {rn}\n")
    w(f"NAME          {name[:8]}\n")
    w("OBJSENSE\n    MAX\n")
    w("ROWS\n")
    w(" N  OBJ\n")
    for i in range(problem.n_rows):
        w(f" {problem.sense[i]}  {rname[i]}\n")
    w("COLUMNS\n")
    csc = problem.A.tocsc()
    in_int = False
    marker = 0
    for j in range(problem.n_cols):
        if problem.is_int[j] and not in_int:
            w(f"    M{marker:07d}  'MARKER'                 'INTORG'\n")
            marker += 1
            in_int = True
        elif not problem.is_int[j] and in_int:
            w(f"    M{marker:07d}  'MARKER'                 'INTEND'\n")
            marker += 1
            in_int = False
        entries = []
        if problem.c[j] != 0.0:
            entries.append(("OBJ", problem.c[j]))
        lo, hi = csc.indptr[j], csc.indptr[j + 1]
        entries += [(rname[i], v) for i, v in zip(csc.indices[lo:hi], csc.data[lo:hi])]
        if not entries:
            entries.append(("OBJ", 0.0))
        for a in range(0, len(entries), 2):
            line = f"    {cname[j]:<8}  {entries[a][0]:<8}  {_mps_num(entries[a][1]):>12}"
            if a + 1 < len(entries):
                line += f"   {entries[a + 1][0]:<8}  {_mps_num(entries[a + 1][1]):>12}"
            w(line + "\n")
    if in_int:
        w(f"    M{marker:07d}  'MARKER'                 'INTEND'\n")
    w("RHS\n")
    for i in range(problem.n_rows):
        if problem.rhs[i] != 0.0:
            w(f"    RHS       {rname[i]:<8}  {_mps_num(problem.rhs[i]):>12}\n")
    w("BOUNDS\n")
    for j in range(problem.n_cols):
        lb, ub = problem.lb[j], problem.ub[j]
        if lb == ub:
            w(f" FX BND       {cname[j]:<8}  {_mps_num(lb):>12}\n")
            continue
        if lb != 0.0:
            w(f" LO BND       {cname[j]:<8}  {_mps_num(lb):>12}\n")
        if math.isfinite(ub):
            w(f" UP BND       {cname[j]:<8}  {_mps_num(ub):>12}\n")
        else:
            w(f" PL BND       {cname[j]:<8}\n")
    w("ENDATA\n")
    text = buf.getvalue()
    if out is not None:
        out.write(text)
    return text


def read_mps(text: str) -> MilpProblem:
    """Parse the subset of fixed MPS produced by :func:`write_mps`."""
    section = None
    sense_max = False
    row_sense: dict[str, str] = {}
    row_order: list[str] = []
    obj_row = None
    cols: list[str] = []
    col_idx: dict[str, int] = {}
    entries: list[tuple[str, str, float]] = []
    is_int: list[bool] = []
    rhs: dict[str, float] = {}
    bounds: list[tuple[str, str, float]] = []
    integer = False
    for raw in text.splitlines():
        if not raw.strip() or raw.startswith("*"):
            continue
        if not raw.startswith(" "):
            section = raw.split()[0]
            continue
        parts = raw.split()
        if section == "OBJSENSE":
            sense_max = parts[0].upper().startswith("MAX")
        elif section == "ROWS":
            if parts[0] == "N":
                obj_row = parts[1]
            else:
                row_sense[parts[1]] = parts[0]
                row_order.append(parts[1])
        elif section == "COLUMNS":
            if len(parts) >= 3 and parts[1] == "'MARKER'":
                integer = parts[2] == "'INTORG'"
                continue
            c = parts[0]
            if c not in col_idx:
                col_idx[c] = len(cols)
                cols.append(c)
                is_int.append(integer)
            for a in range(1, len(parts), 2):
                entries.append((c, parts[a], float(parts[a + 1])))
        elif section == "RHS":
            for a in range(1, len(parts), 2):
                rhs[parts[a]] = float(parts[a + 1])
        elif section == "BOUNDS":
            bounds.append((parts[0], parts[2], float(parts[3]) if len(parts) > 3 else math.inf))
    n = len(cols)
    ridx = {r: i for i, r in enumerate(row_order)}
    c = np.zeros(n)
    ri, ci, vals = [], [], []
    for col, row, v in entries:
        if row == obj_row:
            c[col_idx[col]] = v
        else:
            ri.append(ridx[row])
            ci.append(col_idx[col])
            vals.append(v)
    lb = np.zeros(n)
    ub = np.full(n, math.inf)
    for kind, col, v in bounds:
        j = col_idx[col]
        if kind == "UP":
            ub[j] = v
        elif kind == "LO":
            lb[j] = v
        elif kind == "FX":
            lb[j] = ub[j] = v
        elif kind == "PL":
            ub[j] = math.inf
    if not sense_max:
        c = -c
    return MilpProblem(
        c=c,
        A=sp.csr_matrix((vals, (ri, ci)), shape=(len(row_order), n)),
        sense=np.array([row_sense[r] for r in row_order], dtype="<U1"),
        rhs=np.array([rhs.get(r, 0.0) for r in row_order]),
        lb=lb, ub=ub, is_int=np.array(is_int, dtype=bool), keys=cols, row_names=row_order,
    )
