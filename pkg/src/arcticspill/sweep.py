"""Weight sweeps over (k1, omega), best configuration and Pareto frontier."""
from __future__ import annotations

import csv
import io
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import IO, Callable, Iterable, Sequence

import numpy as np

from .core_model import ProblemInstance, Weights
from .errors import AllRunsFailed, ArcticSpillError
from .formulation import coverage_stats, formulate
from .solver.bnb import SolverOptions, solve_milp

CSV_FIELDS = ("k1", "k2", "omega1", "omega2", "omega3", "objective", "coverage", "cost",
              "norm_coverage", "norm_cost", "stations", "coverage_rate", "status")


@dataclass(frozen=True)
class WeightGrid:
    k1_values: tuple[float, ...] = tuple(round(0.1 * i, 10) for i in range(1, 10))
    omega_step: float = 0.1
    allow_zero: bool = False


def enumerate_grid(grid: WeightGrid = WeightGrid()) -> list[Weights]:
    """All (k1, omega) combinations in lexicographic order.

    With ``allow_zero`` one omega component may be zero; vectors that put all
    weight on a single criterion are always left out.
    """
    n = round(1.0 / grid.omega_step)
    if n < 1 or abs(n * grid.omega_step - 1.0) > 1e-9:
        raise ValueError(f"omega_step {grid.omega_step} does not divide 1")
    lo = 0 if grid.allow_zero else 1
    omegas = [(a, b, n - a - b) for a in range(lo, n + 1) for b in range(lo, n + 1)
              if n - a - b >= lo and sum(v > 0 for v in (a, b, n - a - b)) >= 2]
    out = []
    for k1 in grid.k1_values:
        for a, b, c in omegas:
            out.append(Weights.from_k1(float(k1), (a / n, b / n, c / n)))
    return out


@dataclass
class SweepRun:
    weights: Weights
    status: str
    objective: float = math.nan
    coverage_value: float = math.nan
    cost_value: float = math.nan
    normalized_coverage: float = math.nan
    normalized_cost: float = math.nan
    stations: tuple[int, ...] = ()
    coverage_rate: float = math.nan
    deployed_units: float = math.nan
    message: str = ""
    wall_time: float = field(default=0.0, compare=False)

    @property
    def ok(self) -> bool:
        return self.status in ("Optimal", "GapLimit")

    @property
    def station_mask(self) -> int:
        return sum(1 << i for i in self.stations)


def run_one(instance: ProblemInstance, weights: Weights, options: SolverOptions | None = None) -> SweepRun:
    t0 = time.perf_counter()
    try:
        sol, _ = solve_milp(formulate(instance, weights), options)
    except ArcticSpillError as exc:
        return SweepRun(weights, "Failed", message=f"{type(exc).__name__}: {exc}",
                        wall_time=time.perf_counter() - t0)
    cs = coverage_stats(sol, instance)
    return SweepRun(
        weights=weights, status=sol.status, objective=sol.objective,
        coverage_value=sol.coverage_term, cost_value=sol.cost_term,
        stations=tuple(sol.selected_stations), coverage_rate=cs.coverage_rate,
        deployed_units=float(sol.Z.sum()), wall_time=time.perf_counter() - t0,
    )


def _run_chunk(args) -> list[SweepRun]:
    instance, weights, options = args
    return [run_one(instance, w, options) for w in weights]


def _minmax(values: np.ndarray) -> np.ndarray:
    lo, hi = values.min(), values.max()
    if hi - lo <= 0:
        return np.ones_like(values)
    return (values - lo) / (hi - lo)


def normalize_runs(runs: Sequence[SweepRun]) -> None:
    """Min-max scale coverage and cost over the successful runs, in place."""
    ok = [r for r in runs if r.ok]
    if not ok:
        return
    cov = _minmax(np.array([r.coverage_value for r in ok]))
    cost = _minmax(np.array([r.cost_value for r in ok]))
    for r, c, k in zip(ok, cov, cost):
        r.normalized_coverage, r.normalized_cost = float(c), float(k)


def run_sweep(instance: ProblemInstance, grid: WeightGrid | Sequence[Weights] = WeightGrid(),
              options: SolverOptions | None = None, jobs: int = 1,
              progress: Callable[[int, int], None] | None = None) -> list[SweepRun]:
    """One solve per configuration; failures are kept as records."""
    weights = enumerate_grid(grid) if isinstance(grid, WeightGrid) else list(grid)
    opts = replace(options or SolverOptions(), trace=None)
    runs: list[SweepRun] = []
    if jobs <= 1 or len(weights) <= 1:
        for n, w in enumerate(weights, start=1):
            runs.append(run_one(instance, w, opts))
            if progress:
                progress(n, len(weights))
    else:
        size = max(1, math.ceil(len(weights) / (4 * jobs)))
        chunks = [weights[i:i + size] for i in range(0, len(weights), size)]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            # map keeps submission order, so results come back in grid order
            for part in pool.map(_run_chunk, [(instance, c, opts) for c in chunks]):
                runs.extend(part)
                if progress:
                    progress(len(runs), len(weights))
    normalize_runs(runs)
    return runs


def best_configuration(runs: Sequence[SweepRun]) -> SweepRun:
    ok = [r for r in runs if r.ok]
    if not ok:
        raise AllRunsFailed("no successful run in the sweep")
    top = max(r.objective for r in ok)
    tied = [r for r in ok if r.objective >= top - 1e-12 * max(1.0, abs(top))]
    return min(tied, key=lambda r: (r.cost_value, r.weights.as_tuple()))


@dataclass(frozen=True)
class ParetoPoint:
    run: SweepRun
    dominated: bool = False


def pareto_frontier(runs: Sequence[SweepRun]) -> list[ParetoPoint]:
    """Runs not dominated in (higher coverage, lower cost), by ascending cost.

    Duplicated points appear once (the first in grid order).
    """
    ok = [(n, r) for n, r in enumerate(runs) if r.ok]
    ok.sort(key=lambda t: (t[1].cost_value, -t[1].coverage_value, t[0]))
    out = []
    best_cov = -math.inf
    for _, r in ok:
        if r.coverage_value > best_cov:
            out.append(ParetoPoint(r))
            best_cov = r.coverage_value
    return out


def coverage_by_k1(runs: Sequence[SweepRun]) -> list[tuple[float, float, float, int]]:
    """(k1, mean coverage, std coverage, count) per k1 value."""
    groups: dict[float, list[float]] = {}
    for r in runs:
        if r.ok:
            groups.setdefault(round(r.weights.k1, 10), []).append(r.coverage_value)
    return [(k, float(np.mean(v)), float(np.std(v)), len(v)) for k, v in sorted(groups.items())]


# -- CSV ----------------------------------------------------------------------

def _f(v: float) -> str:
    return "" if not math.isfinite(v) else f"{v:.12g}"


def _row(r: SweepRun) -> list[str]:
    w = r.weights
    return [_f(w.k1), _f(w.k2), _f(w.omega1), _f(w.omega2), _f(w.omega3), _f(r.objective),
            _f(r.coverage_value), _f(r.cost_value), _f(r.normalized_coverage), _f(r.normalized_cost),
            str(r.station_mask) if r.ok else "", _f(r.coverage_rate), r.status]


def sweep_csv(runs: Iterable[SweepRun]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for r in runs:
        w.writerow(_row(r))
    return buf.getvalue()


def frontier_csv(points: Iterable[ParetoPoint]) -> str:
    return sweep_csv(p.run for p in points)


def read_sweep_csv(source: str | Path | IO[str]) -> list[SweepRun]:
    if isinstance(source, (str, Path)):
        text = Path(source).read_text(encoding="utf-8")
    else:
        text = source.read()
    rows = list(csv.DictReader(text.splitlines()))
    missing = [c for c in CSV_FIELDS if rows and c not in rows[0]]
    if missing:
        from .errors import SchemaError
        raise SchemaError(f"sweep CSV lacks column(s) {', '.join(missing)}")

    def num(s: str) -> float:
        return float(s) if s else math.nan

    out = []
    for row in rows:
        w = Weights(num(row["omega1"]), num(row["omega2"]), num(row["omega3"]), num(row["k1"]), num(row["k2"]))
        mask = int(row["stations"]) if row["stations"] else 0
        out.append(SweepRun(
            weights=w, status=row["status"], objective=num(row["objective"]),
            coverage_value=num(row["coverage"]), cost_value=num(row["cost"]),
            normalized_coverage=num(row["norm_coverage"]), normalized_cost=num(row["norm_cost"]),
            stations=tuple(i for i in range(mask.bit_length()) if mask >> i & 1),
            coverage_rate=num(row["coverage_rate"]),
        ))
    return out
