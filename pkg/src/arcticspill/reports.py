"""CSV/JSON tables and hand-written SVG figures.

SVG output is deterministic: fixed viewport, fixed number formatting, no
timestamps or random ids.
"""
from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path
from typing import Sequence
from xml.sax.saxutils import escape

import numpy as np

from .core_model import ProblemInstance
from .evaluation import VoiReport
from .formulation import Solution, coverage_stats
from .sweep import ParetoPoint, SweepRun, coverage_by_k1

W, H = 640, 480
PAD = 56


def _csv(header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _g(v: float) -> str:
    return f"{v:.10g}"


# -- tables -------------------------------------------------------------------

def assignments_csv(solution: Solution, instance: ProblemInstance) -> str:
    res = [r.name for r in instance.resources]
    rows = []
    for k, sc in enumerate(instance.scenarios):
        for o, sp in enumerate(instance.spills):
            for i in np.flatnonzero(solution.Y[:, o, k] > 0.5):
                rows.append([sc.id, sp.id, instance.stations[i].id, _g(solution.T[o, k]),
                             *[_g(solution.Z[:, o, k, r].sum()) for r in range(len(res))]])
    return _csv(["scenario", "spill", "station", "response_time_h", *res], rows)


def transfers_csv(solution: Solution, instance: ProblemInstance, tol: float = 1e-9) -> str:
    rows = []
    for i, j, k, r in zip(*np.nonzero(solution.A > tol)):
        rows.append([instance.scenarios[k].id, instance.stations[i].id, instance.stations[j].id,
                     instance.resources[r].name, _g(solution.A[i, j, k, r])])
    return _csv(["scenario", "from_station", "to_station", "resource", "amount"], rows)


def utilization_csv(solution: Solution, instance: ProblemInstance) -> str:
    util = coverage_stats(solution, instance).utilization
    rows = [[s.id, r.name, _g(util[i, n])] for i, s in enumerate(instance.stations)
            for n, r in enumerate(instance.resources)]
    return _csv(["station", "resource", "peak_utilization"], rows)


def solution_json(solution: Solution, instance: ProblemInstance) -> str:
    cs = coverage_stats(solution, instance)
    doc = {
        "status": solution.status,
        "objective": solution.objective,
        "coverage_term": solution.coverage_term,
        "cost_term": solution.cost_term,
        "selected_stations": [instance.stations[i].id for i in solution.selected_stations],
        "fixed_cost": solution.fixed_cost(instance),
        "coverage": cs.as_dict(),
    }
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"


def voi_csv(report: VoiReport) -> str:
    return _csv(["metric", "value", "relative_percent"],
                [[k, _g(v), _g(p) if math.isfinite(p) else ""] for k, v, p in report.rows()])


# -- SVG ----------------------------------------------------------------------

class _Canvas:
    def __init__(self, title: str):
        self.parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
            f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>',
            f'<text x="{W / 2:.1f}" y="24" text-anchor="middle" font-family="sans-serif" font-size="15">{escape(title)}</text>',
        ]

    def add(self, s: str) -> None:
        self.parts.append(s)

    def render(self) -> str:
        return "\n".join(self.parts + ["</svg>"]) + "\n"


class _Scale:
    def __init__(self, lo: float, hi: float, a: float, b: float):
        if not hi > lo:
            lo, hi = lo - 0.5, hi + 0.5
        span = hi - lo
        self.lo, self.hi = lo - 0.05 * span, hi + 0.05 * span
        self.a, self.b = a, b

    def __call__(self, v: float) -> float:
        return self.a + (v - self.lo) / (self.hi - self.lo) * (self.b - self.a)

    def ticks(self, n: int = 5) -> list[float]:
        return [self.lo + (self.hi - self.lo) * t / n for t in range(n + 1)]


def _axes(cv: _Canvas, sx: _Scale, sy: _Scale, xlabel: str, ylabel: str) -> None:
    x0, x1, y0, y1 = PAD, W - PAD / 2, H - PAD, PAD
    cv.add(f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>')
    cv.add(f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>')
    for t in sx.ticks():
        cv.add(f'<text x="{sx(t):.2f}" y="{y0 + 16}" text-anchor="middle" font-family="sans-serif" font-size="10">{t:.3g}</text>')
    for t in sy.ticks():
        cv.add(f'<text x="{x0 - 6}" y="{sy(t) + 3:.2f}" text-anchor="end" font-family="sans-serif" font-size="10">{t:.3g}</text>')
    cv.add(f'<text x="{(x0 + x1) / 2:.1f}" y="{H - 14}" text-anchor="middle" font-family="sans-serif" font-size="12">{escape(xlabel)}</text>')
    cv.add(f'<text x="14" y="{(y0 + y1) / 2:.1f}" text-anchor="middle" font-family="sans-serif" font-size="12" '
           f'transform="rotate(-90 14 {(y0 + y1) / 2:.1f})">{escape(ylabel)}</text>')


def assignment_svg(solution: Solution, instance: ProblemInstance, k: int) -> str:
    """Schematic map of one scenario: stations, spills and assignment edges."""
    lats = [s.lat for s in instance.stations] + [o.lat for o in instance.spills]
    lons = [s.lon for s in instance.stations] + [o.lon for o in instance.spills]
    sx = _Scale(min(lons), max(lons), PAD, W - PAD / 2)
    sy = _Scale(min(lats), max(lats), H - PAD, PAD)
    cv = _Canvas(f"Scenario {instance.scenarios[k].id}: assignments")
    _axes(cv, sx, sy, "longitude", "latitude")
    for o, sp in enumerate(instance.spills):
        for i in np.flatnonzero(solution.Y[:, o, k] > 0.5):
            st = instance.stations[i]
            cv.add(f'<line x1="{sx(st.lon):.2f}" y1="{sy(st.lat):.2f}" x2="{sx(sp.lon):.2f}" y2="{sy(sp.lat):.2f}" '
                   f'stroke="#1f77b4" stroke-width="1.2"/>')
    for o, sp in enumerate(instance.spills):
        covered = solution.Y[:, o, k].sum() > 0.5
        fill = "#d62728" if covered else "#bbbbbb"
        cv.add(f'<circle cx="{sx(sp.lon):.2f}" cy="{sy(sp.lat):.2f}" r="4" fill="{fill}"/>')
    for i, st in enumerate(instance.stations):
        fill = "#2ca02c" if solution.X[i] > 0.5 else "white"
        x, y = sx(st.lon), sy(st.lat)
        cv.add(f'<rect x="{x - 6:.2f}" y="{y - 6:.2f}" width="12" height="12" fill="{fill}" stroke="black"/>')
        cv.add(f'<text x="{x + 8:.2f}" y="{y - 8:.2f}" font-family="sans-serif" font-size="10">{escape(st.name)}</text>')
    return cv.render()


def k1_coverage_svg(runs: Sequence[SweepRun]) -> str:
    """Mean coverage against k1 with a one-standard-deviation band."""
    stats = coverage_by_k1(runs)
    cv = _Canvas("Coverage value against k1")
    if not stats:
        return cv.render()
    ks = [s[0] for s in stats]
    lo = [s[1] - s[2] for s in stats]
    hi = [s[1] + s[2] for s in stats]
    sx = _Scale(min(ks), max(ks), PAD, W - PAD / 2)
    sy = _Scale(min(lo), max(hi), H - PAD, PAD)
    _axes(cv, sx, sy, "k1", "weighted coverage value")
    band = [f"{sx(k):.2f},{sy(v):.2f}" for k, v in zip(ks, hi)] + \
           [f"{sx(k):.2f},{sy(v):.2f}" for k, v in zip(reversed(ks), reversed(lo))]
    cv.add(f'<polygon points="{" ".join(band)}" fill="#1f77b4" fill-opacity="0.2" stroke="none"/>')
    line = " ".join(f"{sx(k):.2f},{sy(m):.2f}" for k, m, _, _ in stats)
    cv.add(f'<polyline points="{line}" fill="none" stroke="#1f77b4" stroke-width="2"/>')
    for k, m, _, _ in stats:
        cv.add(f'<circle cx="{sx(k):.2f}" cy="{sy(m):.2f}" r="3" fill="#1f77b4"/>')
    return cv.render()


def pareto_svg(runs: Sequence[SweepRun], frontier: Sequence[ParetoPoint]) -> str:
    """Normalized cost against normalized coverage, frontier highlighted."""
    cv = _Canvas("Pareto frontier (normalized)")
    ok = [r for r in runs if r.ok]
    sx = _Scale(0.0, 1.0, PAD, W - PAD / 2)
    sy = _Scale(0.0, 1.0, H - PAD, PAD)
    _axes(cv, sx, sy, "normalized cost", "normalized coverage")
    for r in ok:
        cv.add(f'<circle cx="{sx(r.normalized_cost):.2f}" cy="{sy(r.normalized_coverage):.2f}" r="2.5" fill="#999999"/>')
    pts = sorted((p.run.normalized_cost, p.run.normalized_coverage) for p in frontier)
    if pts:
        cv.add('<polyline points="' + " ".join(f"{sx(c):.2f},{sy(v):.2f}" for c, v in pts)
               + '" fill="none" stroke="#d62728" stroke-width="1.5"/>')
        for c, v in pts:
            cv.add(f'<circle cx="{sx(c):.2f}" cy="{sy(v):.2f}" r="3.5" fill="#d62728"/>')
    return cv.render()


def write_text(path: Path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    return path
