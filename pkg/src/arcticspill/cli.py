"""Command line interface.

Exit codes: 0 success, 2 validation failure, 3 solver failure, 4 I/O failure.
"""
from __future__ import annotations

import argparse
import sys
import warnings
from pathlib import Path

from . import __version__
from .core_model import Weights
from .errors import SolverError, ValidationError
from .evaluation import evaluate
from .formulation import coverage_stats, formulate, write_mps
from .io import (InputBundle, config_to_dict, data_check, instance_from_parsed, make_scenarios,
                 read_bundle, scenarios_to_json, write_manifest)
from .reports import (assignment_svg, assignments_csv, k1_coverage_svg, pareto_svg, solution_json,
                      transfers_csv, utilization_csv, voi_csv, write_text)
from .repair import repair_loop
from .scenarios import fit_exponential, ks_test, validate_scenarios
from .solver.bnb import SolverOptions, solve_milp
from .sweep import (WeightGrid, best_configuration, frontier_csv, pareto_frontier, read_sweep_csv,
                    run_sweep, sweep_csv)

EXIT_OK, EXIT_VALIDATION, EXIT_SOLVER, EXIT_IO = 0, 2, 3, 4


def _weights(text: str | None, default: Weights) -> Weights:
    if not text:
        return default
    parts = [float(x) for x in text.split(",")]
    if len(parts) != 4:
        raise ValidationError("--weights expects k1,w1,w2,w3")
    return Weights.from_k1(parts[0], parts[1:])


def _options(args) -> SolverOptions:
    trace = None
    if getattr(args, "trace", None):
        trace = open(args.trace, "w", encoding="utf-8")
        args.open_files.append(trace)
    return SolverOptions(time_limit=getattr(args, "time_limit", None), trace=trace,
                         branch_rule=getattr(args, "branch_rule", "most-fractional"))


def _out(args, default: str) -> Path:
    return Path(args.out) if args.out else Path(default)


def cmd_validate(args) -> int:
    issues = data_check(args.bundle)
    for line in issues:
        print(line)
    errors = [i for i in issues if i.startswith("error:")]
    if not errors:
        print(f"ok: {args.bundle} is valid ({len(issues)} warning(s))")
    return EXIT_VALIDATION if errors else EXIT_OK


def cmd_gen_scenarios(args) -> int:
    parsed = read_bundle(args.bundle)
    ss = make_scenarios(parsed.spills, parsed.resources, parsed.config, seed=args.seed, n_stochastic=args.n)
    out = Path(args.out) if args.out else Path(args.bundle) / "scenarios.json"
    write_text(out, scenarios_to_json(ss, parsed.spills, parsed.resources))
    vols = [s.base_volume for s in parsed.spills]
    fit = fit_exponential(vols)
    ks = ks_test(vols, fit)
    print(f"fitted rate {fit.rate:.6g} 1/gal (mean {fit.mean:.1f} gal), KS D = {ks.statistic:.4f}, p = {ks.p_value:.4f}, n = {ks.n}")
    if len(ss) >= 3:
        val = validate_scenarios(ss, tol=parsed.config.sampling.validation_tol,
                                 resource_names=[r.name for r in parsed.resources])
        for name, (m, s) in val.deviations.items():
            print(f"  {name:<20} mean dev {100 * m:6.2f}%  std dev {100 * s:6.2f}%")
        print("validation: " + ("pass" if val.passed else "fail (" + ", ".join(val.failures()) + ")"))
    print(f"wrote {len(ss)} scenarios to {out}")
    write_manifest(out.parent, "gen-scenarios", InputBundle(args.bundle).input_files(),
                   config_to_dict(parsed.config), seed=ss.seed)
    return EXIT_OK


def cmd_solve(args) -> int:
    parsed = read_bundle(args.bundle)
    inst = instance_from_parsed(parsed)
    inst = inst.with_weights(_weights(args.weights, inst.weights))
    opts = _options(args)
    if args.repair:
        rr = repair_loop(inst, opts)
        sol, inst = rr.solution, rr.instance
    else:
        sol, _ = solve_milp(formulate(inst), opts)
    out = _out(args, "out/solve")
    write_text(out / "solution.json", solution_json(sol, inst))
    write_text(out / "assignments.csv", assignments_csv(sol, inst))
    write_text(out / "transfers.csv", transfers_csv(sol, inst))
    write_text(out / "utilization.csv", utilization_csv(sol, inst))
    for k, sc in enumerate(inst.scenarios):
        write_text(out / f"scenario_{sc.id}.svg", assignment_svg(sol, inst, k))
    write_manifest(out, "solve", InputBundle(args.bundle).input_files(), config_to_dict(parsed.config))
    cs = coverage_stats(sol, inst)
    names = [inst.stations[i].name for i in sol.selected_stations]
    print(f"status {sol.status}, objective {sol.objective:.6f}")
    print(f"stations: {', '.join(names) or 'none'} (fixed cost {sol.fixed_cost(inst):g})")
    print(f"covered {cs.covered_pairs} of {cs.total_pairs} spill-scenario pairs ({100 * cs.coverage_rate:.1f}%)")
    print(f"wrote {out}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    parsed = read_bundle(args.bundle)
    inst = instance_from_parsed(parsed)
    inst = inst.with_weights(_weights(args.weights, inst.weights))
    ev = evaluate(inst, options=_options(args))
    out = _out(args, "out/evaluate")
    write_text(out / "voi.json", ev.report.to_json())
    write_text(out / "voi.csv", voi_csv(ev.report))
    write_manifest(out, "evaluate", InputBundle(args.bundle).input_files(), config_to_dict(parsed.config))
    print(ev.report.to_text(), end="")
    return EXIT_OK


def _steps(step: float) -> tuple[float, ...]:
    n = round(1.0 / step)
    if abs(n * step - 1.0) > 1e-9:
        raise ValidationError(f"step {step} does not divide 1")
    return tuple(round(i / n, 10) for i in range(1, n))


def cmd_sweep(args) -> int:
    parsed = read_bundle(args.bundle)
    inst = instance_from_parsed(parsed)
    grid = WeightGrid(k1_values=_steps(args.k1_step), omega_step=args.omega_step, allow_zero=args.allow_zero)

    def progress(done: int, total: int) -> None:
        if not args.quiet:
            print(f"\r{done}/{total} runs", end="", file=sys.stderr, flush=True)

    runs = run_sweep(inst, grid, SolverOptions(time_limit=args.time_limit), jobs=args.jobs, progress=progress)
    if not args.quiet:
        print(file=sys.stderr)
    front = pareto_frontier(runs)
    out = _out(args, "out/sweep")
    write_text(out / "sweep.csv", sweep_csv(runs))
    write_text(out / "frontier.csv", frontier_csv(front))
    write_text(out / "k1_coverage.svg", k1_coverage_svg(runs))
    write_text(out / "pareto.svg", pareto_svg(runs, front))
    write_manifest(out, "sweep", InputBundle(args.bundle).input_files(), config_to_dict(parsed.config))
    failed = sum(not r.ok for r in runs)
    print(f"{len(runs)} runs, {failed} failed, {len(front)} on the Pareto frontier")
    if failed < len(runs):
        b = best_configuration(runs)
        w = b.weights
        print(f"best: k1={w.k1:g} omega=({w.omega1:g}, {w.omega2:g}, {w.omega3:g}) objective {b.objective:.6f}")
    print(f"wrote {out}")
    return EXIT_OK


def cmd_pareto(args) -> int:
    runs = read_sweep_csv(args.sweep_csv)
    front = pareto_frontier(runs)
    out = _out(args, str(Path(args.sweep_csv).parent))
    write_text(out / "frontier.csv", frontier_csv(front))
    write_text(out / "pareto.svg", pareto_svg(runs, front))
    write_manifest(out, "pareto", [Path(args.sweep_csv)])
    for p in front:
        print(f"coverage {p.run.coverage_value:.6f}  cost {p.run.cost_value:.6f}  "
              f"k1={p.run.weights.k1:g} omega=({p.run.weights.omega1:g}, {p.run.weights.omega2:g}, {p.run.weights.omega3:g})")
    return EXIT_OK


def cmd_export_mps(args) -> int:
    parsed = read_bundle(args.bundle)
    inst = instance_from_parsed(parsed)
    inst = inst.with_weights(_weights(args.weights, inst.weights))
    text = write_mps(formulate(inst))
    if args.out:
        write_text(Path(args.out), text)
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="arcticspill", description="Oil-spill response station siting under uncertainty.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("validate", help="check an input bundle")
    s.add_argument("bundle")
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("gen-scenarios", help="fit, sample and write scenarios.json")
    s.add_argument("bundle")
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--n", type=int, default=None, help="number of stochastic scenarios")
    s.add_argument("--out", help="output file (default: <bundle>/scenarios.json)")
    s.set_defaults(func=cmd_gen_scenarios)

    for name, func, help_ in (("solve", cmd_solve, "solve the stochastic model"),
                              ("evaluate", cmd_evaluate, "value-of-information report")):
        s = sub.add_parser(name, help=help_)
        s.add_argument("bundle")
        s.add_argument("--weights", help="k1,w1,w2,w3 (default: from config.json)")
        s.add_argument("--out", help="output directory")
        s.add_argument("--time-limit", type=float, default=None)
        s.add_argument("--branch-rule", choices=("most-fractional", "pseudo-cost"), default="most-fractional")
        s.add_argument("--trace", help="write one line per node to this file")
        if name == "solve":
            s.add_argument("--repair", action="store_true", help="run the residual check and budget repair loop")
        s.set_defaults(func=func)

    s = sub.add_parser("sweep", help="solve over the (k1, omega) grid")
    s.add_argument("bundle")
    s.add_argument("--k1-step", type=float, default=0.1)
    s.add_argument("--omega-step", type=float, default=0.1)
    s.add_argument("--allow-zero", action="store_true", help="allow zero omega components")
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--time-limit", type=float, default=None, help="per run, seconds")
    s.add_argument("--out", help="output directory")
    s.add_argument("--quiet", action="store_true")
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("pareto", help="frontier of an existing sweep CSV")
    s.add_argument("sweep_csv")
    s.add_argument("--out", help="output directory (default: next to the CSV)")
    s.set_defaults(func=cmd_pareto)

    s = sub.add_parser("export-mps", help="write the model in MPS format")
    s.add_argument("bundle")
    s.add_argument("--weights")
    s.add_argument("--out", help="output file (default: stdout)")
    s.set_defaults(func=cmd_export_mps)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    args.open_files = []
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return args.func(args)
    except ValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (SolverError, TimeoutError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    finally:
        for fh in args.open_files:
            fh.close()


if __name__ == "__main__":
    sys.exit(main())
