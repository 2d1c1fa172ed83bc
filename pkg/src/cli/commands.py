"""
Command-line front end.

Subcommands: gen, check, solve, integrate, convergence, drift, reproduce-tables.
Exit codes: 0 success, 1 failed verification, 2 usage or input error,
3 numerical failure.
"""

import argparse
import logging
import sys
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np

from analysis.experiments import (
    convergence_study,
    drift_study,
    table_reproduction_suite,
    tableau_label,
    write_report_csv,
    write_report_json,
)
from data.problems import PROBLEM_FACTORIES, BenchmarkProblem, get_problem
from methods.cstableau import ORDER_CONDITION_SETS, SymplecticFamilySpec, build_symplectic_family
from methods.quadrature import rule_from_name
from methods.tableau import (
    RknTableau,
    StructureClass,
    check_order_discrete,
    check_symplectic_discrete,
    discretize,
    discretize_parametric,
    solve_structure,
)
from solvers.integrator import RknIntegrator
from utils.config import STAGE_SOLVERS, get_settings
from utils.errors import (
    AssumptionViolationError,
    CsRknError,
    NumericalFailureError,
    VerificationFailure,
)
from utils.tableau_io import load_tableau, require_concrete, save_tableau, serialize, to_document
from . import render

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VERIFICATION = 1
EXIT_USAGE = 2
EXIT_NUMERICAL = 3

PARAMETER_ALIASES = {"a": "alpha", "b": "beta", "c": "gamma"}
TARGETS = {
    "explicit": StructureClass.EXPLICIT,
    "dirkn": StructureClass.DIAGONALLY_IMPLICIT,
    "diagonally-implicit": StructureClass.DIAGONALLY_IMPLICIT,
}


def parse_assignments(text: Optional[str]) -> Dict[str, float]:
    """
    Parse 'a=0.1,b=-2' into {'alpha': 0.1, 'beta': -2.0}.

    Raises:
        ValueError: malformed item or non-numeric value
    """
    values: Dict[str, float] = {}
    if not text:
        return values
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        name, sep, raw = item.partition("=")
        if not sep or not name.strip():
            raise ValueError(f"expected name=value, got {item!r}")
        name = name.strip()
        try:
            values[PARAMETER_ALIASES.get(name, name)] = float(raw)
        except ValueError:
            raise ValueError(f"value for {name!r} is not a number: {raw!r}")
    return values


def parse_floats(text: Optional[str]) -> Optional[List[float]]:
    if text is None:
        return None
    try:
        return [float(item) for item in text.split(",") if item.strip()]
    except ValueError:
        raise ValueError(f"expected a comma-separated list of numbers, got {text!r}")


def _vector_option(text: Optional[str]) -> Any:
    values = parse_floats(text)
    if values is None:
        return None
    return values[0] if len(values) == 1 else tuple(values)


def _emit(args: argparse.Namespace, payload: Dict[str, Any], pretty: Callable[[Dict[str, Any]], str]) -> None:
    print(pretty(payload) if args.pretty else render.render_json(payload))


def _problem_from(args: argparse.Namespace) -> BenchmarkProblem:
    return get_problem(args.problem, ecc=args.ecc, q0=_vector_option(args.q0), p0=_vector_option(args.p0))


def _concrete_tableau(path: str) -> RknTableau:
    return require_concrete(load_tableau(path), path)


# subcommands

def cmd_gen(args: argparse.Namespace) -> int:
    rule = rule_from_name(args.quad)
    if args.parametric:
        tableau = discretize_parametric(SymplecticFamilySpec(args.order), rule)
    else:
        spec = SymplecticFamilySpec(args.order, parse_assignments(args.params))
        tableau = discretize(build_symplectic_family(spec), rule)
    if args.out:
        save_tableau(tableau, args.out)
    else:
        sys.stdout.write(serialize(tableau))
    return EXIT_OK


def check_payload(tableau: RknTableau, source: str, expected_order: Optional[int] = None) -> Dict[str, Any]:
    """Symplecticity and order report for one tableau, as printed by `check`."""
    symplectic = check_symplectic_discrete(tableau)
    if expected_order is None:
        expected_order = tableau.meta.get("source_family_order")
    payload: Dict[str, Any] = {"tableau": source, "symplectic": symplectic.to_dict(),
                               "expected_order": expected_order}
    try:
        order = check_order_discrete(tableau)
    except AssumptionViolationError as e:
        payload.update(order=None, assumption=str(e), order_passed=False, failed_conditions=[e.hypothesis])
    else:
        required = expected_order if expected_order is not None else 1
        failed = [str(n) for n in ORDER_CONDITION_SETS.get(required, ORDER_CONDITION_SETS[5])
                  if order.residuals[n] > order.tol]
        payload.update(order=order.to_dict(), order_passed=order.order >= required, failed_conditions=failed)
    payload["passed"] = bool(symplectic.passed and payload["order_passed"])
    return payload


def cmd_check(args: argparse.Namespace) -> int:
    tableau = _concrete_tableau(args.tableau)
    payload = check_payload(tableau, args.tableau, args.expect_order)
    _emit(args, payload, render.render_check)
    if not payload["passed"]:
        failed = payload["symplectic"]["failed"] + payload["failed_conditions"]
        raise VerificationFailure(f"{args.tableau}: failed conditions: {'; '.join(failed)}")
    return EXIT_OK


def solve_payload(order: int, quad: str, target: StructureClass,
                  fixed: Optional[Dict[str, float]] = None) -> Tuple[Dict[str, Any], Any]:
    """Structure solve as printed by `solve`; also returns the solution object."""
    pt = discretize_parametric(SymplecticFamilySpec(order), rule_from_name(quad))
    solution = solve_structure(pt, target, fixed=fixed)
    payload: Dict[str, Any] = {"order": order, "quadrature": quad, "solution": solution.to_dict()}
    if solution.feasible:
        payload["parameters"] = solution.parameter_values()
        payload["tableau"] = to_document(solution.specialize())
    return payload, solution


def cmd_solve(args: argparse.Namespace) -> int:
    target = TARGETS[args.target]
    payload, solution = solve_payload(args.order, args.quad, target, parse_assignments(args.fix))
    _emit(args, payload, render.render_solution)
    if not solution.feasible:
        equation, residual = solution.violated
        raise VerificationFailure(f"no {target.value} member: {equation} = 0 cannot hold (residual {residual:.3e})")
    if args.out:
        save_tableau(solution.tableau if solution.free else solution.specialize(), args.out)
    return EXIT_OK


def cmd_integrate(args: argparse.Namespace) -> int:
    tableau = _concrete_tableau(args.tableau)
    problem = _problem_from(args)
    integrator = RknIntegrator(tableau, problem.ivp, stage_solver=args.solver, progress=args.progress or None)
    trajectory = integrator.integrate(args.h, args.steps)
    if args.out:
        trajectory.to_csv(args.out)
    energy_error = trajectory.energy_error()
    payload = {
        "tableau": tableau_label(tableau),
        "problem": problem.key,
        "h": args.h,
        "steps": args.steps,
        "t_final": trajectory.final.t,
        "q": trajectory.final.q.tolist(),
        "p": trajectory.final.p.tolist(),
        "max_energy_error": None if energy_error is None else float(np.max(energy_error)),
        "max_stage_iterations": int(trajectory.newton_iterations.max()),
    }
    _emit(args, payload, render.render_integration)
    return EXIT_OK


def _write_outputs(args: argparse.Namespace, report: Any) -> None:
    if args.out:
        write_report_json(report, args.out)
    if args.csv:
        write_report_csv(report, args.csv)


def cmd_convergence(args: argparse.Namespace) -> int:
    tableau = _concrete_tableau(args.tableau)
    problem = _problem_from(args)
    h_list = parse_floats(args.h_list)
    report = convergence_study(tableau, problem, h_list, args.t_final, workers=args.workers,
                               stage_solver=args.solver)
    _write_outputs(args, report)
    _emit(args, report.to_dict(), render.render_convergence)
    return EXIT_OK


def cmd_drift(args: argparse.Namespace) -> int:
    tableau = _concrete_tableau(args.tableau)
    problem = _problem_from(args)
    report = drift_study(tableau, problem, args.h, args.steps, args.windows,
                         stage_solver=args.solver, progress=args.progress or None)
    _write_outputs(args, report)
    _emit(args, report.to_dict(), render.render_drift)
    return EXIT_OK


def cmd_reproduce_tables(args: argparse.Namespace) -> int:
    report = table_reproduction_suite()
    _write_outputs(args, report)
    _emit(args, report.to_dict(), render.render_reproduction)
    if not report.passed:
        cases = sorted({row["case"] for row in report.failures})
        raise VerificationFailure(f"golden mismatch in {', '.join(cases)}")
    return EXIT_OK


def _add_problem_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--tableau", required=True, help="tableau JSON file")
    parser.add_argument("--problem", required=True, choices=sorted(PROBLEM_FACTORIES))
    parser.add_argument("--ecc", type=float, help="Kepler eccentricity")
    parser.add_argument("--q0", help="initial position, comma-separated")
    parser.add_argument("--p0", help="initial momentum, comma-separated")
    parser.add_argument("--solver", choices=STAGE_SOLVERS, help="implicit stage solver")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="csrkn",
        description="Symplectic continuous-stage RKN tableaux: construction, checks and experiments.",
    )
    parser.add_argument("--log-level", help="logging level (default from CSRKN_LOG_LEVEL)")
    parser.add_argument("--pretty", action="store_true", help="human-readable output instead of JSON")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="discretize a symplectic family member")
    gen.add_argument("--order", type=int, required=True, choices=[2, 3, 4, 5])
    gen.add_argument("--params", help="parameter values, e.g. a=0.1,b=0 (a=alpha, b=beta, c=gamma)")
    gen.add_argument("--quad", required=True, help="quadrature rule, e.g. gauss:2")
    gen.add_argument("--parametric", action="store_true", help="emit the tableau as affine forms")
    gen.add_argument("--out", help="output file (stdout otherwise)")
    gen.set_defaults(handler=cmd_gen)

    check = sub.add_parser("check", help="symplecticity and order report")
    check.add_argument("--tableau", required=True)
    check.add_argument("--expect-order", type=int, choices=[1, 2, 3, 4, 5],
                       help="required order (default: the tableau's declared family order)")
    check.set_defaults(handler=cmd_check)

    solve = sub.add_parser("solve", help="explicit or diagonally implicit family members")
    solve.add_argument("--order", type=int, required=True, choices=[2, 3, 4, 5])
    solve.add_argument("--quad", required=True)
    solve.add_argument("--target", required=True, choices=sorted(TARGETS))
    solve.add_argument("--fix", help="pin parameters before solving, e.g. b=0")
    solve.add_argument("--out", help="write the solved tableau here")
    solve.set_defaults(handler=cmd_solve)

    integrate = sub.add_parser("integrate", help="integrate a benchmark problem")
    _add_problem_options(integrate)
    integrate.add_argument("--h", type=float, required=True)
    integrate.add_argument("--steps", type=int, required=True)
    integrate.add_argument("--out", help="trajectory CSV")
    integrate.add_argument("--progress", action="store_true")
    integrate.set_defaults(handler=cmd_integrate)

    convergence = sub.add_parser("convergence", help="global error against step size")
    _add_problem_options(convergence)
    convergence.add_argument("--h-list", required=True, help="comma-separated step sizes")
    convergence.add_argument("--t-final", type=float, required=True)
    convergence.add_argument("--workers", type=int, default=1)
    convergence.add_argument("--out", help="report JSON")
    convergence.add_argument("--csv", help="plot-ready CSV")
    convergence.set_defaults(handler=cmd_convergence)

    drift = sub.add_parser("drift", help="long-time energy behaviour")
    _add_problem_options(drift)
    drift.add_argument("--h", type=float, required=True)
    drift.add_argument("--steps", type=int, required=True)
    drift.add_argument("--windows", type=int, required=True)
    drift.add_argument("--out", help="report JSON")
    drift.add_argument("--csv", help="plot-ready CSV")
    drift.add_argument("--progress", action="store_true")
    drift.set_defaults(handler=cmd_drift)

    tables = sub.add_parser("reproduce-tables", help="regenerate every printed tableau")
    tables.add_argument("--out", help="report JSON")
    tables.add_argument("--csv", help="per-sample CSV")
    tables.set_defaults(handler=cmd_reproduce_tables)
    return parser


def _configure_logging(level: Optional[str]) -> None:
    name = (level or get_settings().log_level).upper()
    numeric = logging.getLevelName(name)
    if not isinstance(numeric, int):
        raise ValueError(f"unknown log level {level!r}")
    logging.basicConfig(level=numeric, stream=sys.stderr,
                        format="%(asctime)s %(name)s %(levelname)s: %(message)s")


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code not in (0, None) else EXIT_OK

    try:
        _configure_logging(args.log_level)
        return args.handler(args)
    except VerificationFailure as e:
        print(f"verification failed: {e}", file=sys.stderr)
        return EXIT_VERIFICATION
    except NumericalFailureError as e:
        logger.error(f"Numerical failure in {args.command}: {e}")
        print(f"numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (CsRknError, ValueError, KeyError, OSError) as e:
        message = e.args[0] if isinstance(e, KeyError) and e.args else e
        print(f"error: {message}", file=sys.stderr)
        return EXIT_USAGE
