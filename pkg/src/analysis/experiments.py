"""
Experiment kernels: convergence order, long-time energy behaviour,
numerical symplecticity and reproduction of the printed tableaux.

Every study returns a report dataclass with to_dict() (JSON) and to_frame()
(plot-ready CSV). Reports carry pass/fail flags rather than raising.
"""

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
from scipy.stats import linregress

from data.golden_tables import GOLDEN_SOLUTIONS, GOLDEN_TABLEAUX, GoldenSolution, GoldenTableau, parameter_samples
from data.problems import BenchmarkProblem, ReferenceOracle, reference_state
from methods.cstableau import SymplecticFamilySpec, build_symplectic_family
from methods.quadrature import rule_from_name
from methods.tableau import (
    RknTableau,
    StructureClass,
    discretize,
    discretize_parametric,
    solve_structure,
)
from solvers.integrator import RknIntegrator, StepState
from utils.errors import ConvergenceError, NumericalFailureError

logger = logging.getLogger(__name__)

GOLDEN_TOL = 1e-13
SOLUTION_TOL = 1e-12
DEFECT_TOL = 1e-6
BOUNDED_FACTOR = 5.0


def fit_slope(h: Sequence[float], errors: Sequence[float]) -> float:
    """
    Least-squares slope of log(error) against log(h).

    Raises:
        ValueError: fewer than two points or a non-positive value
    """
    h = np.asarray(h, dtype=float)
    errors = np.asarray(errors, dtype=float)
    if h.size < 2 or h.size != errors.size:
        raise ValueError("need at least two (h, error) pairs of equal length")
    if np.any(h <= 0) or np.any(errors <= 0):
        raise ValueError("step sizes and errors must be positive to fit a slope")
    return float(linregress(np.log(h), np.log(errors)).slope)


def _tagged(e: NumericalFailureError, tag: str) -> NumericalFailureError:
    if isinstance(e, ConvergenceError):
        return ConvergenceError(f"{tag}: {e.detail}", e.last_residual, e.iterations, e.step_index)
    return type(e)(f"{tag}: {e}")


def _state_error(a: StepState, b: StepState) -> float:
    return float(np.max(np.abs(a.as_vector() - b.as_vector())))


@dataclass
class ConvergenceReport:
    """Global errors at a fixed final time for decreasing step sizes."""
    tableau: str
    problem: str
    t_final: float
    h: List[float]
    errors: List[float]
    slope: float
    interval_slopes: List[float]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": "convergence",
            "tableau": self.tableau,
            "problem": self.problem,
            "t_final": self.t_final,
            "rows": [{"h": h, "error": e} for h, e in zip(self.h, self.errors)],
            "slope": self.slope,
            "interval_slopes": list(self.interval_slopes),
        }

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"h": self.h, "error": self.errors})


@dataclass
class DriftReport:
    """Per-window maxima of the relative energy error and their secular slope."""
    tableau: str
    problem: str
    h: float
    n_steps: int
    window_times: List[float]
    window_max: List[float]
    slope: float
    total_time: float

    @property
    def first_window(self) -> float:
        return self.window_max[0]

    @property
    def max_window(self) -> float:
        return max(self.window_max)

    @property
    def slope_threshold(self) -> float:
        """Largest slope still counted as bounded: first-window error over total time."""
        return self.first_window / self.total_time

    def is_bounded(self, factor: float = BOUNDED_FACTOR) -> bool:
        """No window above factor x the first one and |slope| below slope_threshold."""
        if self.first_window == 0.0:
            return self.max_window == 0.0
        return self.max_window <= factor * self.first_window and abs(self.slope) < self.slope_threshold

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": "drift",
            "tableau": self.tableau,
            "problem": self.problem,
            "h": self.h,
            "n_steps": self.n_steps,
            "rows": [{"window": k, "t_end": t, "max_rel_err": e}
                     for k, (t, e) in enumerate(zip(self.window_times, self.window_max))],
            "slope": self.slope,
            "first_window": self.first_window,
            "max_window": self.max_window,
            "bounded": self.is_bounded(),
        }

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"window": range(len(self.window_max)), "t_end": self.window_times,
                             "max_rel_err": self.window_max})


@dataclass
class DefectReport:
    """Symplecticity defects of one tableau on one problem at sampled states."""
    tableau: str
    problem: str
    rows: List[Dict[str, float]] = field(default_factory=list)
    tol: float = DEFECT_TOL

    @property
    def max_defect(self) -> float:
        return max(row["defect"] for row in self.rows)

    @property
    def passed(self) -> bool:
        return self.max_defect < self.tol

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": "defect", "tableau": self.tableau, "problem": self.problem,
                "rows": list(self.rows), "max_defect": self.max_defect, "passed": self.passed}

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.rows)


@dataclass
class TableReproductionReport:
    """Golden-value comparison, one row per (case, parameter sample)."""
    rows: List[Dict[str, Any]] = field(default_factory=list)
    tol: float = GOLDEN_TOL

    @property
    def passed(self) -> bool:
        return all(row["passed"] for row in self.rows)

    @property
    def failures(self) -> List[Dict[str, Any]]:
        return [row for row in self.rows if not row["passed"]]

    @property
    def max_deviation(self) -> Optional[float]:
        """Largest deviation, None when some case could not be compared."""
        deviations = [row["max_deviation"] for row in self.rows]
        if any(d is None for d in deviations):
            return None
        return max(deviations, default=0.0)

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": "table-reproduction", "passed": self.passed, "cases": len(self.rows),
                "max_deviation": self.max_deviation, "rows": list(self.rows)}

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.rows)


def format_deviation(value: Optional[float]) -> str:
    return "not comparable" if value is None else f"{value:.3e}"


def tableau_label(t: RknTableau) -> str:
    meta = t.meta
    if "name" in meta:
        return str(meta["name"])
    parts = []
    if "source_family_order" in meta:
        parts.append(f"order-{meta['source_family_order']}")
    if "quadrature" in meta:
        parts.append(str(meta["quadrature"]))
    return "/".join(parts) or f"r={t.r}"


def _steps_for(h: float, t_final: float) -> int:
    n = int(round(t_final / h))
    if n < 1 or abs(n * h - t_final) > 1e-9 * max(1.0, t_final):
        raise ValueError(f"step size {h} does not divide t_final = {t_final}")
    return n


def convergence_study(tableau: RknTableau, problem: BenchmarkProblem, h_list: Sequence[float],
                      t_final: float, workers: int = 1, oracle: Optional[ReferenceOracle] = None,
                      **integrator_options) -> ConvergenceReport:
    """
    Measure global errors at t_final and fit the convergence slope.

    Args:
        tableau: method under test
        problem: benchmark problem; its initial state is the start point
        h_list: at least four distinct step sizes, each dividing t_final
        t_final: integration length
        workers: thread count for the independent runs
        oracle: reference oracle for problems without a closed form
        integrator_options: forwarded to RknIntegrator

    Returns:
        ConvergenceReport with h in decreasing order

    Raises:
        NumericalFailureError: a run failed; the message names its h
    """
    h_values = sorted((float(h) for h in h_list), reverse=True)
    if len(h_values) < 4:
        raise ValueError(f"a convergence study needs at least 4 step sizes, got {len(h_values)}")
    if len(set(h_values)) != len(h_values):
        raise ValueError("step sizes must be distinct")
    steps = [_steps_for(h, t_final) for h in h_values]

    start = problem.ivp.initial
    reference = reference_state(problem, start.t + t_final, oracle)

    def run(h: float, n: int) -> float:
        integrator = RknIntegrator(tableau, problem.ivp, **integrator_options)
        try:
            final = integrator.integrate(h, n).final
        except NumericalFailureError as e:
            logger.error(f"Convergence run failed at h={h:g}: {e}")
            raise _tagged(e, f"h={h:g}") from e
        return _state_error(final, reference)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            errors = list(pool.map(run, h_values, steps))
    else:
        errors = [run(h, n) for h, n in zip(h_values, steps)]

    slope = fit_slope(h_values, errors)
    intervals = [fit_slope(h_values[k:k + 2], errors[k:k + 2]) for k in range(len(h_values) - 1)]
    logger.info(f"Convergence of {tableau_label(tableau)} on {problem.key}: slope {slope:.3f}")
    return ConvergenceReport(tableau_label(tableau), problem.key, float(t_final), h_values, errors, slope, intervals)


def drift_study(tableau: RknTableau, problem: BenchmarkProblem, h: float, n_steps: int,
                window_count: int, **integrator_options) -> DriftReport:
    """
    Relative energy error maxima over equal windows and their secular slope.

    The n_steps post-step states are split into window_count contiguous windows.

    Raises:
        ValueError: no Hamiltonian, or n_steps not divisible by window_count
        NumericalFailureError: integration failure
    """
    if not problem.ivp.has_hamiltonian:
        raise ValueError(f"problem {problem.name!r} has no Hamiltonian")
    if window_count < 1 or n_steps % window_count != 0:
        raise ValueError(f"n_steps = {n_steps} is not divisible by window_count = {window_count}")

    trajectory = RknIntegrator(tableau, problem.ivp, **integrator_options).integrate(h, n_steps)
    rel_err = trajectory.energy_error()[1:]
    times = trajectory.times[1:]
    per_window = n_steps // window_count
    window_max = rel_err.reshape(window_count, per_window).max(axis=1)
    window_times = times.reshape(window_count, per_window)[:, -1]

    slope = float(linregress(window_times, window_max).slope) if window_count > 1 else 0.0
    report = DriftReport(tableau_label(tableau), problem.key, float(h), int(n_steps),
                         window_times.tolist(), window_max.tolist(), slope, float(n_steps * h))
    logger.info(f"Drift of {report.tableau} on {problem.key}: first window {report.first_window:.3e}, "
                f"max {report.max_window:.3e}, slope {slope:.3e}")
    return report


def defect_survey(tableau: RknTableau, problem: BenchmarkProblem, h_list: Sequence[float] = (0.05, 0.1),
                  n_states: int = 5, spread: float = 0.1, seed: int = 0, tol: float = DEFECT_TOL,
                  **integrator_options) -> DefectReport:
    """
    symplecticity_defect at states drawn around the problem's initial state.

    Each coordinate of (q, p) is shifted by a uniform draw in [-spread, spread].
    """
    rng = np.random.default_rng(seed)
    start = problem.ivp.initial
    integrator = RknIntegrator(tableau, problem.ivp, **integrator_options)
    report = DefectReport(tableau_label(tableau), problem.key, tol=tol)
    for k in range(n_states):
        shift = rng.uniform(-spread, spread, size=2 * start.dim)
        state = StepState(start.t, start.q + shift[start.dim:], start.p + shift[:start.dim])
        for h in h_list:
            defect = integrator.symplecticity_defect(float(h), state)
            report.rows.append({"state": k, "h": float(h), "defect": defect})
    logger.info(f"Defect survey of {report.tableau} on {problem.key}: max {report.max_defect:.3e}")
    return report


def _sample_label(values: Dict[str, float]) -> str:
    return ",".join(f"{name}={value:g}" for name, value in values.items()) or "-"


def _tableau_deviation(t: RknTableau, expected_a: List[List[float]], expected_bb: Sequence[float]) -> float:
    return max(float(np.max(np.abs(t.a_bar - np.array(expected_a)))),
               float(np.max(np.abs(t.b_bar - np.array(expected_bb)))))


def _reproduce_tableau(entry: GoldenTableau, tol: float) -> List[Dict[str, Any]]:
    rule = rule_from_name(entry.rule)
    rows = []
    if entry.kind == "dirkn":
        solution = solve_structure(discretize_parametric(SymplecticFamilySpec(entry.order), rule),
                                   StructureClass.DIAGONALLY_IMPLICIT)
    for values in parameter_samples(entry.varied):
        if entry.kind == "dirkn":
            tableau = solution.specialize(values)
        else:
            tableau = discretize(build_symplectic_family(SymplecticFamilySpec(entry.order, values)), rule)
        deviation = _tableau_deviation(tableau, entry.expected(values), entry.b_bar)
        rows.append({"case": entry.case, "sample": _sample_label(values),
                     "max_deviation": deviation, "passed": deviation < tol})
    return rows


def _reproduce_solution(entry: GoldenSolution) -> List[Dict[str, Any]]:
    rule = rule_from_name(entry.rule)
    pt = discretize_parametric(SymplecticFamilySpec(entry.order), rule)
    solution = solve_structure(pt, StructureClass(entry.target))
    if solution.status != "unique":
        return [{"case": entry.case, "sample": "-", "max_deviation": None, "passed": False}]
    values = solution.parameter_values()
    deviation = max(abs(values[name] - expected) for name, expected in entry.values.items())
    rows = [{"case": entry.case, "sample": _sample_label(entry.values),
             "max_deviation": deviation, "passed": deviation < SOLUTION_TOL}]

    if entry.target == "explicit" and entry.rule == "lobatto:2":
        verlet = RknTableau.stormer_verlet()
        solved = solution.specialize()
        gap = max(float(np.max(np.abs(getattr(solved, n) - getattr(verlet, n)))) for n in ("c", "a_bar", "b_bar", "b"))
        zero_pattern = bool(np.array_equal(solved.a_bar == 0.0, verlet.a_bar == 0.0))
        rows.append({"case": "stormer-verlet", "sample": "-", "max_deviation": gap,
                     "passed": zero_pattern and gap < SOLUTION_TOL})
    return rows


def table_reproduction_suite(tol: float = GOLDEN_TOL) -> TableReproductionReport:
    """
    Regenerate every golden tableau at parameter samples {0, 1, -1} and
    re-solve the explicit and diagonally implicit members.
    """
    report = TableReproductionReport(tol=tol)
    for entry in GOLDEN_TABLEAUX:
        report.rows.extend(_reproduce_tableau(entry, tol))
    for solution in GOLDEN_SOLUTIONS:
        report.rows.extend(_reproduce_solution(solution))
    for row in report.failures:
        logger.warning(f"Golden mismatch in {row['case']} at {row['sample']}: {format_deviation(row['max_deviation'])}")
    logger.info(f"Table reproduction: {len(report.rows)} rows, max deviation {format_deviation(report.max_deviation)}")
    return report


def write_report_json(report: Any, path: str) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(report.to_dict(), handle, indent=2)
        handle.write("\n")
    logger.info(f"Wrote {type(report).__name__} to {path}")


def write_report_csv(report: Any, path: str) -> None:
    report.to_frame().to_csv(path, index=False, float_format="%.17g")
    logger.info(f"Wrote {type(report).__name__} rows to {path}")
