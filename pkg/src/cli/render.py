import json
from typing import Any, Dict, Iterable, List, Mapping

import pandas as pd

PASS_MARK = "✅"
FAIL_MARK = "❌"


def render_json(payload: Any) -> str:
    """Machine-readable stdout; key order follows the payload."""
    return json.dumps(payload, indent=2)


def header(title: str) -> str:
    return f"{title}\n{'=' * len(title)}"


def mark(passed: bool) -> str:
    return PASS_MARK if passed else FAIL_MARK


def render_table(rows: Iterable[Mapping[str, Any]], float_format: str = "{:.6e}") -> str:
    frame = pd.DataFrame(list(rows))
    if frame.empty:
        return "(no rows)"
    return frame.to_string(index=False, float_format=float_format.format)


def render_matrix(name: str, matrix: List[List[float]]) -> str:
    lines = [f"{name}:"]
    for row in matrix:
        lines.append("  " + "  ".join(f"{x: .17g}" for x in row))
    return "\n".join(lines)


def render_check(payload: Dict[str, Any]) -> str:
    """Human-readable form of a check report."""
    symplectic = payload["symplectic"]
    lines = [header(f"Tableau check: {payload['tableau']}")]
    lines.append(f"{mark(symplectic['passed'])} symplecticity (tol {symplectic['tol']:.0e})")
    for name, residual in symplectic["residuals"].items():
        lines.append(f"    {name}: {residual:.3e}")

    order = payload.get("order")
    if order is None:
        lines.append(f"{FAIL_MARK} order check refused: {payload['assumption']}")
    else:
        expected = payload["expected_order"]
        lines.append(f"{mark(payload['order_passed'])} order {order['order']} (expected {expected})")
        if payload["failed_conditions"]:
            lines.append(f"    failed conditions: {', '.join(payload['failed_conditions'])}")
    lines.append(f"\nResult: {'PASS' if payload['passed'] else 'FAIL'}")
    return "\n".join(lines)


def render_solution(payload: Dict[str, Any]) -> str:
    solution = payload["solution"]
    lines = [header(f"Structure solve: order {payload['order']}, {payload['quadrature']}, "
                    f"target {solution['target']}")]
    lines.append(f"status: {solution['status']}")
    if solution["violated"] is not None:
        violated = solution["violated"]
        lines.append(f"{FAIL_MARK} {violated['equation']} = 0 cannot hold (residual {violated['residual']:.3e})")
        return "\n".join(lines)
    for name, value in payload["parameters"].items():
        lines.append(f"  {name} = {value:.17g}")
    if solution["free"]:
        lines.append(f"free parameters: {', '.join(solution['free'])} (shown at 0)")
    tableau = payload["tableau"]
    lines.append(render_matrix("a_bar", tableau["a_bar"]))
    lines.append("b_bar: " + "  ".join(f"{x:.17g}" for x in tableau["b_bar"]))
    lines.append("b:     " + "  ".join(f"{x:.17g}" for x in tableau["b"]))
    lines.append("c:     " + "  ".join(f"{x:.17g}" for x in tableau["c"]))
    return "\n".join(lines)


def render_integration(payload: Dict[str, Any]) -> str:
    lines = [header(f"Integration: {payload['problem']} with {payload['tableau']}")]
    lines.append(f"steps: {payload['steps']}  h: {payload['h']:g}  t_final: {payload['t_final']:.17g}")
    lines.append("q: " + "  ".join(f"{x:.17g}" for x in payload["q"]))
    lines.append("p: " + "  ".join(f"{x:.17g}" for x in payload["p"]))
    if payload.get("max_energy_error") is not None:
        lines.append(f"max relative energy error: {payload['max_energy_error']:.3e}")
    lines.append(f"max stage iterations: {payload['max_stage_iterations']}")
    return "\n".join(lines)


def render_convergence(payload: Dict[str, Any]) -> str:
    lines = [header(f"Convergence: {payload['tableau']} on {payload['problem']} (t = {payload['t_final']:g})")]
    lines.append(render_table(payload["rows"]))
    lines.append(f"fitted slope: {payload['slope']:.4f}")
    lines.append("interval slopes: " + ", ".join(f"{s:.3f}" for s in payload["interval_slopes"]))
    return "\n".join(lines)


def render_drift(payload: Dict[str, Any]) -> str:
    lines = [header(f"Energy drift: {payload['tableau']} on {payload['problem']}")]
    lines.append(f"h = {payload['h']:g}, {payload['n_steps']} steps, {len(payload['rows'])} windows")
    lines.append(f"first window: {payload['first_window']:.3e}  max window: {payload['max_window']:.3e}")
    lines.append(f"secular slope: {payload['slope']:.3e}")
    lines.append(f"{mark(payload['bounded'])} bounded energy error")
    return "\n".join(lines)


def render_reproduction(payload: Dict[str, Any]) -> str:
    def deviation(value):
        return "n/a" if value is None else f"{value:.2e}"

    lines = [header("Golden tableau reproduction")]
    by_case: Dict[str, List[Dict[str, Any]]] = {}
    for row in payload["rows"]:
        by_case.setdefault(row["case"], []).append(row)
    for case, rows in by_case.items():
        passed = all(row["passed"] for row in rows)
        values = [row["max_deviation"] for row in rows]
        worst = None if None in values else max(values)
        lines.append(f"{mark(passed)} {case}: {len(rows)} sample(s), max deviation {deviation(worst)}")
    lines.append(f"\n{payload['cases']} comparisons, max deviation {deviation(payload['max_deviation'])}: "
                 f"{'PASS' if payload['passed'] else 'FAIL'}")
    return "\n".join(lines)
