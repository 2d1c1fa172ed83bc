"""
Continuous-stage RKN coefficients (A_bar, B_bar, B_hat, C), the symplectic
families of orders 2 to 5, and the continuous symplecticity / order checks.

All coefficient functions are Legendre series. Under the canonical hypothesis
B_hat = 1, C = tau, B_bar = 1 - tau the symplectic conditions reduce to
relations between the coefficients alpha_(i,j) of A_bar.
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Dict, List, Mapping, Optional, Tuple

import numpy as np

from utils.config import get_settings
from utils.errors import AssumptionViolationError, DegreeLimitError, UnsupportedOrderError
from .legendre import (
    LegendreSeries1D,
    LegendreSeries2D,
    inner_product_1d,
    monomial_to_legendre,
    xi,
)
from .quadrature import gauss_legendre_01

logger = logging.getLogger(__name__)

SQRT3 = np.sqrt(3.0)
SQRT5 = np.sqrt(5.0)

# Declaration order matters: structure solving eliminates the last names first
FAMILY_PARAMETERS: Dict[int, Tuple[str, ...]] = {
    2: ("alpha", "beta", "gamma"),
    3: ("alpha", "beta"),
    4: ("alpha", "beta"),
    5: ("alpha", "beta"),
}

# Reduced condition list: index -> target value, valid when B_bar = B_hat (1 - C)
ORDER_CONDITION_TARGETS: Dict[int, float] = {
    1: 1.0, 2: 1 / 2, 3: 1 / 3, 4: 1 / 6, 5: 1 / 4, 6: 1 / 8, 7: 1 / 24,
    8: 1 / 5, 9: 1 / 10, 10: 1 / 20, 11: 1 / 30, 12: 1 / 60, 13: 1 / 120,
}
ORDER_CONDITION_SETS: Dict[int, Tuple[int, ...]] = {
    1: (1,),
    2: (1, 2),
    3: (1, 2, 3, 4),
    4: tuple(range(1, 8)),
    5: tuple(range(1, 14)),
}

CONSTRUCTION_TOL = 1e-13
CONDITION_TOL = 1e-11
ASSUMPTION_TOL = 1e-10
GRID_POINTS = 64


def extra_parameter_name(i: int, j: int) -> str:
    """Parameter name for the symmetric pair alpha_(i,j) = alpha_(j,i)."""
    low, high = sorted((i, j))
    return f"a_{low}_{high}"


@dataclass(frozen=True)
class SymplecticFamilySpec:
    """
    Selects one member of a symplectic family.

    order 2 takes alpha, beta and gamma (gamma defaults to 0); orders 3 to 5 take
    alpha and beta. extra maps (i, j) to a value for the additional free
    coefficient pairs alpha_(i,j) = alpha_(j,i) left open by the family.
    """
    order: int
    params: Mapping[str, float] = field(default_factory=dict)
    extra: Mapping[Tuple[int, int], float] = field(default_factory=dict)

    def __post_init__(self):
        if self.order not in FAMILY_PARAMETERS:
            raise UnsupportedOrderError(
                f"symplectic families exist for orders {sorted(FAMILY_PARAMETERS)}, got {self.order}")
        unknown = set(self.params) - set(FAMILY_PARAMETERS[self.order])
        if unknown:
            raise ValueError(f"order-{self.order} family has no parameter(s) {sorted(unknown)}; "
                             f"known: {list(FAMILY_PARAMETERS[self.order])}")
        object.__setattr__(self, "params", {k: float(v) for k, v in self.params.items()})
        object.__setattr__(self, "extra", _normalize_extra(self.order, self.extra))

    @property
    def parameter_names(self) -> Tuple[str, ...]:
        """Family parameters followed by the extra coefficient pairs."""
        extras = tuple(extra_parameter_name(i, j) for i, j in self.extra)
        return FAMILY_PARAMETERS[self.order] + extras

    def values(self) -> Dict[str, float]:
        """Every parameter with its value; unset family parameters are 0."""
        out = {name: self.params.get(name, 0.0) for name in FAMILY_PARAMETERS[self.order]}
        for (i, j), value in self.extra.items():
            out[extra_parameter_name(i, j)] = value
        return out

    def with_values(self, values: Mapping[str, float]) -> "SymplecticFamilySpec":
        """Same family and extra pairs, with parameter values taken from the mapping."""
        params = {name: float(values.get(name, 0.0)) for name in FAMILY_PARAMETERS[self.order]}
        extra = {key: float(values.get(extra_parameter_name(*key), 0.0)) for key in self.extra}
        return SymplecticFamilySpec(self.order, params, extra)


def _family_entries(order: int, v: Mapping[str, float]) -> Dict[Tuple[int, int], float]:
    """alpha_(i,j) entries of A_bar for each family (i = tau-degree, j = sigma-degree)."""
    alpha, beta = v.get("alpha", 0.0), v.get("beta", 0.0)
    if order == 2:
        return {(0, 0): alpha, (0, 1): beta - SQRT3 / 6, (1, 0): beta, (1, 1): v.get("gamma", 0.0)}
    if order == 3:
        return {(0, 0): 1 / 6, (0, 1): alpha - SQRT3 / 6, (1, 0): alpha, (1, 1): beta}
    if order == 4:
        return {(0, 0): 1 / 6, (1, 0): SQRT3 / 12, (0, 1): -SQRT3 / 12,
                (1, 1): alpha, (2, 0): beta, (0, 2): beta}
    return {(0, 0): 1 / 6, (1, 0): SQRT3 / 12, (0, 1): -SQRT3 / 12, (1, 1): -1 / 10,
            (2, 0): SQRT5 / 60, (0, 2): SQRT5 / 60, (1, 2): alpha, (2, 1): alpha, (2, 2): beta}


def _normalize_extra(order: int, extra: Mapping[Tuple[int, int], float]) -> Dict[Tuple[int, int], float]:
    """Validate extra coefficient pairs and key them by (low, high)."""
    taken = set(_family_entries(order, {}))
    out: Dict[Tuple[int, int], float] = {}
    for (i, j), value in extra.items():
        i, j = int(i), int(j)
        if i < 0 or j < 0:
            raise ValueError(f"coefficient indices must be non-negative, got ({i}, {j})")
        if i + j <= 1 or (i, j) in taken or (j, i) in taken:
            raise ValueError(f"alpha_({i},{j}) is fixed by the order-{order} family")
        if order == 5 and min(i, j) == 0:
            raise ValueError("the order-5 family requires alpha_(0,j) = alpha_(j,0) = 0 for j > 2")
        key = (min(i, j), max(i, j))
        if key in out and out[key] != float(value):
            raise ValueError(f"alpha_({i},{j}) and alpha_({j},{i}) must be equal to keep A_bar symplectic")
        out[key] = float(value)
    return out


@dataclass(frozen=True)
class CsRknCoefficients:
    """
    Continuous-stage RKN method given by Legendre series for A_bar(tau, sigma),
    B_bar(tau), B_hat(tau) and C(tau), plus what was declared about it.
    """
    A_bar: LegendreSeries2D
    B_bar: LegendreSeries1D
    B_hat: LegendreSeries1D
    C: LegendreSeries1D
    declared_order: Optional[int] = None
    declared_symplectic: bool = False
    params: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        # int_0^1 B_hat is the P_0 coefficient
        total = float(self.B_hat.coeffs[0])
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"B_hat must integrate to 1 over [0, 1], got {total!r}")

    @classmethod
    def canonical(cls, A_bar: LegendreSeries2D, **metadata) -> "CsRknCoefficients":
        """Coefficients with B_hat = 1, C = tau and B_bar = 1 - tau."""
        cap = A_bar.max_degree
        return cls(
            A_bar=A_bar,
            B_bar=LegendreSeries1D([0.5, -xi(1)], cap),
            B_hat=LegendreSeries1D([1.0], cap),
            C=LegendreSeries1D([0.5, xi(1)], cap),
            **metadata,
        )

    def has_canonical_weights(self, tol: float = 1e-14) -> bool:
        """True when B_hat = 1 and C = tau (B_bar is checked separately)."""
        b_hat = self.B_hat.padded(1)
        c = self.C.padded(1)
        return (abs(b_hat[0] - 1.0) <= tol and np.all(np.abs(b_hat[1:]) <= tol)
                and abs(c[0] - 0.5) <= tol and abs(c[1] - xi(1)) <= tol and np.all(np.abs(c[2:]) <= tol))

    def with_alpha(self, i: int, j: int, value: float) -> "CsRknCoefficients":
        """Copy with a single alpha_(i,j) overwritten; the copy carries no declarations."""
        matrix = self.A_bar.padded(max(i, j))
        matrix[i, j] = value
        return replace(self, A_bar=LegendreSeries2D(matrix, self.A_bar.max_degree),
                       declared_order=None, declared_symplectic=False)

    def with_B_bar(self, B_bar: LegendreSeries1D) -> "CsRknCoefficients":
        return replace(self, B_bar=B_bar, declared_order=None, declared_symplectic=False)


def build_symplectic_family(spec: SymplecticFamilySpec, max_degree: Optional[int] = None) -> CsRknCoefficients:
    """
    Build one member of a symplectic csRKN family.

    Args:
        spec: family order, parameter values and optional extra coefficient pairs
        max_degree: Legendre degree cap (defaults to the configured value)

    Returns:
        Canonical coefficients with A_bar populated for the requested family

    Raises:
        UnsupportedOrderError: order outside 2..5 (raised while building the spec)
        DegreeLimitError: an extra coefficient lies beyond the degree cap
    """
    cap = get_settings().max_degree if max_degree is None else max_degree
    values = spec.values()
    entries = _family_entries(spec.order, values)
    for (i, j), value in spec.extra.items():
        if max(i, j) > cap:
            raise DegreeLimitError(max(i, j), cap, what="extra coefficient degree")
        entries[(i, j)] = value
        entries[(j, i)] = value

    A_bar = LegendreSeries2D.from_entries(entries, cap)
    return CsRknCoefficients.canonical(A_bar, declared_order=spec.order, declared_symplectic=True, params=values)


@dataclass(frozen=True)
class ContinuousSymplecticReport:
    """Residuals of the continuous symplecticity conditions."""
    passed: bool
    residuals: Dict[str, float]
    tol: float

    def failed_conditions(self) -> List[str]:
        return [name for name, value in self.residuals.items() if not value <= self.tol]

    def to_dict(self) -> dict:
        return {"passed": self.passed, "tol": self.tol, "residuals": dict(self.residuals),
                "failed": self.failed_conditions()}


def check_symplectic_continuous(cs: CsRknCoefficients, tol: float = CONSTRUCTION_TOL) -> ContinuousSymplecticReport:
    """
    Check the sufficient symplecticity conditions of a csRKN method.

    The weight condition B_hat (1 - C) = B_bar and the pointwise condition
    B_hat(t) (B_bar(s) - A_bar(t, s)) = B_hat(s) (B_bar(t) - A_bar(s, t)) are
    sampled on a 64-point grid. With B_hat = 1 and C = tau the pointwise
    condition is also checked in coefficient space:
    alpha_(0,1) - alpha_(1,0) = -sqrt(3)/6 and alpha_(i,j) = alpha_(j,i) for i+j > 1.

    Returns:
        Report with the maximum residual per condition
    """
    grid = np.linspace(0.0, 1.0, GRID_POINTS)
    b_hat = cs.B_hat(grid)
    b_bar = cs.B_bar(grid)
    c = cs.C(grid)

    residuals: Dict[str, float] = {}
    residuals["B_bar = B_hat (1 - C)"] = float(np.max(np.abs(b_hat * (1.0 - c) - b_bar)))

    tau, sigma = np.meshgrid(grid, grid, indexing="ij")
    a_ts = cs.A_bar(tau, sigma)
    pointwise = (b_hat[:, None] * (b_bar[None, :] - a_ts)
                 - b_hat[None, :] * (b_bar[:, None] - a_ts.T))
    residuals["pointwise symplecticity"] = float(np.max(np.abs(pointwise)))

    if cs.has_canonical_weights():
        degree = max(*cs.A_bar.degree, 1)
        a = cs.A_bar.padded(degree)
        residuals["alpha_(0,1) - alpha_(1,0) = -sqrt(3)/6"] = float(abs(a[0, 1] - a[1, 0] + SQRT3 / 6))
        mask = np.add.outer(np.arange(degree + 1), np.arange(degree + 1)) > 1
        residuals["alpha_(i,j) = alpha_(j,i), i+j > 1"] = float(np.max(np.abs((a - a.T)[mask]), initial=0.0))

    passed = all(value <= tol for value in residuals.values())
    if not passed:
        logger.info(f"Continuous symplecticity check failed: {residuals}")
    return ContinuousSymplecticReport(passed, residuals, tol)


@dataclass(frozen=True)
class ContinuousOrderReport:
    """Order reached by a csRKN method and the residual of each condition."""
    order: int
    residuals: Dict[int, float]
    oracle_residuals: Dict[int, float]
    oracle_agreement: float
    tol: float

    def to_dict(self) -> dict:
        return {
            "order": self.order,
            "tol": self.tol,
            "residuals": {str(k): v for k, v in self.residuals.items()},
            "oracle_residuals": {str(k): v for k, v in self.oracle_residuals.items()},
            "oracle_agreement": self.oracle_agreement,
        }


def order_from_residuals(residuals: Mapping[int, float], tol: float) -> int:
    """Largest k in 1..5 whose whole condition set passes (0 if none)."""
    order = 0
    for k in sorted(ORDER_CONDITION_SETS):
        if all(residuals[n] <= tol for n in ORDER_CONDITION_SETS[k]):
            order = k
        else:
            break
    return order


def _analytic_condition_values(cs: CsRknCoefficients) -> Dict[int, float]:
    """Integrals of the reduced list by Legendre orthonormality (needs B_hat = 1, C = tau)."""
    degree = max(*cs.A_bar.degree, 2)
    a = cs.A_bar.padded(degree)
    cap = max(cs.A_bar.max_degree, 4)
    m1 = monomial_to_legendre(1, cap).padded(degree)
    m2 = monomial_to_legendre(2, cap).padded(degree)

    values = {n: inner_product_1d(cs.B_hat, monomial_to_legendre(k, cap))
              for n, k in ((1, 0), (2, 1), (3, 2), (5, 3), (8, 4))}
    values[4] = a[0, 0]
    values[6] = float(m1 @ a[:, 0])
    values[7] = float(a[0, :] @ m1)
    values[9] = float(m2 @ a[:, 0])
    values[10] = float(np.sum(a[:, 0] ** 2))
    values[11] = float(m1 @ a @ m1)
    values[12] = float(a[0, :] @ m2)
    values[13] = float(a[0, :] @ a[:, 0])
    return values


def _quadrature_condition_values(cs: CsRknCoefficients) -> Dict[int, float]:
    """Same integrals by tensor Gauss quadrature with D + 2 points per axis."""
    x, w = gauss_legendre_01(cs.A_bar.max_degree + 2)
    b_hat = cs.B_hat(x)
    c = cs.C(x)
    grid = cs.A_bar(x[:, None], x[None, :])
    wb = w * b_hat

    row_w = grid @ w             # int A_bar(t, s) ds
    row_wc = grid @ (w * c)      # int A_bar(t, s) C(s) ds
    row_wc2 = grid @ (w * c ** 2)
    return {
        1: float(np.sum(wb)),
        2: float(np.sum(wb * c)),
        3: float(np.sum(wb * c ** 2)),
        4: float(wb @ row_w),
        5: float(np.sum(wb * c ** 3)),
        6: float((wb * c) @ row_w),
        7: float(wb @ row_wc),
        8: float(np.sum(wb * c ** 4)),
        9: float((wb * c ** 2) @ row_w),
        10: float(wb @ row_w ** 2),
        11: float((wb * c) @ row_wc),
        12: float(wb @ row_wc2),
        13: float(wb @ (grid @ (w * row_w))),
    }


def check_order_continuous(cs: CsRknCoefficients, tol: float = CONDITION_TOL) -> ContinuousOrderReport:
    """
    Evaluate the 13 reduced order conditions of a csRKN method.

    Each integral is computed analytically (Legendre orthonormality) and by a
    tensor Gauss oracle; the reported order uses the analytic values.

    Returns:
        Report with the highest verified order (<= 5) and per-condition residuals

    Raises:
        AssumptionViolationError: B_bar != B_hat (1 - C), or B_hat / C not canonical
    """
    grid = np.linspace(0.0, 1.0, GRID_POINTS)
    assumption = float(np.max(np.abs(cs.B_bar(grid) - cs.B_hat(grid) * (1.0 - cs.C(grid)))))
    if assumption > ASSUMPTION_TOL:
        logger.error(f"Order check refused: B_bar differs from B_hat (1 - C) by {assumption:.3e}")
        raise AssumptionViolationError("B_bar = B_hat (1 - C)", assumption)
    if not cs.has_canonical_weights():
        raise AssumptionViolationError("B_hat = 1 and C = tau", float("nan"))

    analytic = _analytic_condition_values(cs)
    oracle = _quadrature_condition_values(cs)
    residuals = {n: abs(analytic[n] - target) for n, target in ORDER_CONDITION_TARGETS.items()}
    oracle_residuals = {n: abs(oracle[n] - target) for n, target in ORDER_CONDITION_TARGETS.items()}
    agreement = max(abs(analytic[n] - oracle[n]) for n in ORDER_CONDITION_TARGETS)
    if agreement > tol:
        logger.warning(f"Analytic and quadrature order-condition values differ by {agreement:.3e}")

    order = order_from_residuals(residuals, tol)
    logger.debug(f"Continuous order {order}; residuals {residuals}")
    return ContinuousOrderReport(order, residuals, oracle_residuals, agreement, tol)
