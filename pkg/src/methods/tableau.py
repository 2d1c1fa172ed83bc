"""
Classical RKN tableaux obtained from csRKN coefficients by quadrature.

Covers discretization, the discrete symplecticity and order checks, structure
classification, tableaux that depend affinely on free parameters, and the
linear solve for the parameter values that make a tableau explicit or
diagonally implicit.
"""

import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from utils.errors import AssumptionViolationError, InvalidTableauError, UnsupportedFamilyError
from .cstableau import (
    ORDER_CONDITION_TARGETS,
    CsRknCoefficients,
    SymplecticFamilySpec,
    build_symplectic_family,
    order_from_residuals,
)
from .quadrature import QuadratureRule

logger = logging.getLogger(__name__)

SYMPLECTIC_TOL = 1e-12
CONDITION_TOL = 1e-11
ASSUMPTION_TOL = 1e-10
STRUCTURE_TOL = 1e-12
RANK_TOL = 1e-10
AFFINE_TOL = 1e-12


class StructureClass(Enum):
    EXPLICIT = "explicit"
    DIAGONALLY_IMPLICIT = "diagonally-implicit"
    FULLY_IMPLICIT = "fully-implicit"


@dataclass(frozen=True)
class RknTableau:
    """
    r-stage RKN method (c, a_bar, b_bar, b).

    Q_i     = q + h c_i p + h^2 sum_j a_bar[i, j] f(Q_j)
    q_{n+1} = q + h p + h^2 sum_i b_bar[i] f(Q_i)
    p_{n+1} = p + h sum_i b[i] f(Q_i)
    """
    c: np.ndarray
    a_bar: np.ndarray
    b_bar: np.ndarray
    b: np.ndarray
    meta: Mapping[str, object] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        arrays = {name: np.array(getattr(self, name), dtype=float) for name in ("c", "a_bar", "b_bar", "b")}
        r = arrays["c"].size
        for name in ("c", "b_bar", "b"):
            if arrays[name].shape != (r,):
                raise InvalidTableauError(name, f"must be a vector of length r = {r}, got shape {arrays[name].shape}")
        if arrays["a_bar"].shape != (r, r):
            raise InvalidTableauError("a_bar", f"must be {r}x{r}, got shape {arrays['a_bar'].shape}")
        for name, array in arrays.items():
            if not np.all(np.isfinite(array)):
                raise InvalidTableauError(name, "entries must be finite")
        if abs(arrays["b"].sum() - 1.0) > 1e-12:
            raise InvalidTableauError("b", f"weights must sum to 1 (order condition 1), got {arrays['b'].sum()!r}")
        for name, array in arrays.items():
            array.setflags(write=False)
            object.__setattr__(self, name, array)
        object.__setattr__(self, "meta", dict(self.meta))

    @property
    def r(self) -> int:
        return int(self.c.size)

    def with_entry(self, i: int, j: int, value: float) -> "RknTableau":
        """Copy with a_bar[i, j] replaced (zero-based indices)."""
        a_bar = np.array(self.a_bar)
        a_bar[i, j] = value
        meta = dict(self.meta)
        meta["modified"] = True
        return replace(self, a_bar=a_bar, meta=meta)

    @classmethod
    def stormer_verlet(cls) -> "RknTableau":
        """The explicit two-stage Stormer-Verlet scheme in RKN form."""
        return cls(
            c=[0.0, 1.0],
            a_bar=[[0.0, 0.0], [0.5, 0.0]],
            b_bar=[0.5, 0.0],
            b=[0.5, 0.5],
            meta={"name": "stormer-verlet"},
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, RknTableau):
            return NotImplemented
        return all(np.array_equal(getattr(self, n), getattr(other, n)) for n in ("c", "a_bar", "b_bar", "b"))

    def __hash__(self) -> int:
        return hash(tuple(getattr(self, n).tobytes() for n in ("c", "a_bar", "b_bar", "b")))


@dataclass(frozen=True)
class AffineForm:
    """const + sum_k lin[k] * theta_k over named parameters."""
    const: float = 0.0
    lin: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "const", float(self.const))
        object.__setattr__(self, "lin", {k: float(v) for k, v in self.lin.items() if float(v) != 0.0})

    @property
    def params(self) -> Tuple[str, ...]:
        return tuple(self.lin)

    def __call__(self, values: Optional[Mapping[str, float]] = None) -> float:
        values = values or {}
        missing = [name for name in self.lin if name not in values]
        if missing:
            raise KeyError(f"no value for parameter(s) {missing}")
        return self.const + sum(coeff * float(values[name]) for name, coeff in self.lin.items())

    def __add__(self, other: "AffineForm") -> "AffineForm":
        lin = dict(self.lin)
        for name, coeff in other.lin.items():
            lin[name] = lin.get(name, 0.0) + coeff
        return AffineForm(self.const + other.const, lin)

    def __sub__(self, other: "AffineForm") -> "AffineForm":
        return self + other * -1.0

    def __mul__(self, scalar: float) -> "AffineForm":
        return AffineForm(self.const * scalar, {k: v * scalar for k, v in self.lin.items()})

    __rmul__ = __mul__

    def is_constant(self, tol: float = 0.0) -> bool:
        return all(abs(v) <= tol for v in self.lin.values())

    def is_zero(self, tol: float = 0.0) -> bool:
        return abs(self.const) <= tol and self.is_constant(tol)

    def substitute(self, solution: Mapping[str, "AffineForm"]) -> "AffineForm":
        """Replace parameters by affine forms in the remaining ones."""
        out = AffineForm(self.const)
        for name, coeff in self.lin.items():
            out = out + (solution[name] * coeff if name in solution else AffineForm(0.0, {name: coeff}))
        return out

    def __repr__(self) -> str:
        terms = "".join(f" {'+' if v >= 0 else '-'} {abs(v):.6g}*{k}" for k, v in self.lin.items())
        return f"AffineForm({self.const:.6g}{terms})"


FormVector = Tuple[AffineForm, ...]
FormMatrix = Tuple[Tuple[AffineForm, ...], ...]


@dataclass(frozen=True)
class ParametricTableau:
    """
    RKN tableau whose entries are affine forms in named free parameters.

    parameters keeps the declaration order of the generating family; the
    structure solver uses it to decide which parameters to eliminate first.
    """
    c: FormVector
    a_bar: FormMatrix
    b_bar: FormVector
    b: FormVector
    parameters: Tuple[str, ...]
    meta: Mapping[str, object] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        r = len(self.c)
        if len(self.b_bar) != r or len(self.b) != r or len(self.a_bar) != r or any(len(row) != r for row in self.a_bar):
            raise ValueError(f"parametric tableau dimensions are inconsistent for r = {r}")
        object.__setattr__(self, "c", tuple(self.c))
        object.__setattr__(self, "a_bar", tuple(tuple(row) for row in self.a_bar))
        object.__setattr__(self, "b_bar", tuple(self.b_bar))
        object.__setattr__(self, "b", tuple(self.b))
        object.__setattr__(self, "parameters", tuple(self.parameters))
        object.__setattr__(self, "meta", dict(self.meta))

    @property
    def r(self) -> int:
        return len(self.c)

    def forms(self):
        """Every form with a label, row-major through a_bar first."""
        for i, row in enumerate(self.a_bar):
            for j, form in enumerate(row):
                yield f"a_bar({i + 1},{j + 1})", form
        for name in ("b_bar", "b", "c"):
            for i, form in enumerate(getattr(self, name)):
                yield f"{name}({i + 1})", form

    def specialize(self, values: Optional[Mapping[str, float]] = None) -> RknTableau:
        """
        Evaluate every entry at concrete parameter values.

        Args:
            values: parameter -> value; missing parameters default to 0

        Returns:
            RknTableau with meta recording the parameter values used
        """
        values = dict(values or {})
        full = {name: float(values.get(name, 0.0)) for name in self.parameters}
        meta = dict(self.meta)
        meta["params"] = {**dict(meta.get("params", {})), **full}
        return RknTableau(
            c=[f(full) for f in self.c],
            a_bar=[[f(full) for f in row] for row in self.a_bar],
            b_bar=[f(full) for f in self.b_bar],
            b=[f(full) for f in self.b],
            meta=meta,
        )

    def substitute(self, solution: Mapping[str, AffineForm]) -> "ParametricTableau":
        """Eliminate the solved parameters, keeping the rest free."""
        remaining = tuple(name for name in self.parameters if name not in solution)
        return ParametricTableau(
            c=tuple(f.substitute(solution) for f in self.c),
            a_bar=tuple(tuple(f.substitute(solution) for f in row) for row in self.a_bar),
            b_bar=tuple(f.substitute(solution) for f in self.b_bar),
            b=tuple(f.substitute(solution) for f in self.b),
            parameters=remaining,
            meta=self.meta,
        )


def discretize(cs: CsRknCoefficients, rule: QuadratureRule) -> RknTableau:
    """
    Turn a csRKN method into an r-stage RKN tableau with the rule (b_i, c_i).

    a_bar[i, j] = b_j A_bar(c_i, c_j), b_bar[i] = b_i B_bar(c_i),
    b[i] = b_i B_hat(c_i), c[i] = C(c_i).
    """
    nodes, weights = rule.nodes, rule.weights
    a_bar = cs.A_bar(nodes[:, None], nodes[None, :]) * weights[None, :]
    if cs.has_canonical_weights():
        # C = tau and B_hat = 1 map exactly onto the rule
        c, b = nodes.copy(), weights.copy()
    else:
        c, b = cs.C(nodes), weights * cs.B_hat(nodes)
    meta = {"quadrature": rule.name}
    if cs.declared_order is not None:
        meta["source_family_order"] = cs.declared_order
    if cs.params:
        meta["params"] = dict(cs.params)
    return RknTableau(
        c=c,
        a_bar=a_bar,
        b_bar=weights * cs.B_bar(nodes),
        b=b,
        meta=meta,
    )


@dataclass(frozen=True)
class DiscreteSymplecticReport:
    """Residuals of the discrete symplecticity conditions."""
    passed: bool
    residuals: Dict[str, float]
    tol: float

    def failed_conditions(self) -> List[str]:
        return [name for name, value in self.residuals.items() if not value <= self.tol]

    def to_dict(self) -> dict:
        return {"passed": self.passed, "tol": self.tol, "residuals": dict(self.residuals),
                "failed": self.failed_conditions()}


def check_symplectic_discrete(t: RknTableau, tol: float = SYMPLECTIC_TOL) -> DiscreteSymplecticReport:
    """
    Check b_bar_i = b_i (1 - c_i) and b_i (b_bar_j - a_ij) = b_j (b_bar_i - a_ji).

    Returns:
        Report with the maximum residual of each condition
    """
    weight_residual = float(np.max(np.abs(t.b_bar - t.b * (1.0 - t.c))))
    m = t.b[:, None] * (t.b_bar[None, :] - t.a_bar)
    pair_residual = float(np.max(np.abs(m - m.T)))
    residuals = {
        "b_bar_i = b_i (1 - c_i)": weight_residual,
        "b_i (b_bar_j - a_ij) = b_j (b_bar_i - a_ji)": pair_residual,
    }
    passed = weight_residual <= tol and pair_residual <= tol
    return DiscreteSymplecticReport(passed, residuals, tol)


@dataclass(frozen=True)
class DiscreteOrderReport:
    """Order reached by a tableau with the value and residual of each condition."""
    order: int
    values: Dict[int, float]
    residuals: Dict[int, float]
    tol: float

    def to_dict(self) -> dict:
        return {"order": self.order, "tol": self.tol,
                "values": {str(k): v for k, v in self.values.items()},
                "residuals": {str(k): v for k, v in self.residuals.items()}}


def order_condition_values(t: RknTableau) -> Dict[int, float]:
    """The 13 sums of the reduced RKN condition list."""
    b, c, a = t.b, t.c, t.a_bar
    a1 = a.sum(axis=1)
    ac = a @ c
    return {
        1: float(b.sum()),
        2: float(b @ c),
        3: float(b @ c ** 2),
        4: float(b @ a1),
        5: float(b @ c ** 3),
        6: float((b * c) @ a1),
        7: float(b @ ac),
        8: float(b @ c ** 4),
        9: float((b * c ** 2) @ a1),
        10: float(b @ a1 ** 2),
        11: float((b * c) @ ac),
        12: float(b @ (a @ c ** 2)),
        13: float(b @ (a @ a1)),
    }


def check_order_discrete(t: RknTableau, tol: float = CONDITION_TOL) -> DiscreteOrderReport:
    """
    Highest order k <= 5 whose conditions all hold within tol.

    Raises:
        AssumptionViolationError: b_bar_i != b_i (1 - c_i), the list's hypothesis
    """
    assumption = float(np.max(np.abs(t.b_bar - t.b * (1.0 - t.c))))
    if assumption > ASSUMPTION_TOL:
        logger.error(f"Order check refused: b_bar deviates from b (1 - c) by {assumption:.3e}")
        raise AssumptionViolationError("b_bar_i = b_i (1 - c_i)", assumption)

    values = order_condition_values(t)
    residuals = {n: abs(values[n] - target) for n, target in ORDER_CONDITION_TARGETS.items()}
    return DiscreteOrderReport(order_from_residuals(residuals, tol), values, residuals, tol)


def classify_structure(t: RknTableau, tol: float = STRUCTURE_TOL) -> StructureClass:
    """Explicit if a_bar vanishes on and above the diagonal, diagonally implicit if above only."""
    upper = np.triu(np.abs(t.a_bar), k=1)
    if np.any(upper > tol):
        return StructureClass.FULLY_IMPLICIT
    if np.any(np.abs(np.diag(t.a_bar)) > tol):
        return StructureClass.DIAGONALLY_IMPLICIT
    return StructureClass.EXPLICIT


FamilyBuilder = Callable[[Mapping[str, float]], CsRknCoefficients]


def _tableau_vector(t: RknTableau) -> np.ndarray:
    return np.concatenate([t.c, t.a_bar.ravel(), t.b_bar, t.b])


def discretize_parametric(family: Union[SymplecticFamilySpec, FamilyBuilder], rule: QuadratureRule,
                          parameters: Optional[Sequence[str]] = None) -> ParametricTableau:
    """
    Discretize a parametric family into a tableau of affine forms.

    The family is probed at zero and at each unit vector; affinity is then
    confirmed at two further probe points.

    Args:
        family: a SymplecticFamilySpec (its parameter values are ignored) or a
            callable mapping parameter values to CsRknCoefficients
        rule: quadrature rule
        parameters: parameter names, required when family is a callable

    Returns:
        ParametricTableau over the family's parameters

    Raises:
        UnsupportedFamilyError: the tableau does not depend affinely on the parameters
    """
    if isinstance(family, SymplecticFamilySpec):
        spec = family
        names = spec.parameter_names

        def builder(values):
            return build_symplectic_family(spec.with_values(values))
        base_meta = {"source_family_order": spec.order}
    else:
        if parameters is None:
            raise ValueError("parameter names are required for a callable family")
        names = tuple(parameters)
        builder = family
        base_meta = {}

    def probe(values: Mapping[str, float]) -> np.ndarray:
        return _tableau_vector(discretize(builder(values), rule))

    zero = {name: 0.0 for name in names}
    base = probe(zero)
    columns = []
    for name in names:
        columns.append(probe({**zero, name: 1.0}) - base)
    lin = np.array(columns).reshape(len(names), base.size)

    for point in (np.linspace(0.37, 1.9, len(names)), np.linspace(-1.3, 0.55, len(names))):
        predicted = base + point @ lin if names else base
        actual = probe(dict(zip(names, point)))
        deviation = float(np.max(np.abs(actual - predicted)))
        scale = 1.0 + float(np.max(np.abs(actual)))
        if deviation > AFFINE_TOL * scale:
            logger.error(f"Family is not affine in {names}: deviation {deviation:.3e}")
            raise UnsupportedFamilyError(
                f"tableau entries are not affine in {list(names)} (deviation {deviation:.3e})")

    def form(index: int) -> AffineForm:
        return AffineForm(base[index], {name: lin[k, index] for k, name in enumerate(names)})

    r = rule.r
    offset_a, offset_bb, offset_b = r, r + r * r, 2 * r + r * r
    return ParametricTableau(
        c=tuple(form(i) for i in range(r)),
        a_bar=tuple(tuple(form(offset_a + i * r + j) for j in range(r)) for i in range(r)),
        b_bar=tuple(form(offset_bb + i) for i in range(r)),
        b=tuple(form(offset_b + i) for i in range(r)),
        parameters=names,
        meta={**base_meta, "quadrature": rule.name},
    )


@dataclass(frozen=True)
class StructureSolution:
    """
    Outcome of solve_structure.

    status is 'unique', 'family' or 'infeasible'. solved maps each eliminated
    parameter to an affine form in the free ones; tableau is the substituted
    parametric tableau (None when infeasible).
    """
    status: str
    target: StructureClass
    solved: Dict[str, AffineForm]
    free: Tuple[str, ...]
    fixed: Dict[str, float]
    violated: Optional[Tuple[str, float]] = None
    tableau: Optional[ParametricTableau] = None

    @property
    def feasible(self) -> bool:
        return self.status != "infeasible"

    def parameter_values(self, free_values: Optional[Mapping[str, float]] = None) -> Dict[str, float]:
        """Numeric value of every parameter, free ones taken from free_values (default 0)."""
        free_values = {name: float((free_values or {}).get(name, 0.0)) for name in self.free}
        out = dict(self.fixed)
        out.update({name: form(free_values) for name, form in self.solved.items()})
        out.update(free_values)
        return out

    def specialize(self, free_values: Optional[Mapping[str, float]] = None) -> RknTableau:
        if self.tableau is None:
            raise ValueError(f"no tableau: structure solve was {self.status}")
        return self.tableau.specialize({name: (free_values or {}).get(name, 0.0) for name in self.free})

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "target": self.target.value,
            "fixed": dict(self.fixed),
            "free": list(self.free),
            "solved": {name: {"const": form.const, "lin": dict(form.lin)} for name, form in self.solved.items()},
            "violated": None if self.violated is None else {"equation": self.violated[0], "residual": self.violated[1]},
        }


def _required_zero(r: int, target: StructureClass) -> List[Tuple[int, int]]:
    if target == StructureClass.EXPLICIT:
        return [(i, j) for i in range(r) for j in range(r) if j >= i]
    return [(i, j) for i in range(r) for j in range(r) if j > i]


def solve_structure(pt: ParametricTableau, target: StructureClass,
                    fixed: Optional[Mapping[str, float]] = None,
                    eliminate: Optional[Sequence[str]] = None,
                    rank_tol: float = RANK_TOL) -> StructureSolution:
    """
    Solve for parameter values that give a tableau the target structure.

    The required-zero entries of a_bar (row-major) form a linear system in the
    parameters, solved by Gauss-Jordan elimination with largest-magnitude row
    pivoting. Columns are tried in reverse declaration order unless eliminate
    names a preferred order.

    Args:
        pt: parametric tableau
        target: StructureClass.EXPLICIT or StructureClass.DIAGONALLY_IMPLICIT
        fixed: parameters pinned to values before solving
        eliminate: preferred order of parameters to solve for
        rank_tol: pivots at or below this magnitude count as zero

    Returns:
        StructureSolution (unique, family or infeasible)
    """
    if target == StructureClass.FULLY_IMPLICIT:
        raise ValueError("solve_structure targets explicit or diagonally implicit tableaux")
    fixed = {name: float(value) for name, value in (fixed or {}).items()}
    unknown_fixed = set(fixed) - set(pt.parameters)
    if unknown_fixed:
        raise ValueError(f"cannot fix unknown parameter(s) {sorted(unknown_fixed)}")

    pinned = pt.substitute({name: AffineForm(value) for name, value in fixed.items()})
    unknowns = list(pinned.parameters)
    preference = list(eliminate or [])
    bad = [name for name in preference if name not in unknowns]
    if bad:
        raise ValueError(f"cannot eliminate {bad}: not a free parameter")
    preference += [name for name in reversed(unknowns) if name not in preference]

    cells = _required_zero(pinned.r, target)
    labels = [f"a_bar({i + 1},{j + 1})" for i, j in cells]
    forms = [pinned.a_bar[i][j] for i, j in cells]
    column = {name: k for k, name in enumerate(unknowns)}
    matrix = np.zeros((len(forms), len(unknowns)))
    rhs = np.zeros(len(forms))
    for row, form in enumerate(forms):
        rhs[row] = -form.const
        for name, coeff in form.lin.items():
            matrix[row, column[name]] = coeff

    remaining = list(range(len(forms)))
    pivots: Dict[str, int] = {}
    for name in preference:
        col = column[name]
        if not remaining:
            break
        best = max(remaining, key=lambda row: abs(matrix[row, col]))
        if abs(matrix[best, col]) <= rank_tol:
            continue
        rhs[best] /= matrix[best, col]
        matrix[best] /= matrix[best, col]
        for row in range(len(forms)):
            if row != best and matrix[row, col] != 0.0:
                factor = matrix[row, col]
                matrix[row] -= factor * matrix[best]
                rhs[row] -= factor * rhs[best]
        remaining.remove(best)
        pivots[name] = best

    free = tuple(name for name in unknowns if name not in pivots)
    for row in remaining:
        if abs(rhs[row]) > rank_tol:
            logger.info(f"Structure solve infeasible: {labels[row]} = 0 cannot hold (residual {abs(rhs[row]):.3e})")
            return StructureSolution("infeasible", target, {}, free, fixed, violated=(labels[row], float(abs(rhs[row]))))

    solved = {}
    for name in unknowns:
        if name in pivots:
            row = pivots[name]
            solved[name] = AffineForm(rhs[row], {f: -matrix[row, column[f]] for f in free})

    tableau = pinned.substitute(solved)
    a_bar = [list(row) for row in tableau.a_bar]
    for (i, j), label in zip(cells, labels):
        form = a_bar[i][j]
        if not form.is_zero(1e-9):
            logger.error(f"Substituted entry {label} is {form}, expected zero")
            return StructureSolution("infeasible", target, solved, free, fixed,
                                     violated=(label, float(abs(form.const) + sum(map(abs, form.lin.values())))))
        a_bar[i][j] = AffineForm(0.0)
    tableau = replace(tableau, a_bar=tuple(tuple(row) for row in a_bar),
                      meta={**dict(tableau.meta), "structure": target.value})

    status = "unique" if not free else "family"
    logger.info(f"Structure solve ({target.value}): {status}, solved {list(solved)}, free {list(free)}")
    return StructureSolution(status, target, solved, free, fixed, tableau=tableau)
