"""
Interpolatory quadrature rules on [0, 1]: Gauss, Radau (left/right) and Lobatto.

Nodes are found by Newton iteration on the defining Legendre root problem over
[-1, 1] (with deflation against roots already found), weights come from the
closed interpolatory formulas, and everything is mapped to [0, 1] at the end.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Dict, List, Tuple

import numpy as np

from utils.errors import ConvergenceError, NumericalFailureError, UnsupportedSizeError

logger = logging.getLogger(__name__)

MAX_NODES = 6
NEWTON_MAX_ITER = 100
GOLDEN_TOL = 1e-13


class QuadratureFamily(Enum):
    GAUSS = "gauss"
    RADAU_LEFT = "radau-left"
    RADAU_RIGHT = "radau-right"
    LOBATTO = "lobatto"


@dataclass(frozen=True)
class QuadratureRule:
    """
    Quadrature rule (b_i, c_i) on [0, 1] with ascending nodes.

    exactness_degree is the largest polynomial degree integrated exactly;
    the rule's order in the usual sense is exactness_degree + 1.
    """
    family: QuadratureFamily
    nodes: np.ndarray
    weights: np.ndarray
    exactness_degree: int

    def __post_init__(self):
        nodes = np.array(self.nodes, dtype=float)
        weights = np.array(self.weights, dtype=float)
        if nodes.shape != weights.shape or nodes.ndim != 1:
            raise ValueError(f"nodes and weights must be 1-D of equal length, got {nodes.shape} and {weights.shape}")
        nodes.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    @property
    def r(self) -> int:
        return int(self.nodes.size)

    @property
    def order(self) -> int:
        return self.exactness_degree + 1

    @property
    def name(self) -> str:
        return f"{self.family.value}:{self.r}"

    def integrate(self, values: np.ndarray) -> float:
        """Apply the rule to function values sampled at the nodes."""
        return float(np.dot(self.weights, values))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, QuadratureRule):
            return NotImplemented
        return (self.family == other.family
                and np.array_equal(self.nodes, other.nodes)
                and np.array_equal(self.weights, other.weights))

    def __hash__(self) -> int:
        return hash((self.family, self.nodes.tobytes(), self.weights.tobytes()))


_S5, _S6, _S15 = np.sqrt(5.0), np.sqrt(6.0), np.sqrt(15.0)

# Closed forms on [0, 1] for every rule that appears in the printed tableaux
CLOSED_FORMS: Dict[Tuple[QuadratureFamily, int], Tuple[List[float], List[float]]] = {
    (QuadratureFamily.GAUSS, 1): ([0.5], [1.0]),
    (QuadratureFamily.GAUSS, 2): ([(3 - np.sqrt(3.0)) / 6, (3 + np.sqrt(3.0)) / 6], [0.5, 0.5]),
    (QuadratureFamily.GAUSS, 3): ([(5 - _S15) / 10, 0.5, (5 + _S15) / 10], [5 / 18, 4 / 9, 5 / 18]),
    (QuadratureFamily.RADAU_LEFT, 2): ([0.0, 2 / 3], [0.25, 0.75]),
    (QuadratureFamily.RADAU_LEFT, 3): ([0.0, (6 - _S6) / 10, (6 + _S6) / 10],
                                       [1 / 9, (16 + _S6) / 36, (16 - _S6) / 36]),
    (QuadratureFamily.RADAU_RIGHT, 2): ([1 / 3, 1.0], [0.75, 0.25]),
    (QuadratureFamily.RADAU_RIGHT, 3): ([(4 - _S6) / 10, (4 + _S6) / 10, 1.0],
                                        [(16 - _S6) / 36, (16 + _S6) / 36, 1 / 9]),
    (QuadratureFamily.LOBATTO, 2): ([0.0, 1.0], [0.5, 0.5]),
    (QuadratureFamily.LOBATTO, 3): ([0.0, 0.5, 1.0], [1 / 6, 2 / 3, 1 / 6]),
    (QuadratureFamily.LOBATTO, 4): ([0.0, (5 - _S5) / 10, (5 + _S5) / 10, 1.0],
                                    [1 / 12, 5 / 12, 5 / 12, 1 / 12]),
}


def parse_rule_name(name: str) -> Tuple[QuadratureFamily, int]:
    """
    Parse a rule name such as 'gauss:3' or 'radau-left:2'.

    Raises:
        ValueError: unknown family or malformed size
    """
    family_text, sep, size_text = name.strip().lower().partition(":")
    if not sep:
        raise ValueError(f"quadrature rule must look like family:N, got {name!r}")
    try:
        family = QuadratureFamily(family_text)
    except ValueError:
        known = ", ".join(f.value for f in QuadratureFamily)
        raise ValueError(f"unknown quadrature family {family_text!r} (known: {known})")
    try:
        r = int(size_text)
    except ValueError:
        raise ValueError(f"quadrature size must be an integer, got {size_text!r}")
    return family, r


def legendre_with_derivative(n: int, y: float) -> Tuple[float, float, float]:
    """Standard Legendre L_{n-1}(y), L_n(y) and L'_n(y) on [-1, 1]."""
    prev, cur = 0.0, 1.0
    dprev, dcur = 0.0, 0.0
    for k in range(n):
        # L_{k+1} = ((2k+1) y L_k - k L_{k-1}) / (k+1);  L'_{k+1} = L'_{k-1} + (2k+1) L_k
        nxt = ((2 * k + 1) * y * cur - k * prev) / (k + 1)
        dnxt = dprev + (2 * k + 1) * cur
        prev, cur = cur, nxt
        dprev, dcur = dcur, dnxt
    return prev, cur, dcur


def _newton_deflated(fn: Callable[[float], Tuple[float, float]], guesses: List[float],
                     known: List[float], label: str) -> List[float]:
    """Find one root per guess, deflating against every root found so far."""
    roots = list(known)
    found = []
    for guess in guesses:
        y = guess
        step = np.inf
        for _ in range(NEWTON_MAX_ITER):
            g, dg = fn(y)
            denominator = dg - g * sum(1.0 / (y - z) for z in roots)
            if denominator == 0.0:
                break
            step = g / denominator
            y -= step
            if abs(step) <= 1e-15:
                break
        else:
            logger.error(f"Newton iteration for {label} nodes stalled near {y}")
            raise ConvergenceError(f"quadrature node search for {label} did not converge",
                                   last_residual=abs(step), iterations=NEWTON_MAX_ITER)
        roots.append(y)
        found.append(y)
    return found


def _gauss(r: int) -> Tuple[np.ndarray, np.ndarray]:
    def fn(y):
        _, value, derivative = legendre_with_derivative(r, y)
        return value, derivative

    guesses = [-np.cos(np.pi * (i + 0.75) / (r + 0.5)) for i in range(r)]
    y = np.sort(np.array(_newton_deflated(fn, guesses, [], f"gauss:{r}")))
    derivative = np.array([legendre_with_derivative(r, v)[2] for v in y])
    w = 2.0 / ((1.0 - y ** 2) * derivative ** 2)
    return y, w


def _radau_left(r: int) -> Tuple[np.ndarray, np.ndarray]:
    if r == 1:
        return np.array([-1.0]), np.array([2.0])

    def fn(y):
        _, low, d_low = legendre_with_derivative(r - 1, y)
        _, high, d_high = legendre_with_derivative(r, y)
        return low + high, d_low + d_high

    # Chebyshev-Gauss-Radau starting points, endpoint excluded
    guesses = [-np.cos(2.0 * np.pi * i / (2 * r - 1)) for i in range(1, r)]
    interior = np.sort(np.array(_newton_deflated(fn, guesses, [-1.0], f"radau-left:{r}")))
    y = np.concatenate(([-1.0], interior))
    l_prev = np.array([legendre_with_derivative(r - 1, v)[1] for v in interior])
    w = np.concatenate(([2.0 / r ** 2], (1.0 - interior) / (r ** 2 * l_prev ** 2)))
    return y, w


def _lobatto(r: int) -> Tuple[np.ndarray, np.ndarray]:
    n = r - 1

    def fn(y):
        _, value, derivative = legendre_with_derivative(n, y)
        # Legendre's equation gives L'' from L and L'
        second = (2.0 * y * derivative - n * (n + 1) * value) / (1.0 - y * y)
        return derivative, second

    guesses = [-np.cos(np.pi * i / n) for i in range(1, n)]
    interior = _newton_deflated(fn, guesses, [-1.0, 1.0], f"lobatto:{r}")
    y = np.sort(np.array([-1.0] + interior + [1.0]))
    values = np.array([legendre_with_derivative(n, v)[1] for v in y])
    w = 2.0 / (r * n * values ** 2)
    return y, w


def _exactness_for(family: QuadratureFamily, r: int) -> int:
    if family == QuadratureFamily.GAUSS:
        return 2 * r - 1
    if family == QuadratureFamily.LOBATTO:
        return 2 * r - 3
    return 2 * r - 2


def _cross_check(rule: QuadratureRule) -> None:
    """Compare against closed forms (and numpy's Gauss-Legendre) where available."""
    references = []
    closed = CLOSED_FORMS.get((rule.family, rule.r))
    if closed is not None:
        references.append(("closed form", np.array(closed[0]), np.array(closed[1])))
    if rule.family == QuadratureFamily.GAUSS:
        y, w = np.polynomial.legendre.leggauss(rule.r)
        references.append(("numpy leggauss", (y + 1.0) / 2.0, w / 2.0))

    for label, nodes, weights in references:
        deviation = max(np.max(np.abs(rule.nodes - nodes)), np.max(np.abs(rule.weights - weights)))
        if deviation > GOLDEN_TOL:
            logger.error(f"{rule.name} deviates from its {label} by {deviation:.3e}")
            raise NumericalFailureError(f"{rule.name} deviates from its {label} by {deviation:.3e}")


def make_rule(family: QuadratureFamily, r: int) -> QuadratureRule:
    """
    Generate an r-node rule of the given family on [0, 1].

    Args:
        family: QuadratureFamily member (or its string value)
        r: number of nodes, 1 <= r <= 6 (2 <= r for Lobatto)

    Returns:
        QuadratureRule with ascending nodes

    Raises:
        UnsupportedSizeError: r out of range
        NumericalFailureError: Newton did not converge or a golden check failed
    """
    family = QuadratureFamily(family)
    if not 1 <= r <= MAX_NODES:
        raise UnsupportedSizeError(f"quadrature size must be between 1 and {MAX_NODES}, got {r}")
    if family == QuadratureFamily.LOBATTO and r < 2:
        raise UnsupportedSizeError(f"a Lobatto rule needs both endpoints, so r >= 2 (got {r})")

    if family == QuadratureFamily.GAUSS:
        y, w = _gauss(r)
    elif family == QuadratureFamily.LOBATTO:
        y, w = _lobatto(r)
    else:
        y, w = _radau_left(r)
        if family == QuadratureFamily.RADAU_RIGHT:
            y, w = -y[::-1], w[::-1]

    rule = QuadratureRule(family, (y + 1.0) / 2.0, w / 2.0, _exactness_for(family, r))
    _cross_check(rule)
    logger.debug(f"Generated {rule.name}: nodes={rule.nodes.tolist()} weights={rule.weights.tolist()}")
    return rule


def rule_from_name(name: str) -> QuadratureRule:
    """make_rule for a CLI-style name like 'lobatto:3'."""
    family, r = parse_rule_name(name)
    return make_rule(family, r)


def verify_exactness(rule: QuadratureRule, tol: float = 1e-12) -> int:
    """
    Largest k <= 2r+2 such that sum_i b_i c_i^m = 1/(m+1) for every m <= k.

    Returns -1 when even the constant is not integrated correctly.
    """
    verified = -1
    for m in range(2 * rule.r + 3):
        if abs(np.dot(rule.weights, rule.nodes ** m) - 1.0 / (m + 1)) > tol:
            break
        verified = m
    return verified


def gauss_legendre_01(n: int) -> Tuple[np.ndarray, np.ndarray]:
    """n-point Gauss-Legendre nodes and weights on [0, 1] with no size cap (oracle use)."""
    y, w = np.polynomial.legendre.leggauss(n)
    return (y + 1.0) / 2.0, w / 2.0
