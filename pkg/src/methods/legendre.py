"""
Shifted, normalized Legendre polynomials on [0, 1].

P_n(x) = sqrt(2n+1) * L_n(2x - 1), so that the family is orthonormal on [0, 1].
Coefficient series in this basis are the representation used for every
continuous-stage coefficient function in the package.
"""

import logging
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from utils.config import get_settings
from utils.errors import DegreeLimitError

logger = logging.getLogger(__name__)

ArrayLike = Union[float, Sequence[float], np.ndarray]


def _cap(max_degree: Optional[int]) -> int:
    return get_settings().max_degree if max_degree is None else int(max_degree)


def xi(n: int) -> float:
    """xi_n = 1 / (2 sqrt(4 n^2 - 1)), the off-diagonal constant of the recurrences."""
    if n < 1:
        raise ValueError(f"xi is defined for n >= 1, got {n}")
    return 1.0 / (2.0 * np.sqrt(4.0 * n * n - 1.0))


def eval_basis_all(n: int, x: ArrayLike, max_degree: Optional[int] = None) -> np.ndarray:
    """
    Evaluate P_0 .. P_n at x in one sweep of the three-term recurrence.

    Args:
        n: highest degree wanted
        x: point or array of points in [0, 1]
        max_degree: degree cap (defaults to the configured CSRKN_MAX_DEGREE)

    Returns:
        Array of shape (n + 1,) + shape(x); row k holds P_k(x)
    """
    cap = _cap(max_degree)
    if n < 0:
        raise ValueError(f"degree must be non-negative, got {n}")
    if n > cap:
        raise DegreeLimitError(n, cap)

    y = 2.0 * np.asarray(x, dtype=float) - 1.0
    values = np.empty((n + 1,) + y.shape)
    values[0] = 1.0
    if n >= 1:
        values[1] = y
    # (k+1) L_{k+1} = (2k+1) y L_k - k L_{k-1}
    for k in range(1, n):
        values[k + 1] = ((2 * k + 1) * y * values[k] - k * values[k - 1]) / (k + 1)

    scale = np.sqrt(2.0 * np.arange(n + 1) + 1.0)
    return values * scale.reshape((n + 1,) + (1,) * y.ndim)


def eval_basis(iota: int, x: ArrayLike, max_degree: Optional[int] = None) -> Union[float, np.ndarray]:
    """
    Evaluate the normalized shifted Legendre polynomial P_iota at x.

    Args:
        iota: polynomial degree, 0 <= iota <= max_degree
        x: point (or array of points) in [0, 1]
        max_degree: degree cap (defaults to the configured value)

    Returns:
        P_iota(x), a float for scalar x

    Raises:
        DegreeLimitError: iota exceeds the cap
    """
    value = eval_basis_all(iota, x, max_degree)[iota]
    return float(value) if np.ndim(value) == 0 else value


class LegendreSeries1D:
    """
    Univariate series sum_i coeffs[i] * P_i(x).

    Values are immutable; arithmetic returns new series. Small coefficients are
    never dropped implicitly, call prune() for that.
    """

    __slots__ = ("_coeffs", "max_degree")

    def __init__(self, coeffs: ArrayLike, max_degree: Optional[int] = None):
        array = np.array(coeffs, dtype=float).reshape(-1)
        if array.size == 0:
            array = np.zeros(1)
        self.max_degree = _cap(max_degree)
        if array.size - 1 > self.max_degree:
            raise DegreeLimitError(array.size - 1, self.max_degree, what="series degree")
        array.setflags(write=False)
        self._coeffs = array

    @property
    def coeffs(self) -> np.ndarray:
        return self._coeffs

    @property
    def degree(self) -> int:
        return self._coeffs.size - 1

    def padded(self, degree: int) -> np.ndarray:
        """Coefficients zero-padded (never truncated) to the given degree."""
        out = np.zeros(max(degree, self.degree) + 1)
        out[: self._coeffs.size] = self._coeffs
        return out

    def __call__(self, x: ArrayLike) -> Union[float, np.ndarray]:
        return eval_series_1d(self, x)

    def __add__(self, other: "LegendreSeries1D") -> "LegendreSeries1D":
        degree = max(self.degree, other.degree)
        return LegendreSeries1D(self.padded(degree) + other.padded(degree), self.max_degree)

    def __sub__(self, other: "LegendreSeries1D") -> "LegendreSeries1D":
        return self + (-1.0) * other

    def __mul__(self, scalar: float) -> "LegendreSeries1D":
        return LegendreSeries1D(self._coeffs * float(scalar), self.max_degree)

    __rmul__ = __mul__

    def __neg__(self) -> "LegendreSeries1D":
        return self * -1.0

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LegendreSeries1D):
            return NotImplemented
        degree = max(self.degree, other.degree)
        return bool(np.array_equal(self.padded(degree), other.padded(degree)))

    def __hash__(self) -> int:
        return hash(tuple(np.trim_zeros(self._coeffs, "b")))

    def __repr__(self) -> str:
        return f"LegendreSeries1D({self._coeffs.tolist()})"

    def prune(self, tol: float = 1e-14) -> "LegendreSeries1D":
        """Zero coefficients below tol in magnitude and drop trailing zeros."""
        array = np.where(np.abs(self._coeffs) < tol, 0.0, self._coeffs)
        trimmed = np.trim_zeros(array, "b")
        return LegendreSeries1D(trimmed if trimmed.size else [0.0], self.max_degree)


class LegendreSeries2D:
    """
    Bivariate series sum_{i,j} coeffs[i, j] * P_i(tau) * P_j(sigma).

    Row index i is the tau-degree, column index j the sigma-degree.
    """

    __slots__ = ("_coeffs", "max_degree")

    def __init__(self, coeffs: ArrayLike, max_degree: Optional[int] = None):
        array = np.array(coeffs, dtype=float)
        if array.ndim != 2:
            raise ValueError(f"2D series needs a coefficient matrix, got shape {array.shape}")
        self.max_degree = _cap(max_degree)
        for axis_degree in (array.shape[0] - 1, array.shape[1] - 1):
            if axis_degree > self.max_degree:
                raise DegreeLimitError(axis_degree, self.max_degree, what="series degree")
        array.setflags(write=False)
        self._coeffs = array

    @classmethod
    def from_entries(cls, entries: dict, max_degree: Optional[int] = None) -> "LegendreSeries2D":
        """Build a series from a sparse {(i, j): value} mapping."""
        if not entries:
            return cls(np.zeros((1, 1)), max_degree)
        rows = max(i for i, _ in entries) + 1
        cols = max(j for _, j in entries) + 1
        matrix = np.zeros((rows, cols))
        for (i, j), value in entries.items():
            matrix[i, j] = value
        return cls(matrix, max_degree)

    @property
    def coeffs(self) -> np.ndarray:
        return self._coeffs

    @property
    def degree(self) -> Tuple[int, int]:
        return self._coeffs.shape[0] - 1, self._coeffs.shape[1] - 1

    def padded(self, degree: int) -> np.ndarray:
        """Square coefficient matrix zero-padded to the given degree in both variables."""
        size = max(degree, *self.degree) + 1
        out = np.zeros((size, size))
        out[: self._coeffs.shape[0], : self._coeffs.shape[1]] = self._coeffs
        return out

    def entry(self, i: int, j: int) -> float:
        if i < self._coeffs.shape[0] and j < self._coeffs.shape[1]:
            return float(self._coeffs[i, j])
        return 0.0

    def __call__(self, tau: ArrayLike, sigma: ArrayLike) -> Union[float, np.ndarray]:
        return eval_series_2d(self, tau, sigma)

    def transpose(self) -> "LegendreSeries2D":
        return LegendreSeries2D(self._coeffs.T, self.max_degree)

    def __add__(self, other: "LegendreSeries2D") -> "LegendreSeries2D":
        degree = max(*self.degree, *other.degree)
        return LegendreSeries2D(self.padded(degree) + other.padded(degree), self.max_degree)

    def __sub__(self, other: "LegendreSeries2D") -> "LegendreSeries2D":
        return self + (-1.0) * other

    def __mul__(self, scalar: float) -> "LegendreSeries2D":
        return LegendreSeries2D(self._coeffs * float(scalar), self.max_degree)

    __rmul__ = __mul__

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LegendreSeries2D):
            return NotImplemented
        degree = max(*self.degree, *other.degree)
        return bool(np.array_equal(self.padded(degree), other.padded(degree)))

    def __hash__(self) -> int:
        return hash(self._coeffs.tobytes())

    def __repr__(self) -> str:
        return f"LegendreSeries2D({self._coeffs.tolist()})"

    def prune(self, tol: float = 1e-14) -> "LegendreSeries2D":
        """Zero coefficients below tol and shrink the matrix to its nonzero extent."""
        array = np.where(np.abs(self._coeffs) < tol, 0.0, self._coeffs)
        rows = np.flatnonzero(np.any(array != 0.0, axis=1))
        cols = np.flatnonzero(np.any(array != 0.0, axis=0))
        if rows.size == 0:
            return LegendreSeries2D(np.zeros((1, 1)), self.max_degree)
        return LegendreSeries2D(array[: rows[-1] + 1, : cols[-1] + 1], self.max_degree)


def eval_series_1d(s: LegendreSeries1D, x: ArrayLike) -> Union[float, np.ndarray]:
    """Evaluate sum_i s.coeffs[i] * P_i(x)."""
    basis = eval_basis_all(s.degree, x, s.max_degree)
    value = np.tensordot(s.coeffs, basis, axes=1)
    return float(value) if np.ndim(value) == 0 else value


def eval_series_2d(s: LegendreSeries2D, tau: ArrayLike, sigma: ArrayLike) -> Union[float, np.ndarray]:
    """
    Evaluate the tensor-basis sum at (tau, sigma).

    Args:
        s: bivariate series
        tau: first argument (scalar or array)
        sigma: second argument, broadcast against tau

    Returns:
        sum_{i,j} s.coeffs[i, j] P_i(tau) P_j(sigma)
    """
    tau_arr, sigma_arr = np.broadcast_arrays(np.asarray(tau, dtype=float), np.asarray(sigma, dtype=float))
    deg_tau, deg_sigma = s.degree
    p_tau = eval_basis_all(deg_tau, tau_arr, s.max_degree)
    p_sigma = eval_basis_all(deg_sigma, sigma_arr, s.max_degree)
    value = np.einsum("i...,ij,j...->...", p_tau, s.coeffs, p_sigma)
    return float(value) if np.ndim(value) == 0 else value


def antiderivative(s: LegendreSeries1D) -> LegendreSeries1D:
    """
    Series of t(x) = integral of s from 0 to x.

    Uses int_0^x P_0 = P_0 / 2 + xi_1 P_1 and
    int_0^x P_i = xi_{i+1} P_{i+1} - xi_i P_{i-1} for i >= 1.

    Raises:
        DegreeLimitError: the result would exceed the degree cap
    """
    if s.degree + 1 > s.max_degree:
        raise DegreeLimitError(s.degree + 1, s.max_degree, what="antiderivative degree")

    out = np.zeros(s.degree + 2)
    c = s.coeffs
    out[0] += 0.5 * c[0]
    out[1] += xi(1) * c[0]
    for i in range(1, s.degree + 1):
        out[i + 1] += xi(i + 1) * c[i]
        out[i - 1] -= xi(i) * c[i]
    return LegendreSeries1D(out, s.max_degree)


def inner_product_1d(a: LegendreSeries1D, b: LegendreSeries1D) -> float:
    """Integral over [0, 1] of a(t) b(t); by orthonormality, the coefficient dot product."""
    n = min(a.coeffs.size, b.coeffs.size)
    return float(np.dot(a.coeffs[:n], b.coeffs[:n]))


def multiply_by_x(s: LegendreSeries1D) -> LegendreSeries1D:
    """
    Series of x * s(x).

    x P_n = P_n / 2 + (n+1) xi_{n+1} P_{n+1} + n xi_n P_{n-1}
    """
    if s.degree + 1 > s.max_degree:
        raise DegreeLimitError(s.degree + 1, s.max_degree, what="product degree")

    out = np.zeros(s.degree + 2)
    for n, c in enumerate(s.coeffs):
        out[n] += 0.5 * c
        out[n + 1] += (n + 1) * xi(n + 1) * c
        if n >= 1:
            out[n - 1] += n * xi(n) * c
    return LegendreSeries1D(out, s.max_degree)


def monomial_to_legendre(k: int, max_degree: Optional[int] = None) -> LegendreSeries1D:
    """
    Exact expansion of x^k in the normalized shifted basis.

    Args:
        k: monomial degree
        max_degree: degree cap (defaults to the configured value)

    Returns:
        Series whose value is x^k

    Raises:
        DegreeLimitError: k exceeds the cap
    """
    cap = _cap(max_degree)
    if k < 0:
        raise ValueError(f"monomial degree must be non-negative, got {k}")
    if k > cap:
        raise DegreeLimitError(k, cap, what="monomial degree")

    series = LegendreSeries1D([1.0], cap)
    for _ in range(k):
        series = multiply_by_x(series)
    return series
