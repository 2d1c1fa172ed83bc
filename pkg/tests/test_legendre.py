import unittest
import numpy as np
import sys
import os

# Add src directory to path
sys.path.append(os.path.join(os.path.dirname(__file__), '..', 'src'))

from methods.legendre import (
    LegendreSeries1D,
    LegendreSeries2D,
    antiderivative,
    eval_basis,
    eval_basis_all,
    eval_series_1d,
    eval_series_2d,
    inner_product_1d,
    monomial_to_legendre,
    multiply_by_x,
    xi,
)
from utils.errors import DegreeLimitError


class TestLegendreBasis(unittest.TestCase):
    """Test suite for the normalized shifted Legendre basis"""

    def test_basis_values(self):
        """Test P_0, P_1 and P_2 at reference points."""
        self.assertAlmostEqual(eval_basis(0, 0.37), 1.0, places=15)
        self.assertAlmostEqual(eval_basis(1, 1.0), np.sqrt(3.0), places=15)
        self.assertAlmostEqual(eval_basis(2, 0.5), -np.sqrt(5.0) / 2, places=15)

    def test_basis_is_orthonormal(self):
        """Test that Gauss quadrature of P_i P_j gives the identity."""
        y, w = np.polynomial.legendre.leggauss(12)
        x, w = (y + 1) / 2, w / 2
        values = eval_basis_all(6, x)
        gram = (values * w) @ values.T
        np.testing.assert_allclose(gram, np.eye(7), atol=1e-13)

    def test_array_argument(self):
        """Test evaluation on an array of points."""
        x = np.array([0.0, 0.5, 1.0])
        np.testing.assert_allclose(eval_basis(1, x), np.sqrt(3.0) * (2 * x - 1), atol=1e-15)

    def test_degree_cap(self):
        """Test that degrees above the cap are refused."""
        with self.assertRaises(DegreeLimitError):
            eval_basis(9, 0.5, max_degree=8)
        with self.assertRaises(DegreeLimitError):
            LegendreSeries1D(np.ones(10), max_degree=8)

    def test_xi(self):
        """Test the recurrence constant xi_n."""
        self.assertAlmostEqual(xi(1), 1 / (2 * np.sqrt(3.0)), places=15)
        with self.assertRaises(ValueError):
            xi(0)


class TestLegendreSeries(unittest.TestCase):
    """Test suite for series evaluation and algebra"""

    def test_series_evaluates_identity(self):
        """Test that [1/2, 1/(2 sqrt 3)] is the function x."""
        s = LegendreSeries1D([0.5, 1 / (2 * np.sqrt(3.0))])
        self.assertAlmostEqual(eval_series_1d(s, 0.7), 0.7, places=14)

    def test_series_evaluates_one_minus_x(self):
        """Test that [1/2, -1/(2 sqrt 3)] is the function 1 - x."""
        s = LegendreSeries1D([0.5, -1 / (2 * np.sqrt(3.0))])
        self.assertAlmostEqual(s(0.25), 0.75, places=14)

    def test_antiderivative_of_p1(self):
        """Test the antiderivative of P_1."""
        result = antiderivative(LegendreSeries1D([0.0, 1.0]))
        np.testing.assert_allclose(result.coeffs, [-xi(1), 0.0, xi(2)], atol=1e-15)

    def test_antiderivative_of_constant(self):
        """Test that the antiderivative of 1 is x."""
        result = antiderivative(LegendreSeries1D([1.0]))
        np.testing.assert_allclose(result.coeffs, [0.5, xi(1)], atol=1e-15)

    def test_antiderivative_vanishes_at_zero(self):
        """Test t(0) = 0 and t(1) = integral of s."""
        s = LegendreSeries1D([0.3, -1.2, 0.4, 2.0])
        t = antiderivative(s)
        self.assertAlmostEqual(t(0.0), 0.0, places=14)
        self.assertAlmostEqual(t(1.0), 0.3, places=14)

    def test_antiderivative_degree_cap(self):
        """Test that the antiderivative may not exceed the cap."""
        with self.assertRaises(DegreeLimitError):
            antiderivative(LegendreSeries1D(np.ones(9), max_degree=8))

    def test_inner_product(self):
        """Test the inner product against direct quadrature."""
        a = LegendreSeries1D([1.0, 2.0, -0.5])
        b = LegendreSeries1D([0.5, -1.0])
        self.assertAlmostEqual(inner_product_1d(a, b), -1.5, places=15)
        y, w = np.polynomial.legendre.leggauss(8)
        x, w = (y + 1) / 2, w / 2
        self.assertAlmostEqual(float(np.sum(w * a(x) * b(x))), -1.5, places=13)

    def test_monomials(self):
        """Test expansions of x^2 and x^3."""
        np.testing.assert_allclose(monomial_to_legendre(2).coeffs,
                                   [1 / 3, np.sqrt(3.0) / 6, np.sqrt(5.0) / 30], atol=1e-15)
        np.testing.assert_allclose(monomial_to_legendre(3).coeffs,
                                   [1 / 4, 3 * np.sqrt(3.0) / 20, np.sqrt(5.0) / 20, np.sqrt(7.0) / 140],
                                   atol=1e-15)

    def test_multiply_by_x(self):
        """Test x * s(x) pointwise."""
        s = LegendreSeries1D([0.2, 0.7, -0.3])
        product = multiply_by_x(s)
        x = np.linspace(0, 1, 7)
        np.testing.assert_allclose(product(x), x * s(x), atol=1e-14)

    def test_arithmetic_and_equality(self):
        """Test addition, scaling and zero-padded equality."""
        a = LegendreSeries1D([1.0, 2.0])
        b = LegendreSeries1D([0.5, 0.0, 1.0])
        self.assertEqual(a + b, LegendreSeries1D([1.5, 2.0, 1.0]))
        self.assertEqual(2 * a, LegendreSeries1D([2.0, 4.0, 0.0]))
        self.assertEqual((a - a).prune(), LegendreSeries1D([0.0]))

    def test_series_are_immutable(self):
        """Test that coefficient arrays cannot be written."""
        s = LegendreSeries1D([1.0, 2.0])
        with self.assertRaises(ValueError):
            s.coeffs[0] = 5.0

    def test_bivariate_evaluation(self):
        """Test eval_series_2d against a product of univariate values."""
        s = LegendreSeries2D.from_entries({(0, 0): 0.5, (1, 2): -0.25, (2, 0): 1.0})
        tau, sigma = 0.3, 0.8
        expected = (0.5 - 0.25 * eval_basis(1, tau) * eval_basis(2, sigma)
                    + eval_basis(2, tau))
        self.assertAlmostEqual(eval_series_2d(s, tau, sigma), expected, places=14)
        self.assertAlmostEqual(s.transpose()(sigma, tau), expected, places=14)
        self.assertEqual(s.entry(5, 5), 0.0)


if __name__ == '__main__':
    unittest.main()
