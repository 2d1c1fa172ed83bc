import unittest
import numpy as np
import sys
import os

# Add src directory to path
sys.path.append(os.path.join(os.path.dirname(__file__), '..', 'src'))

from data.golden_tables import GOLDEN_TABLEAUX
from methods.cstableau import SymplecticFamilySpec, build_symplectic_family
from methods.quadrature import QuadratureFamily, make_rule, rule_from_name
from methods.tableau import (
    AffineForm,
    RknTableau,
    StructureClass,
    check_order_discrete,
    check_symplectic_discrete,
    classify_structure,
    discretize,
    discretize_parametric,
    solve_structure,
)
from utils.errors import AssumptionViolationError, InvalidTableauError, UnsupportedFamilyError

SQRT3 = np.sqrt(3.0)
SQRT5 = np.sqrt(5.0)


def family_tableau(order, rule, **params):
    return discretize(build_symplectic_family(SymplecticFamilySpec(order, params)), rule_from_name(rule))


class TestDiscretize(unittest.TestCase):
    """Test suite for discretization of csRKN families"""

    def test_lobatto_two_order_two(self):
        """Test the Lobatto-2 member of the order-2 family at the origin."""
        t = family_tableau(2, "lobatto:2")
        np.testing.assert_allclose(t.a_bar, [[0.25, -0.25], [0.25, -0.25]], atol=1e-15)
        np.testing.assert_allclose(t.b_bar, [0.5, 0.0], atol=1e-15)
        np.testing.assert_allclose(t.b, [0.5, 0.5], atol=1e-15)
        np.testing.assert_allclose(t.c, [0.0, 1.0], atol=1e-15)
        self.assertEqual(t.meta["quadrature"], "lobatto:2")
        self.assertEqual(t.meta["source_family_order"], 2)

    def test_gauss_two_order_four(self):
        """Test the Gauss-2 member of the order-4 family at the origin."""
        t = family_tableau(4, "gauss:2")
        np.testing.assert_allclose(t.a_bar, [[1 / 12, (1 - SQRT3) / 12], [(1 + SQRT3) / 12, 1 / 12]], atol=1e-15)
        np.testing.assert_allclose(t.b_bar, [0.25 + SQRT3 / 12, 0.25 - SQRT3 / 12], atol=1e-15)
        np.testing.assert_allclose(t.b, [0.5, 0.5], atol=1e-15)

    def test_gauss_three_order_five_corner(self):
        """Test entry (1,1) of the Gauss-3 order-5 tableau."""
        t = family_tableau(5, "gauss:3")
        self.assertAlmostEqual(t.a_bar[0, 0], 2 / 135, places=14)

    def test_lobatto_four_order_five_weights(self):
        """Test b_bar of the Lobatto-4 order-5 tableau."""
        t = family_tableau(5, "lobatto:4")
        np.testing.assert_allclose(t.b_bar, [1 / 12, (5 + SQRT5) / 24, (5 - SQRT5) / 24, 0.0], atol=1e-15)

    def test_printed_tableaux_are_symplectic_with_transferred_order(self):
        """Test symplecticity and order min(k, p) for every printed family member."""
        for entry in GOLDEN_TABLEAUX:
            if entry.kind != "family":
                continue
            values = {name: v for name, v in {"alpha": 0.3, "beta": 0.2, "gamma": -0.1}.items()
                      if name in entry.varied}
            rule = rule_from_name(entry.rule)
            with self.subTest(case=entry.case):
                t = discretize(build_symplectic_family(SymplecticFamilySpec(entry.order, values)), rule)
                self.assertTrue(check_symplectic_discrete(t).passed)
                self.assertGreaterEqual(check_order_discrete(t).order, min(entry.order, rule.order))


class TestDiscreteChecks(unittest.TestCase):
    """Test suite for the discrete symplecticity, order and structure checks"""

    def setUp(self):
        """Set up test fixtures before each test method."""
        self.verlet = RknTableau.stormer_verlet()
        self.gauss = family_tableau(4, "gauss:2")

    def test_orders(self):
        """Test the order of reference tableaux."""
        self.assertEqual(check_order_discrete(self.gauss).order, 4)
        self.assertEqual(check_order_discrete(family_tableau(2, "lobatto:2")).order, 2)
        self.assertEqual(check_order_discrete(family_tableau(5, "gauss:3")).order, 5)
        self.assertEqual(check_order_discrete(self.verlet).order, 2)

    def test_order_condition_values(self):
        """Test reported values of the first conditions."""
        report = check_order_discrete(self.gauss)
        self.assertAlmostEqual(report.values[1], 1.0, places=14)
        self.assertAlmostEqual(report.values[4], 1 / 6, places=14)
        self.assertLess(max(report.residuals[n] for n in range(1, 8)), 1e-11)

    def test_verlet_is_symplectic(self):
        """Test the symplecticity conditions on Stormer-Verlet."""
        report = check_symplectic_discrete(self.verlet)
        self.assertTrue(report.passed)
        self.assertEqual(report.failed_conditions(), [])

    def test_perturbed_entry_breaks_symplecticity(self):
        """Test that changing one a_bar entry is detected."""
        broken = self.gauss.with_entry(0, 1, self.gauss.a_bar[0, 1] + 0.05)
        report = check_symplectic_discrete(broken)
        self.assertFalse(report.passed)
        self.assertEqual(report.failed_conditions(), ["b_i (b_bar_j - a_ij) = b_j (b_bar_i - a_ji)"])
        self.assertTrue(broken.meta["modified"])

    def test_order_check_refuses_foreign_weights(self):
        """Test the b_bar = b (1 - c) hypothesis."""
        foreign = RknTableau(c=[0.0, 1.0], a_bar=[[0.0, 0.0], [0.5, 0.0]], b_bar=[0.3, 0.0], b=[0.5, 0.5])
        with self.assertRaises(AssumptionViolationError):
            check_order_discrete(foreign)

    def test_classify_structure(self):
        """Test explicit, diagonally implicit and fully implicit tableaux."""
        self.assertEqual(classify_structure(self.verlet), StructureClass.EXPLICIT)
        self.assertEqual(classify_structure(self.gauss), StructureClass.FULLY_IMPLICIT)
        dirk = RknTableau(c=[0.0, 1.0], a_bar=[[0.1, 0.0], [0.5, 0.2]], b_bar=[0.5, 0.0], b=[0.5, 0.5])
        self.assertEqual(classify_structure(dirk), StructureClass.DIAGONALLY_IMPLICIT)

    def test_tableau_validation(self):
        """Test rejection of inconsistent tableaux."""
        with self.assertRaises(ValueError):
            RknTableau(c=[0.0, 1.0], a_bar=[[0.0, 0.0], [0.5, 0.0]], b_bar=[0.5, 0.0], b=[0.5, 0.4])
        with self.assertRaises(ValueError):
            RknTableau(c=[0.0, 1.0], a_bar=[[0.0]], b_bar=[0.5, 0.0], b=[0.5, 0.5])
        with self.assertRaises(ValueError):
            RknTableau(c=[0.0, np.nan], a_bar=[[0.0, 0.0], [0.5, 0.0]], b_bar=[0.5, 0.0], b=[0.5, 0.5])

    def test_validation_names_the_field(self):
        """Test that each rejected array is reported by name."""
        verlet = dict(c=[0.0, 1.0], a_bar=[[0.0, 0.0], [0.5, 0.0]], b_bar=[0.5, 0.0], b=[0.5, 0.5])
        cases = {
            "a_bar": {"a_bar": [[0.0, 0.0, 0.0], [0.5, 0.0, 0.0]]},
            "b_bar": {"b_bar": [0.5, 0.0, 0.0]},
            "c": {"c": [0.0, np.inf]},
            "b": {"b": [0.5, 0.6]},
        }
        for name, change in cases.items():
            with self.subTest(field=name):
                with self.assertRaises(InvalidTableauError) as ctx:
                    RknTableau(**{**verlet, **change})
                self.assertEqual(ctx.exception.field, name)


class TestParametricTableau(unittest.TestCase):
    """Test suite for affine tableaux and the structure solver"""

    def test_affine_form_algebra(self):
        """Test evaluation, arithmetic and substitution of affine forms."""
        f = AffineForm(1.0, {"alpha": 2.0, "beta": -1.0})
        self.assertEqual(f({"alpha": 0.5, "beta": 1.0}), 1.0)
        self.assertEqual((f - f).is_zero(), True)
        g = f.substitute({"alpha": AffineForm(0.25, {"beta": 0.5})})
        self.assertEqual(g.const, 1.5)
        self.assertEqual(dict(g.lin), {})
        self.assertTrue(g.is_constant())
        with self.assertRaises(KeyError):
            f({"alpha": 1.0})

    def test_radau_left_entry(self):
        """Test entry (1,1) of the order-2 family with Radau-left-2."""
        pt = discretize_parametric(SymplecticFamilySpec(2), make_rule(QuadratureFamily.RADAU_LEFT, 2))
        form = pt.a_bar[0][0]
        self.assertAlmostEqual(form.const, 1 / 8, places=14)
        self.assertAlmostEqual(form.lin["alpha"], 1 / 4, places=14)
        self.assertAlmostEqual(form.lin["beta"], -SQRT3 / 2, places=14)
        self.assertAlmostEqual(form.lin["gamma"], 3 / 4, places=14)

    def test_lobatto_entry(self):
        """Test entry (1,2) of the order-2 family with Lobatto-2."""
        pt = discretize_parametric(SymplecticFamilySpec(2), make_rule(QuadratureFamily.LOBATTO, 2))
        form = pt.a_bar[0][1]
        self.assertAlmostEqual(form.const, -1 / 4, places=14)
        self.assertAlmostEqual(form.lin["alpha"], 1 / 2, places=14)
        self.assertAlmostEqual(form.lin.get("beta", 0.0), 0.0, places=14)
        self.assertAlmostEqual(form.lin["gamma"], -3 / 2, places=14)
        self.assertEqual(pt.parameters, ("alpha", "beta", "gamma"))

    def test_specialize_matches_discretize(self):
        """Test that specializing agrees with direct discretization."""
        rule = make_rule(QuadratureFamily.GAUSS, 3)
        pt = discretize_parametric(SymplecticFamilySpec(5), rule)
        values = {"alpha": 0.4, "beta": -0.7}
        direct = discretize(build_symplectic_family(SymplecticFamilySpec(5, values)), rule)
        np.testing.assert_allclose(pt.specialize(values).a_bar, direct.a_bar, atol=1e-14)

    def test_non_affine_family(self):
        """Test that a family quadratic in its parameter is refused."""
        base = build_symplectic_family(SymplecticFamilySpec(2))

        def quadratic(values):
            return base.with_alpha(0, 0, values["theta"] ** 2)

        with self.assertRaises(UnsupportedFamilyError):
            discretize_parametric(quadratic, make_rule(QuadratureFamily.GAUSS, 2), parameters=["theta"])

    def test_explicit_lobatto_is_stormer_verlet(self):
        """Test the unique explicit member of the order-2 Lobatto-2 family."""
        pt = discretize_parametric(SymplecticFamilySpec(2), make_rule(QuadratureFamily.LOBATTO, 2))
        solution = solve_structure(pt, StructureClass.EXPLICIT)
        self.assertEqual(solution.status, "unique")
        values = solution.parameter_values()
        self.assertAlmostEqual(values["alpha"], 1 / 4, places=12)
        self.assertAlmostEqual(values["beta"], SQRT3 / 12, places=12)
        self.assertAlmostEqual(values["gamma"], -1 / 12, places=12)
        solved = solution.specialize()
        verlet = RknTableau.stormer_verlet()
        np.testing.assert_array_equal(solved.c, verlet.c)
        np.testing.assert_array_equal(solved.b, verlet.b)
        np.testing.assert_array_equal(solved.a_bar == 0.0, verlet.a_bar == 0.0)
        for name in ("a_bar", "b_bar"):
            np.testing.assert_allclose(getattr(solved, name), getattr(verlet, name), rtol=0, atol=1e-14)
        self.assertEqual(classify_structure(solved), StructureClass.EXPLICIT)

    def test_canonical_nodes_are_exact(self):
        """Test that C = tau puts the stages exactly on the rule nodes."""
        for name in ("lobatto:2", "lobatto:4", "radau-left:3", "radau-right:2", "gauss:3"):
            with self.subTest(rule=name):
                rule = rule_from_name(name)
                tableau = discretize(build_symplectic_family(SymplecticFamilySpec(4)), rule)
                np.testing.assert_array_equal(tableau.c, rule.nodes)
                np.testing.assert_array_equal(tableau.b, rule.weights)
        lobatto = discretize(build_symplectic_family(SymplecticFamilySpec(2)), rule_from_name("lobatto:2"))
        self.assertEqual(lobatto.c[0], 0.0)
        self.assertEqual(lobatto.c[1], 1.0)

    def test_explicit_radau_members(self):
        """Test the explicit Radau-left and Radau-right members."""
        expected = {
            QuadratureFamily.RADAU_LEFT: (1 / 8, SQRT3 / 24, -1 / 8),
            QuadratureFamily.RADAU_RIGHT: (1 / 8, SQRT3 / 8, -1 / 8),
        }
        for family, (alpha, beta, gamma) in expected.items():
            with self.subTest(family=family.value):
                pt = discretize_parametric(SymplecticFamilySpec(2), make_rule(family, 2))
                values = solve_structure(pt, StructureClass.EXPLICIT).parameter_values()
                self.assertAlmostEqual(values["alpha"], alpha, places=12)
                self.assertAlmostEqual(values["beta"], beta, places=12)
                self.assertAlmostEqual(values["gamma"], gamma, places=12)

    def test_diagonally_implicit_lobatto_order_four(self):
        """Test the diagonally implicit member of the order-4 Lobatto-3 family."""
        pt = discretize_parametric(SymplecticFamilySpec(4), make_rule(QuadratureFamily.LOBATTO, 3))
        solution = solve_structure(pt, StructureClass.DIAGONALLY_IMPLICIT)
        self.assertEqual(solution.status, "unique")
        values = solution.parameter_values()
        self.assertAlmostEqual(values["alpha"], 0.0, places=12)
        self.assertAlmostEqual(values["beta"], SQRT5 / 30, places=12)
        t = solution.specialize()
        np.testing.assert_allclose(t.a_bar, [[1 / 12, 0, 0], [1 / 12, 0, 0], [1 / 6, 1 / 3, 1 / 12]], atol=1e-12)
        self.assertEqual(check_order_discrete(t).order, 4)
        self.assertTrue(check_symplectic_discrete(t).passed)

    def test_diagonally_implicit_family(self):
        """Test that eliminating gamma leaves alpha and beta free."""
        pt = discretize_parametric(SymplecticFamilySpec(2), make_rule(QuadratureFamily.RADAU_LEFT, 2))
        solution = solve_structure(pt, StructureClass.DIAGONALLY_IMPLICIT)
        self.assertEqual(solution.status, "family")
        self.assertEqual(solution.free, ("alpha", "beta"))
        self.assertEqual(list(solution.solved), ["gamma"])
        t = solution.specialize({"alpha": 0.0, "beta": 0.0})
        np.testing.assert_allclose(t.a_bar, [[0.0, 0.0], [1 / 6, -1 / 6]], atol=1e-13)

    def test_fixed_parameters(self):
        """Test pinning beta before solving."""
        pt = discretize_parametric(SymplecticFamilySpec(2), make_rule(QuadratureFamily.LOBATTO, 2))
        solution = solve_structure(pt, StructureClass.DIAGONALLY_IMPLICIT, fixed={"beta": 0.0})
        self.assertEqual(solution.free, ("alpha",))
        self.assertEqual(solution.parameter_values({"alpha": 0.1})["beta"], 0.0)
        with self.assertRaises(ValueError):
            solve_structure(pt, StructureClass.EXPLICIT, fixed={"delta": 1.0})

    def test_infeasible_target(self):
        """Test that the Gauss-2 order-4 family has no explicit member."""
        pt = discretize_parametric(SymplecticFamilySpec(4), make_rule(QuadratureFamily.GAUSS, 2))
        solution = solve_structure(pt, StructureClass.EXPLICIT)
        self.assertEqual(solution.status, "infeasible")
        self.assertFalse(solution.feasible)
        equation, residual = solution.violated
        self.assertTrue(equation.startswith("a_bar("))
        self.assertGreater(residual, 1e-3)
        with self.assertRaises(ValueError):
            solution.specialize()

    def test_fully_implicit_target_refused(self):
        """Test that the solver only targets sparse structures."""
        pt = discretize_parametric(SymplecticFamilySpec(2), make_rule(QuadratureFamily.LOBATTO, 2))
        with self.assertRaises(ValueError):
            solve_structure(pt, StructureClass.FULLY_IMPLICIT)


if __name__ == '__main__':
    unittest.main()
