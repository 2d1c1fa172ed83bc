import unittest
import json
import math
import numpy as np
import pandas as pd
import tempfile
from unittest import mock
import sys
import os

# Add src directory to path
sys.path.append(os.path.join(os.path.dirname(__file__), '..', 'src'))

from analysis.experiments import (
    ConvergenceReport,
    DriftReport,
    convergence_study,
    defect_survey,
    drift_study,
    fit_slope,
    table_reproduction_suite,
    tableau_label,
    write_report_csv,
    write_report_json,
)
from cli.render import render_reproduction
from data.golden_tables import GOLDEN_SOLUTIONS, GOLDEN_TABLEAUX, GoldenSolution, golden_case, parameter_samples
from data.problems import BenchmarkProblem, harmonic_oscillator, kepler, mass_oscillator, pendulum
from methods.cstableau import SymplecticFamilySpec, build_symplectic_family
from methods.quadrature import rule_from_name
from methods.tableau import RknTableau, discretize
from solvers.integrator import SecondOrderIVP, StepState


def family_tableau(order, rule, **params):
    return discretize(build_symplectic_family(SymplecticFamilySpec(order, params)), rule_from_name(rule))


class TestSlopeFit(unittest.TestCase):
    """Test suite for the log-log slope fit"""

    def test_exact_power_law(self):
        """Test that e = C h^k gives slope k."""
        h = np.array([0.2, 0.1, 0.05, 0.025])
        self.assertAlmostEqual(fit_slope(h, 3.0 * h ** 4), 4.0, places=12)
        self.assertAlmostEqual(fit_slope(h, 0.5 * h ** 2), 2.0, places=12)

    def test_invalid_input(self):
        """Test rejection of short, mismatched and non-positive data."""
        with self.assertRaises(ValueError):
            fit_slope([0.1], [1e-3])
        with self.assertRaises(ValueError):
            fit_slope([0.1, 0.05], [1e-3])
        with self.assertRaises(ValueError):
            fit_slope([0.1, 0.05], [1e-3, 0.0])


class TestConvergenceStudy(unittest.TestCase):
    """Test suite for measured convergence orders"""

    def setUp(self):
        """Set up test fixtures before each test method."""
        self.oscillator = harmonic_oscillator()
        self.h_list = [0.2, 0.1, 0.05, 0.025]

    def test_gauss_order_four(self):
        """Test slope 4 for the Gauss-2 order-4 tableau."""
        report = convergence_study(family_tableau(4, "gauss:2"), self.oscillator, self.h_list, 2.0)
        self.assertIsInstance(report, ConvergenceReport)
        self.assertLess(abs(report.slope - 4.0), 0.2)
        self.assertEqual(report.h, sorted(self.h_list, reverse=True))
        self.assertEqual(len(report.interval_slopes), 3)

    def test_verlet_order_two(self):
        """Test slope 2 for Stormer-Verlet, run on worker threads."""
        report = convergence_study(RknTableau.stormer_verlet(), self.oscillator, self.h_list, 2.0, workers=2)
        self.assertLess(abs(report.slope - 2.0), 0.2)
        self.assertEqual(report.tableau, "stormer-verlet")

    def test_order_five_on_kepler(self):
        """Test slope 5 for a Gauss-3 member of the order-5 family."""
        tableau = family_tableau(5, "gauss:3", alpha=0.5, beta=0.5)
        report = convergence_study(tableau, kepler(0.3), [0.05, 0.025, 0.0125, 0.00625], 1.0)
        self.assertLess(abs(report.slope - 5.0), 0.3)
        self.assertEqual(report.tableau, "order-5/gauss:3")

    def test_argument_checks(self):
        """Test the step-size list validation."""
        verlet = RknTableau.stormer_verlet()
        with self.assertRaises(ValueError):
            convergence_study(verlet, self.oscillator, [0.2, 0.1, 0.05], 2.0)
        with self.assertRaises(ValueError):
            convergence_study(verlet, self.oscillator, [0.2, 0.2, 0.1, 0.05], 2.0)
        with self.assertRaises(ValueError):
            convergence_study(verlet, self.oscillator, [0.3, 0.1, 0.05, 0.025], 2.0)


class TestDriftStudy(unittest.TestCase):
    """Test suite for long-time energy behaviour"""

    def setUp(self):
        """Set up test fixtures before each test method."""
        self.problem = pendulum(q0=1.0, p0=0.0)

    def test_symplectic_methods_are_bounded(self):
        """Test bounded energy error for Verlet and Gauss-2 over 10^5 steps."""
        for tableau in (RknTableau.stormer_verlet(), family_tableau(4, "gauss:2")):
            with self.subTest(tableau=tableau_label(tableau)):
                report = drift_study(tableau, self.problem, 0.1, 100000, 100)
                self.assertIsInstance(report, DriftReport)
                self.assertEqual(len(report.window_max), 100)
                self.assertAlmostEqual(report.total_time, 10000.0, places=6)
                self.assertTrue(report.is_bounded())

    def test_perturbed_tableau_drifts(self):
        """Test secular energy growth once an entry breaks the pair condition."""
        lobatto = family_tableau(2, "lobatto:2")
        perturbed = lobatto.with_entry(0, 1, lobatto.a_bar[0, 1] + 0.05)
        report = drift_study(perturbed, self.problem, 0.1, 100000, 100)
        self.assertFalse(report.is_bounded())
        self.assertGreaterEqual(report.slope, 10.0 * report.slope_threshold)
        self.assertGreater(report.max_window, 50.0 * report.first_window)

    def test_window_arguments(self):
        """Test a single window and an indivisible step count."""
        verlet = RknTableau.stormer_verlet()
        report = drift_study(verlet, self.problem, 0.1, 50, 1)
        self.assertEqual(report.slope, 0.0)
        self.assertAlmostEqual(report.window_times[0], report.total_time, places=12)
        with self.assertRaises(ValueError):
            drift_study(verlet, self.problem, 0.1, 50, 3)

    def test_requires_hamiltonian(self):
        """Test refusal of problems without a potential."""
        ivp = SecondOrderIVP(lambda t, q: -q, StepState(0.0, [1.0], [0.0]))
        problem = BenchmarkProblem("bare", ivp, 2.0 * math.pi)
        with self.assertRaises(ValueError):
            drift_study(RknTableau.stormer_verlet(), problem, 0.1, 10, 1)


class TestDefectSurvey(unittest.TestCase):
    """Test suite for sampled symplecticity defects"""

    def test_symplectic_tableau_passes(self):
        """Test a Gauss-2 order-4 survey on the pendulum."""
        report = defect_survey(family_tableau(4, "gauss:2"), pendulum())
        self.assertEqual(len(report.rows), 10)
        self.assertTrue(report.passed)
        self.assertEqual(list(report.to_frame().columns), ["state", "h", "defect"])

    def test_every_constructed_tableau_on_every_problem(self):
        """Test defects below 1e-6 for Verlet and each printed family on four problems."""
        tableaux = [RknTableau.stormer_verlet()]
        tableaux += [family_tableau(entry.order, entry.rule) for entry in GOLDEN_TABLEAUX if entry.kind == "family"]
        problems = [harmonic_oscillator(), pendulum(), kepler(0.3), mass_oscillator()]
        for tableau in tableaux:
            for problem in problems:
                with self.subTest(tableau=tableau_label(tableau), problem=problem.key):
                    report = defect_survey(tableau, problem, n_states=5)
                    self.assertEqual(len(report.rows), 10)
                    self.assertTrue(report.passed)
                    self.assertLess(report.max_defect, 1e-6)

    def test_perturbed_tableau_fails(self):
        """Test that a broken tableau shows a visible defect."""
        lobatto = family_tableau(2, "lobatto:2")
        perturbed = lobatto.with_entry(0, 1, lobatto.a_bar[0, 1] + 0.05)
        report = defect_survey(perturbed, pendulum(), h_list=(0.2,), n_states=3)
        self.assertFalse(report.passed)


class TestTableReproduction(unittest.TestCase):
    """Test suite for the golden tableau comparison"""

    def test_suite_passes(self):
        """Test that every golden case and solved member reproduces."""
        report = table_reproduction_suite()
        self.assertTrue(report.passed, msg=report.failures)
        self.assertLess(report.max_deviation, 1e-13)
        cases = {row["case"] for row in report.rows}
        self.assertIn("stormer-verlet", cases)
        for entry in GOLDEN_TABLEAUX + GOLDEN_SOLUTIONS:
            self.assertIn(entry.case, cases)
        expected_rows = sum(len(parameter_samples(e.varied)) for e in GOLDEN_TABLEAUX) + len(GOLDEN_SOLUTIONS) + 1
        self.assertEqual(len(report.rows), expected_rows)

    def test_unsolvable_case_stays_valid_json(self):
        """Test that a case without a unique member reports no deviation and fails."""
        impossible = GoldenSolution("explicit/gauss:2/order-4", 4, "gauss:2", "explicit", {"alpha": 0.0})
        with mock.patch("analysis.experiments.GOLDEN_TABLEAUX", []), \
                mock.patch("analysis.experiments.GOLDEN_SOLUTIONS", [impossible]):
            report = table_reproduction_suite()
        self.assertFalse(report.passed)
        self.assertIsNone(report.max_deviation)
        self.assertEqual(report.rows, [{"case": "explicit/gauss:2/order-4", "sample": "-",
                                        "max_deviation": None, "passed": False}])
        text = json.dumps(report.to_dict(), allow_nan=False)
        self.assertIsNone(json.loads(text)["max_deviation"])
        self.assertIn("n/a", render_reproduction(report.to_dict()))

    def test_lobatto_two_sign(self):
        """Test the (2,2) entry of the Lobatto-2 order-2 tableau at the origin."""
        entry = golden_case("order-2/lobatto:2")
        self.assertAlmostEqual(entry.expected({"alpha": 0.0, "beta": 0.0})[1][1], -0.25, places=15)
        with self.assertRaises(KeyError):
            golden_case("order-9/gauss:1")

    def test_parameter_samples(self):
        """Test the Cartesian product of sample values."""
        samples = parameter_samples(("alpha", "beta"))
        self.assertEqual(len(samples), 9)
        self.assertIn({"alpha": -1.0, "beta": 1.0}, samples)
        self.assertEqual(parameter_samples(()), [{}])


class TestReportOutput(unittest.TestCase):
    """Test suite for JSON and CSV report files"""

    def setUp(self):
        """Set up test fixtures before each test method."""
        self.tmpdir = tempfile.TemporaryDirectory()
        self.report = convergence_study(RknTableau.stormer_verlet(), harmonic_oscillator(),
                                        [0.2, 0.1, 0.05, 0.025], 2.0)

    def tearDown(self):
        self.tmpdir.cleanup()

    def test_to_dict_kinds(self):
        """Test the kind tag of each report."""
        self.assertEqual(self.report.to_dict()["kind"], "convergence")
        drift = drift_study(RknTableau.stormer_verlet(), pendulum(), 0.1, 20, 2)
        self.assertEqual(drift.to_dict()["kind"], "drift")
        self.assertEqual(len(drift.to_dict()["rows"]), 2)

    def test_json_and_csv(self):
        """Test writing both formats."""
        json_path = os.path.join(self.tmpdir.name, "report.json")
        csv_path = os.path.join(self.tmpdir.name, "report.csv")
        write_report_json(self.report, json_path)
        write_report_csv(self.report, csv_path)
        with open(json_path, encoding="utf-8") as handle:
            data = json.load(handle)
        self.assertEqual(len(data["rows"]), 4)
        self.assertEqual(data["rows"][0]["h"], 0.2)
        frame = pd.read_csv(csv_path, float_precision="round_trip")
        self.assertEqual(list(frame.columns), ["h", "error"])
        np.testing.assert_array_equal(frame["error"].to_numpy(), np.asarray(self.report.errors))


if __name__ == '__main__':
    unittest.main()
