import logging
import math
import threading
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np
from scipy.optimize import newton
from scipy.special import ellipk

from methods.cstableau import SymplecticFamilySpec, build_symplectic_family
from methods.quadrature import QuadratureFamily, make_rule
from methods.tableau import RknTableau, discretize
from solvers.integrator import RknIntegrator, SecondOrderIVP, StepState
from utils.errors import CollisionError, OracleFailureError

logger = logging.getLogger(__name__)

COLLISION_RADIUS = 1e-12
ORACLE_TOL = 1e-12
ORACLE_STEPS_PER_UNIT = 16
ORACLE_MAX_DOUBLINGS = 16

ExactSolution = Callable[[float], StepState]


@dataclass(frozen=True, eq=False)
class BenchmarkProblem:
    """
    A named IVP with its reference solution.

    exact is a closed-form solution t -> StepState, or None when reference
    states come from the oracle.
    """
    name: str
    ivp: SecondOrderIVP
    period: float
    exact: Optional[ExactSolution] = None
    description: str = ""
    options: Dict[str, Any] = field(default_factory=dict)

    @property
    def key(self) -> str:
        """Cache key: name plus sorted options."""
        opts = ",".join(f"{k}={self.options[k]!r}" for k in sorted(self.options))
        return f"{self.name}({opts})"

    def hamiltonian(self, state: StepState) -> Optional[float]:
        return self.ivp.hamiltonian(state.p, state.q)


# harmonic oscillator: V = q^2 / 2

def harmonic_oscillator(q0: float = 1.0, p0: float = 0.0) -> BenchmarkProblem:
    initial = StepState(0.0, [q0], [p0])

    def exact(t: float) -> StepState:
        cos_t, sin_t = math.cos(t), math.sin(t)
        return StepState(t, [q0 * cos_t + p0 * sin_t], [-q0 * sin_t + p0 * cos_t])

    ivp = SecondOrderIVP(
        force=lambda t, q: -np.asarray(q, dtype=float),
        initial=initial,
        force_jacobian=lambda t, q: -np.eye(1),
        potential=lambda q: 0.5 * float(np.dot(q, q)),
        gradient=lambda q: np.asarray(q, dtype=float),
        name="oscillator",
    )
    return BenchmarkProblem("oscillator", ivp, 2.0 * math.pi, exact,
                            "q'' = -q, exact rotation in the (q, p) plane", {"q0": q0, "p0": p0})


# mathematical pendulum: V = -cos q

def pendulum(q0: float = 1.0, p0: float = 0.0) -> BenchmarkProblem:
    """
    Pendulum q'' = -sin q.

    The period is the libration period 4 K(m), m = (1 + H) / 2, when H < 1,
    and 2 pi for rotating motion.
    """
    initial = StepState(0.0, [q0], [p0])
    energy = 0.5 * p0 * p0 - math.cos(q0)
    m = (1.0 + energy) / 2.0
    period = 4.0 * float(ellipk(m)) if 0.0 <= m < 1.0 else 2.0 * math.pi

    ivp = SecondOrderIVP(
        force=lambda t, q: -np.sin(q),
        initial=initial,
        force_jacobian=lambda t, q: np.array([[-math.cos(q[0])]]),
        potential=lambda q: -math.cos(q[0]),
        gradient=lambda q: np.sin(q),
        name="pendulum",
    )
    return BenchmarkProblem("pendulum", ivp, period, None,
                            "q'' = -sin q, reference by oracle", {"q0": q0, "p0": p0})


# Kepler two-body problem: V = -1/|q|

def _check_collision(q: np.ndarray) -> float:
    radius = float(np.linalg.norm(q))
    if radius < COLLISION_RADIUS:
        logger.error(f"Kepler force evaluated at |q| = {radius:.3e}")
        raise CollisionError(f"Kepler force evaluated at the singularity (|q| = {radius:.3e})")
    return radius


def _kepler_force(t: float, q: np.ndarray) -> np.ndarray:
    radius = _check_collision(q)
    return -np.asarray(q, dtype=float) / radius ** 3


def _kepler_jacobian(t: float, q: np.ndarray) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    radius = _check_collision(q)
    return -np.eye(2) / radius ** 3 + 3.0 * np.outer(q, q) / radius ** 5


def _kepler_potential(q: np.ndarray) -> float:
    return -1.0 / _check_collision(q)


def _kepler_gradient(q: np.ndarray) -> np.ndarray:
    return -_kepler_force(0.0, q)


def solve_kepler_equation(mean_anomaly: float, ecc: float) -> float:
    """Eccentric anomaly E with E - e sin E = M."""
    guess = mean_anomaly if ecc < 0.8 else math.pi
    return float(newton(
        lambda E: E - ecc * math.sin(E) - mean_anomaly,
        guess,
        fprime=lambda E: 1.0 - ecc * math.cos(E),
        tol=1e-15,
        maxiter=50,
    ))


def kepler(ecc: float = 0.6) -> BenchmarkProblem:
    """
    Unit-mass Kepler problem started at pericenter.

    q0 = (1 - e, 0), p0 = (0, sqrt((1 + e) / (1 - e))) gives semi-major axis 1,
    H = -1/2 and period 2 pi.

    Raises:
        ValueError: e outside [0, 1)
    """
    if not 0.0 <= ecc < 1.0:
        raise ValueError(f"eccentricity must lie in [0, 1), got {ecc}")
    initial = StepState(0.0, [1.0 - ecc, 0.0], [0.0, math.sqrt((1.0 + ecc) / (1.0 - ecc))])
    root = math.sqrt(1.0 - ecc * ecc)

    def exact(t: float) -> StepState:
        E = solve_kepler_equation(t, ecc)
        cos_e, sin_e = math.cos(E), math.sin(E)
        denom = 1.0 - ecc * cos_e
        return StepState(t, [cos_e - ecc, root * sin_e], [-sin_e / denom, root * cos_e / denom])

    ivp = SecondOrderIVP(
        force=_kepler_force,
        initial=initial,
        force_jacobian=_kepler_jacobian,
        potential=_kepler_potential,
        gradient=_kepler_gradient,
        name="kepler",
    )
    return BenchmarkProblem("kepler", ivp, 2.0 * math.pi, exact,
                            "two-body problem, exact solution from Kepler's equation", {"ecc": ecc})


# Henon-Heiles: V = (x^2 + y^2)/2 + x^2 y - y^3/3

def _henon_heiles_gradient(q: np.ndarray) -> np.ndarray:
    x, y = q
    return np.array([x + 2.0 * x * y, y + x * x - y * y])


def henon_heiles(q0: Tuple[float, float] = (0.0, 0.1), p0: Tuple[float, float] = (0.35, 0.0)) -> BenchmarkProblem:
    initial = StepState(0.0, q0, p0)
    ivp = SecondOrderIVP(
        force=lambda t, q: -_henon_heiles_gradient(q),
        initial=initial,
        force_jacobian=lambda t, q: -np.array([[1.0 + 2.0 * q[1], 2.0 * q[0]],
                                               [2.0 * q[0], 1.0 - 2.0 * q[1]]]),
        potential=lambda q: 0.5 * (q[0] ** 2 + q[1] ** 2) + q[0] ** 2 * q[1] - q[1] ** 3 / 3.0,
        gradient=_henon_heiles_gradient,
        name="henon-heiles",
    )
    return BenchmarkProblem("henon-heiles", ivp, 2.0 * math.pi, None,
                            "Henon-Heiles below the escape energy 1/6, reference by oracle",
                            {"q0": tuple(q0), "p0": tuple(p0)})


# oscillator with mass matrix M = diag(2, 1/2): q'' = -M^{-1} q

MASS_DIAGONAL = (2.0, 0.5)


def mass_oscillator(q0: Tuple[float, float] = (1.0, 0.5), p0: Tuple[float, float] = (0.2, 0.3)) -> BenchmarkProblem:
    """
    Two uncoupled oscillators with masses 2 and 1/2 and p = M q'.

    Component k moves with frequency 1/sqrt(m_k); the common period is 2 pi sqrt(2).
    """
    masses = np.array(MASS_DIAGONAL)
    omega = 1.0 / np.sqrt(masses)
    q_start = np.array(q0, dtype=float)
    v_start = np.array(p0, dtype=float) / masses
    initial = StepState(0.0, q0, p0)

    def exact(t: float) -> StepState:
        cos_t, sin_t = np.cos(omega * t), np.sin(omega * t)
        q = q_start * cos_t + v_start / omega * sin_t
        v = -q_start * omega * sin_t + v_start * cos_t
        return StepState(t, q, masses * v)

    ivp = SecondOrderIVP(
        force=lambda t, q: -np.asarray(q, dtype=float) / masses,
        initial=initial,
        force_jacobian=lambda t, q: -np.diag(1.0 / masses),
        potential=lambda q: 0.5 * float(np.dot(q, q)),
        gradient=lambda q: np.asarray(q, dtype=float),
        mass_matrix=np.diag(masses),
        name="mass-oscillator",
    )
    return BenchmarkProblem("mass-oscillator", ivp, 2.0 * math.pi * math.sqrt(2.0), exact,
                            "harmonic oscillator with mass matrix diag(2, 1/2)",
                            {"q0": tuple(q0), "p0": tuple(p0)})


PROBLEM_FACTORIES: Dict[str, Callable[..., BenchmarkProblem]] = {
    "oscillator": harmonic_oscillator,
    "pendulum": pendulum,
    "kepler": kepler,
    "henon-heiles": henon_heiles,
    "mass-oscillator": mass_oscillator,
}


def catalog() -> List[BenchmarkProblem]:
    """Every benchmark problem with its default initial data."""
    return [factory() for factory in PROBLEM_FACTORIES.values()]


def get_problem(name: str, **options) -> BenchmarkProblem:
    """
    Build a problem by name.

    Args:
        name: one of PROBLEM_FACTORIES
        options: factory keywords (ecc for kepler, q0/p0 elsewhere); None values are ignored

    Raises:
        KeyError: unknown problem name
        ValueError: options the problem does not accept
    """
    if name not in PROBLEM_FACTORIES:
        raise KeyError(f"unknown problem {name!r}; choose from {sorted(PROBLEM_FACTORIES)}")
    options = {k: v for k, v in options.items() if v is not None}
    try:
        return PROBLEM_FACTORIES[name](**options)
    except TypeError as e:
        raise ValueError(f"problem {name!r} does not accept options {sorted(options)}: {e}")


def oracle_tableau() -> RknTableau:
    """Order-5 family at alpha = beta = 0 discretized with 3-point Gauss."""
    cs = build_symplectic_family(SymplecticFamilySpec(5))
    return discretize(cs, make_rule(QuadratureFamily.GAUSS, 3))


class ReferenceOracle:
    """
    High-accuracy reference states for problems without a closed form.

    Integrates with the Gauss-3 order-5 tableau, doubling the step count until
    two successive results agree within 1e-12 * max(1, |state|). Results are
    cached by problem key and time.
    """

    def __init__(self, tol: float = ORACLE_TOL, max_doublings: int = ORACLE_MAX_DOUBLINGS):
        self.logger = logger
        self.tol = tol
        self.max_doublings = max_doublings
        self.tableau = oracle_tableau()
        self._cache: Dict[Tuple[str, float], StepState] = {}
        self._lock = threading.Lock()

    def _run(self, problem: BenchmarkProblem, t: float, n_steps: int) -> StepState:
        start = problem.ivp.initial
        integrator = RknIntegrator(self.tableau, problem.ivp, stage_solver="newton", progress=False)
        return integrator.integrate((t - start.t) / n_steps, n_steps).final

    def reference(self, problem: BenchmarkProblem, t: float) -> StepState:
        """
        Reference state of problem at time t.

        Raises:
            OracleFailureError: no agreement after max_doublings refinements
        """
        cache_key = (problem.key, float(t))
        with self._lock:
            if cache_key in self._cache:
                return self._cache[cache_key]

        start = problem.ivp.initial
        span = t - start.t
        if span < 0:
            raise ValueError(f"reference time {t} precedes the initial time {start.t}")
        if span == 0:
            return start

        n_steps = max(ORACLE_STEPS_PER_UNIT, math.ceil(ORACLE_STEPS_PER_UNIT * span))
        previous = self._run(problem, t, n_steps)
        gap = float("inf")
        for _ in range(self.max_doublings):
            n_steps *= 2
            current = self._run(problem, t, n_steps)
            gap = float(np.max(np.abs(current.as_vector() - previous.as_vector())))
            scale = max(1.0, float(np.max(np.abs(current.as_vector()))))
            self.logger.debug(f"oracle {problem.key} t={t}: {n_steps} steps, gap {gap:.3e}")
            if gap <= self.tol * scale:
                state = StepState(t, current.q, current.p)
                with self._lock:
                    self._cache[cache_key] = state
                return state
            previous = current

        self.logger.error(f"oracle for {problem.key} at t={t} did not settle (gap {gap:.3e})")
        raise OracleFailureError(f"reference for {problem.key} at t={t} did not settle after "
                                 f"{self.max_doublings} doublings (last gap {gap:.3e})")


_default_oracle: Optional[ReferenceOracle] = None
_oracle_lock = threading.Lock()


def default_oracle() -> ReferenceOracle:
    global _default_oracle
    with _oracle_lock:
        if _default_oracle is None:
            _default_oracle = ReferenceOracle()
        return _default_oracle


def reference_state(problem: BenchmarkProblem, t: float, oracle: Optional[ReferenceOracle] = None) -> StepState:
    """Exact state at t when a closed form exists, otherwise the oracle's."""
    if problem.exact is not None:
        return problem.exact(t)
    return (oracle or default_oracle()).reference(problem, t)
