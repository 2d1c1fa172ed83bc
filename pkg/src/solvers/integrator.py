"""
RKN time stepping for second-order problems q'' = f(t, q).

One step of an r-stage tableau solves

    Q_i     = q_n + h c_i v_n + h^2 sum_j a_bar[i, j] f(t_n + c_j h, Q_j)
    q_{n+1} = q_n + h v_n + h^2 sum_i b_bar[i] f_i
    p_{n+1} = p_n + h W sum_i b[i] f_i

with v_n = M^{-1} p_n and W = M when a mass matrix is present (v_n = p_n and
W = I otherwise). The stage solve follows the tableau's structure: forward
substitution, one d-dimensional solve per stage, or one coupled rd-dimensional
solve.
"""

import logging
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional

import numpy as np
import pandas as pd
from scipy.linalg import LinAlgWarning, lu_factor, lu_solve
from tqdm import tqdm

from methods.tableau import RknTableau, StructureClass, classify_structure
from utils.config import STAGE_SOLVERS, get_settings
from utils.errors import ConvergenceError, LinearSolveError, NumericalFailureError

logger = logging.getLogger(__name__)

ForceFn = Callable[[float, np.ndarray], np.ndarray]

MASS_SYMMETRY_TOL = 1e-12
GRADIENT_CHECK_TOL = 1e-6
JACOBIAN_PROBE = 1e-7
FLOW_PROBE = 1e-6


@dataclass(frozen=True, eq=False)
class StepState:
    """Time, position and momentum at one grid point."""
    t: float
    q: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        q = np.array(self.q, dtype=float).reshape(-1)
        p = np.array(self.p, dtype=float).reshape(-1)
        if q.shape != p.shape:
            raise ValueError(f"q and p must have the same length, got {q.size} and {p.size}")
        if not (np.isfinite(self.t) and np.all(np.isfinite(q)) and np.all(np.isfinite(p))):
            raise ValueError("state entries must be finite")
        q.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "t", float(self.t))
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "p", p)

    @property
    def dim(self) -> int:
        return int(self.q.size)

    def as_vector(self) -> np.ndarray:
        """Concatenated (p, q), the ordering used by flow_jacobian."""
        return np.concatenate([self.p, self.q])


def _central_gradient(fn: Callable[[np.ndarray], float], x: np.ndarray, probe: float) -> np.ndarray:
    grad = np.zeros_like(x)
    for k in range(x.size):
        delta = probe * max(1.0, abs(x[k]))
        e = np.zeros_like(x)
        e[k] = delta
        grad[k] = (fn(x + e) - fn(x - e)) / (2.0 * delta)
    return grad


class SecondOrderIVP:
    """
    Initial value problem q'' = f(t, q) with optional Hamiltonian data.

    f returns the acceleration. With a mass matrix M the momentum is p = M q',
    so for a potential V the acceleration is -M^{-1} grad V.
    """

    def __init__(self, force: ForceFn, initial: StepState,
                 force_jacobian: Optional[Callable[[float, np.ndarray], np.ndarray]] = None,
                 potential: Optional[Callable[[np.ndarray], float]] = None,
                 gradient: Optional[Callable[[np.ndarray], np.ndarray]] = None,
                 mass_matrix: Optional[np.ndarray] = None,
                 autonomous: bool = True,
                 name: str = "ivp",
                 validate: bool = True):
        """
        Args:
            force: f(t, q) -> acceleration, same length as q
            initial: state at t0
            force_jacobian: optional df/dq(t, q), d x d
            potential: optional V(q) for the Hamiltonian
            gradient: optional grad V(q); finite differences of V otherwise
            mass_matrix: optional symmetric invertible d x d matrix
            autonomous: False if f depends on t
            name: label used in logs and reports
            validate: run the mass-matrix and gradient consistency checks

        Raises:
            ValueError: inconsistent dimensions, bad mass matrix, or f != -M^{-1} grad V at q0
        """
        self.logger = logger
        self.force = force
        self.initial = initial
        self.force_jacobian = force_jacobian
        self.potential = potential
        self.gradient = gradient
        self.autonomous = autonomous
        self.name = name

        self.mass_matrix = None
        self._mass_lu = None
        if mass_matrix is not None:
            M = np.array(mass_matrix, dtype=float)
            if M.shape != (self.dim, self.dim):
                raise ValueError(f"mass matrix must be {self.dim}x{self.dim}, got shape {M.shape}")
            M.setflags(write=False)
            self.mass_matrix = M

        if validate:
            self.validate()
        if self.mass_matrix is not None:
            # M is constant; factor once
            self._mass_lu = lu_factor(self.mass_matrix)

    @property
    def dim(self) -> int:
        return self.initial.dim

    @property
    def has_hamiltonian(self) -> bool:
        return self.potential is not None

    def validate(self) -> None:
        """Check the mass matrix and the force/potential consistency at q0."""
        if self.mass_matrix is not None:
            M = self.mass_matrix
            asymmetry = float(np.max(np.abs(M - M.T)))
            if asymmetry > MASS_SYMMETRY_TOL:
                raise ValueError(f"mass matrix is not symmetric (max |M - M^T| = {asymmetry:.3e})")
            cond = np.linalg.cond(M)
            if not np.isfinite(cond) or cond > 1.0 / np.finfo(float).eps:
                raise ValueError(f"mass matrix is singular or ill-conditioned (condition number {cond:.3e})")

        if self.potential is None and self.gradient is None:
            return
        q0 = self.initial.q
        grad = self.grad_potential(q0)
        expected = -self.apply_inverse_mass(grad)
        actual = np.asarray(self.force(self.initial.t, q0), dtype=float)
        gap = float(np.max(np.abs(expected - actual)))
        scale = max(1.0, float(np.max(np.abs(actual))))
        if gap > GRADIENT_CHECK_TOL * scale:
            self.logger.error(f"{self.name}: force disagrees with -grad V at q0 by {gap:.3e}")
            raise ValueError(f"force is inconsistent with the potential at q0 (gap {gap:.3e})")

    def grad_potential(self, q: np.ndarray) -> np.ndarray:
        if self.gradient is not None:
            return np.asarray(self.gradient(q), dtype=float)
        if self.potential is None:
            raise ValueError(f"{self.name} has no potential")
        return _central_gradient(self.potential, np.asarray(q, dtype=float), FLOW_PROBE)

    def apply_inverse_mass(self, v: np.ndarray) -> np.ndarray:
        """M^{-1} v, or v itself without a mass matrix."""
        if self.mass_matrix is None:
            return np.asarray(v, dtype=float)
        if self._mass_lu is None:
            return np.linalg.solve(self.mass_matrix, v)
        return lu_solve(self._mass_lu, v)

    def apply_mass(self, v: np.ndarray) -> np.ndarray:
        if self.mass_matrix is None:
            return np.asarray(v, dtype=float)
        return self.mass_matrix @ v

    def hamiltonian(self, p: np.ndarray, q: np.ndarray) -> Optional[float]:
        """H = p^T M^{-1} p / 2 + V(q); None without a potential."""
        if self.potential is None:
            return None
        p = np.asarray(p, dtype=float)
        return 0.5 * float(p @ self.apply_inverse_mass(p)) + float(self.potential(np.asarray(q, dtype=float)))

    def __repr__(self) -> str:
        return f"SecondOrderIVP(name={self.name!r}, dim={self.dim}, mass_matrix={self.mass_matrix is not None})"


@dataclass(eq=False)
class Trajectory:
    """States on a uniform grid plus per-step diagnostics."""
    h: float
    states: List[StepState]
    energy: Optional[np.ndarray] = None
    newton_iterations: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.states])

    @property
    def q(self) -> np.ndarray:
        return np.array([s.q for s in self.states])

    @property
    def p(self) -> np.ndarray:
        return np.array([s.p for s in self.states])

    @property
    def final(self) -> StepState:
        return self.states[-1]

    def __len__(self) -> int:
        return len(self.states)

    def energy_error(self) -> Optional[np.ndarray]:
        """|H(t) - H(0)| / max(1, |H(0)|) per grid point."""
        if self.energy is None:
            return None
        h0 = self.energy[0]
        return np.abs(self.energy - h0) / max(1.0, abs(h0))

    def to_frame(self) -> pd.DataFrame:
        d = self.states[0].dim
        data = {"t": self.times}
        q = self.q
        p = self.p
        for k in range(d):
            data[f"q{k + 1}"] = q[:, k]
        for k in range(d):
            data[f"p{k + 1}"] = p[:, k]
        if self.energy is not None:
            data["H"] = self.energy
        return pd.DataFrame(data)

    def to_csv(self, path: str) -> None:
        self.to_frame().to_csv(path, index=False, float_format="%.17g")
        logger.info(f"Wrote trajectory with {len(self.states)} rows to {path}")


class RknIntegrator:
    """
    Stepper binding one tableau to one IVP.

    The structure class and mass-matrix factorization are fixed at
    construction; step and integrate are otherwise pure.
    """

    def __init__(self, tableau: RknTableau, ivp: SecondOrderIVP,
                 stage_solver: Optional[str] = None,
                 newton_tol: Optional[float] = None,
                 newton_max_iter: Optional[int] = None,
                 progress: Optional[bool] = None):
        settings = get_settings()
        self.logger = logger
        self.tableau = tableau
        self.ivp = ivp
        self.stage_solver = (stage_solver or settings.stage_solver).lower()
        if self.stage_solver not in STAGE_SOLVERS:
            raise ValueError(f"stage solver must be one of {STAGE_SOLVERS}, got {self.stage_solver!r}")
        self.newton_tol = settings.newton_tol if newton_tol is None else float(newton_tol)
        self.newton_max_iter = settings.newton_max_iter if newton_max_iter is None else int(newton_max_iter)
        self.progress = settings.progress if progress is None else bool(progress)
        self.structure = classify_structure(tableau)
        self.last_iterations = 0
        self._warned_fd = False

        if tableau.r == 0:
            raise ValueError("tableau has no stages")
        self.logger.debug(f"Integrator for {ivp.name}: r={tableau.r}, {self.structure.value}, "
                          f"solver={self.stage_solver}")

    # force evaluation

    def _force(self, t: float, q: np.ndarray) -> np.ndarray:
        value = np.asarray(self.ivp.force(t, q), dtype=float).reshape(-1)
        if value.shape != q.shape:
            raise ValueError(f"force returned length {value.size}, expected {q.size}")
        if not np.all(np.isfinite(value)):
            raise NumericalFailureError(f"force is not finite at t={t!r}")
        return value

    def _jacobian(self, t: float, q: np.ndarray) -> np.ndarray:
        d = q.size
        if self.ivp.force_jacobian is not None:
            return np.asarray(self.ivp.force_jacobian(t, q), dtype=float).reshape(d, d)
        if not self._warned_fd:
            self.logger.warning(f"{self.ivp.name}: no force Jacobian, using central differences")
            self._warned_fd = True
        jac = np.zeros((d, d))
        for k in range(d):
            delta = JACOBIAN_PROBE * max(1.0, abs(q[k]))
            e = np.zeros(d)
            e[k] = delta
            jac[:, k] = (self._force(t, q + e) - self._force(t, q - e)) / (2.0 * delta)
        return jac

    @staticmethod
    def _lu(matrix: np.ndarray):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", LinAlgWarning)
            lu, piv = lu_factor(matrix)
        if not np.all(np.isfinite(lu)) or np.any(np.diag(lu) == 0.0):
            raise LinearSolveError(f"singular Newton matrix of size {matrix.shape[0]}")
        return lu, piv

    # stage solvers

    def _explicit_stages(self, t: float, h: float, base: np.ndarray):
        a = self.tableau.a_bar
        c = self.tableau.c
        r = self.tableau.r
        Q = np.array(base)
        F = np.zeros_like(Q)
        for i in range(r):
            Q[i] = base[i] + h * h * (a[i, :i] @ F[:i])
            F[i] = self._force(t + c[i] * h, Q[i])
        return Q, F, 0

    def _dirk_stages(self, t: float, h: float, base: np.ndarray, tol: float):
        a = self.tableau.a_bar
        c = self.tableau.c
        r = self.tableau.r
        d = base.shape[1]
        Q = np.array(base)
        F = np.zeros_like(Q)
        total = 0
        for i in range(r):
            rhs = base[i] + h * h * (a[i, :i] @ F[:i])
            ti = t + c[i] * h
            qi = np.array(rhs)
            for k in range(self.newton_max_iter + 1):
                fi = self._force(ti, qi)
                residual = qi - rhs - h * h * a[i, i] * fi
                norm = float(np.max(np.abs(residual)))
                self.logger.debug(f"stage {i} iteration {k}: residual {norm:.3e}")
                if norm <= tol:
                    break
                if k == self.newton_max_iter:
                    self.logger.error(f"stage {i} did not converge after {k} iterations (residual {norm:.3e})")
                    raise ConvergenceError(f"stage {i} Newton iteration did not converge", norm, k)
                if self.stage_solver == "newton":
                    lu = self._lu(np.eye(d) - h * h * a[i, i] * self._jacobian(ti, qi))
                    qi = qi - lu_solve(lu, residual)
                else:
                    qi = rhs + h * h * a[i, i] * fi
            total += k
            Q[i] = qi
            F[i] = fi
        return Q, F, total

    def _coupled_stages(self, t: float, h: float, base: np.ndarray, tol: float):
        a = self.tableau.a_bar
        c = self.tableau.c
        r, d = base.shape
        times = t + c * h
        Q = np.array(base)
        for k in range(self.newton_max_iter + 1):
            F = np.array([self._force(times[j], Q[j]) for j in range(r)])
            residual = Q - base - h * h * (a @ F)
            norm = float(np.max(np.abs(residual)))
            self.logger.debug(f"coupled iteration {k}: residual {norm:.3e}")
            if norm <= tol:
                return Q, F, k
            if k == self.newton_max_iter:
                break
            if self.stage_solver == "newton":
                jacs = np.array([self._jacobian(times[j], Q[j]) for j in range(r)])
                blocks = a[:, :, None, None] * jacs[None, :, :, :]
                matrix = np.eye(r * d) - h * h * blocks.transpose(0, 2, 1, 3).reshape(r * d, r * d)
                Q = Q - lu_solve(self._lu(matrix), residual.reshape(-1)).reshape(r, d)
            else:
                Q = base + h * h * (a @ F)
        self.logger.error(f"coupled stage solve did not converge after {k} iterations (residual {norm:.3e})")
        raise ConvergenceError("stage Newton iteration did not converge", norm, k)

    # public API

    def step(self, h: float, s: StepState) -> StepState:
        """
        Advance one step of size h from s.

        Raises:
            ConvergenceError: implicit stages not solved within the iteration cap
            LinearSolveError: singular Newton matrix
        """
        if not np.isfinite(h) or h < 0:
            raise ValueError(f"step size must be a finite non-negative number, got {h!r}")
        tab = self.tableau
        q = s.q
        v = self.ivp.apply_inverse_mass(s.p)
        base = q[None, :] + h * tab.c[:, None] * v[None, :]
        tol = self.newton_tol * max(1.0, float(np.max(np.abs(q))))

        if self.structure is StructureClass.EXPLICIT:
            Q, F, iterations = self._explicit_stages(s.t, h, base)
        elif self.structure is StructureClass.DIAGONALLY_IMPLICIT:
            Q, F, iterations = self._dirk_stages(s.t, h, base, tol)
        else:
            Q, F, iterations = self._coupled_stages(s.t, h, base, tol)

        if iterations > self.newton_max_iter // 2:
            self.logger.warning(f"slow stage convergence: {iterations} iterations at t={s.t:.6g}")
        self.last_iterations = iterations

        q_next = q + h * v + h * h * (tab.b_bar @ F)
        p_next = s.p + h * self.ivp.apply_mass(tab.b @ F)
        if not (np.all(np.isfinite(q_next)) and np.all(np.isfinite(p_next))):
            raise NumericalFailureError(f"step from t={s.t!r} produced non-finite values")
        return StepState(s.t + h, q_next, p_next)

    def integrate(self, h: float, n_steps: int, initial: Optional[StepState] = None) -> Trajectory:
        """
        Take n_steps steps of size h.

        Args:
            h: step size (> 0)
            n_steps: number of steps (>= 1)
            initial: start state; the IVP's initial state by default

        Returns:
            Trajectory including the start state; grid times are t0 + k h

        Raises:
            NumericalFailureError: any step failure, message prefixed with "step N:"
        """
        if not h > 0:
            raise ValueError(f"step size must be positive, got {h!r}")
        if n_steps < 1:
            raise ValueError(f"n_steps must be at least 1, got {n_steps}")
        state = initial if initial is not None else self.ivp.initial
        t0 = state.t
        states = [state]
        iterations = np.zeros(n_steps, dtype=int)

        for k in tqdm(range(n_steps), desc=f"{self.ivp.name} h={h:g}", disable=not self.progress):
            try:
                state = self.step(h, state)
            except ConvergenceError as e:
                raise e.at_step(k) from e
            except NumericalFailureError as e:
                raise type(e)(f"step {k}: {e}") from e
            state = replace(state, t=t0 + (k + 1) * h)
            states.append(state)
            iterations[k] = self.last_iterations

        energy = None
        if self.ivp.has_hamiltonian:
            energy = np.array([self.ivp.hamiltonian(s.p, s.q) for s in states])
        self.logger.info(f"Integrated {self.ivp.name}: {n_steps} steps of h={h:g}, "
                         f"max stage iterations {int(iterations.max())}")
        return Trajectory(h=h, states=states, energy=energy, newton_iterations=iterations)

    def flow_jacobian(self, h: float, s: StepState) -> np.ndarray:
        """
        Central-difference Jacobian of (p_n, q_n) -> (p_{n+1}, q_{n+1}).

        Coordinate k is probed with delta_k = 1e-6 * max(1, |x_k|).
        """
        x = s.as_vector()
        d = s.dim
        jac = np.zeros((2 * d, 2 * d))
        for k in range(2 * d):
            delta = FLOW_PROBE * max(1.0, abs(x[k]))
            outputs = []
            for sign in (1.0, -1.0):
                probe = np.array(x)
                probe[k] += sign * delta
                out = self.step(h, StepState(s.t, probe[d:], probe[:d]))
                outputs.append(out.as_vector())
            jac[:, k] = (outputs[0] - outputs[1]) / (2.0 * delta)
        return jac

    def symplecticity_defect(self, h: float, s: StepState) -> float:
        """Max-norm of J'^T J J' - J for the canonical structure matrix J."""
        if not self.ivp.autonomous:
            raise ValueError("symplecticity diagnostics need an autonomous problem")
        jac = self.flow_jacobian(h, s)
        structure = canonical_structure_matrix(s.dim)
        return float(np.max(np.abs(jac.T @ structure @ jac - structure)))


def canonical_structure_matrix(d: int) -> np.ndarray:
    """J = [[0, I], [-I, 0]] for the (p, q) ordering."""
    eye = np.eye(d)
    zero = np.zeros((d, d))
    return np.block([[zero, eye], [-eye, zero]])


def step(tableau: RknTableau, ivp: SecondOrderIVP, h: float, s: StepState, **options) -> StepState:
    return RknIntegrator(tableau, ivp, **options).step(h, s)


def integrate(tableau: RknTableau, ivp: SecondOrderIVP, h: float, n_steps: int, **options) -> Trajectory:
    return RknIntegrator(tableau, ivp, **options).integrate(h, n_steps)


def flow_jacobian(tableau: RknTableau, ivp: SecondOrderIVP, h: float, s: StepState, **options) -> np.ndarray:
    return RknIntegrator(tableau, ivp, **options).flow_jacobian(h, s)


def symplecticity_defect(tableau: RknTableau, ivp: SecondOrderIVP, h: float, s: StepState, **options) -> float:
    return RknIntegrator(tableau, ivp, **options).symplecticity_defect(h, s)
