"""
Direct Euler-Lagrange dynamics.
Accelerations qdd = W^-1 (dL/dq - d2L/dt dqd - qd^B d2L/dq^B dqd) and an independent
fixed-step RK4 integrator on (t, q, qd) used as the reference for cross-validation.
"""

import math
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np
import sympy as sp

from ..geometry.legendre import hessian
from ..models.config import EngineConfig
from ..models.coordinates import TIME, position, velocity
from ..models.system import InitialCondition, SystemSpec
from ..utils.errors import IntegrationError, RegularityRequiredError
from ..utils.logging import get_logger
from ..utils.symbolic import ZeroTestConfig, diff, is_zero, simplify

logger = get_logger(__name__)


@dataclass(frozen=True)
class EulerLagrangeSystem:
    """
    The Euler-Lagrange equations W qdd = F in normal form.

    Attributes:
        hessian: W, the velocity Hessian of L
        forces: F_A = dL/dq^A - d2L/dt dqd^A - qd^B d2L/dq^B dqd^A
        accelerations: Symbolic W^-1 F
        determinant: det W
    """
    spec: SystemSpec
    hessian: sp.ImmutableMatrix
    forces: Tuple[sp.Expr, ...]
    accelerations: Tuple[sp.Expr, ...]
    determinant: sp.Expr


def forces(spec: SystemSpec) -> Tuple[sp.Expr, ...]:
    n = spec.n
    L = spec.lagrangian
    out = []
    for a in range(1, n + 1):
        momentum = diff(L, velocity(a), n)
        f = diff(L, position(a), n) - diff(momentum, TIME, n)
        f -= sum((velocity(b).symbol * diff(momentum, position(b), n) for b in range(1, n + 1)), sp.S.Zero)
        out.append(simplify(f))
    return tuple(out)


def _tidy(e: sp.Expr) -> sp.Expr:
    try:
        return simplify(sp.cancel(e))
    except sp.PolynomialError:
        return simplify(e)


def euler_lagrange_system(spec: SystemSpec, config: Optional[EngineConfig] = None) -> EulerLagrangeSystem:
    """
    Solve the Euler-Lagrange equations for the accelerations.

    The Hessian is inverted by adjugate over determinant up to
    config.symbolic_inverse_max_n and by symbolic LU beyond.

    Raises:
        RegularityRequiredError: The Hessian determinant vanishes identically
    """
    config = config or EngineConfig()
    w = hessian(spec)
    f = forces(spec)
    det = simplify(w.det(method='berkowitz'))
    zero_config = ZeroTestConfig(trials=config.zero_trials, seed=config.seed, tolerance=config.zero_tolerance,
                                 radius=config.sample_radius, max_resample=config.max_resample)
    if is_zero(det, config=zero_config):
        raise RegularityRequiredError("Euler-Lagrange equations are not in normal form for a singular Lagrangian")
    rhs = sp.Matrix(f)
    if spec.n <= config.symbolic_inverse_max_n:
        solved = (sp.Matrix(w).adjugate() * rhs) / det
    else:
        solved = sp.Matrix(w).LUsolve(rhs)
    return EulerLagrangeSystem(
        spec=spec,
        hessian=w,
        forces=f,
        accelerations=tuple(_tidy(e) for e in solved),
        determinant=det,
    )


def euler_lagrange_field(spec: SystemSpec, config: Optional[EngineConfig] = None) -> Tuple[sp.Expr, ...]:
    """Accelerations qdd^A as expressions on J1pi."""
    return euler_lagrange_system(spec, config).accelerations


@dataclass
class ReferenceSolution:
    """
    Output of the reference integrator.

    Attributes:
        times: Sample times, shape (N+1,)
        q: Positions, shape (N+1, n)
        qd: Velocities, shape (N+1, n)
    """
    times: np.ndarray
    q: np.ndarray
    qd: np.ndarray

    def as_jet_rows(self) -> np.ndarray:
        """Rows (t, q, qd) in jet chart order."""
        return np.column_stack([self.times, self.q, self.qd])


def uniform_grid(h: float, horizon: float) -> Tuple[int, float]:
    """Step count ceil(T/h) and the uniform step that lands on T."""
    if h <= 0 or horizon <= 0:
        raise ValueError("step and horizon must be positive")
    steps = max(1, math.ceil(horizon / h - 1e-9))
    return steps, horizon / steps


class ReferenceIntegrator:
    """
    Fixed-step RK4 on y = (q, qd) with qdd from the Euler-Lagrange equations.

    For n above the symbolic inversion limit the linear system W qdd = F
    is solved numerically at every stage.
    """

    def __init__(self, spec: SystemSpec, params: Optional[Dict[str, float]] = None,
                 config: Optional[EngineConfig] = None):
        self.spec = spec
        self.config = config or EngineConfig()
        self.params = spec.param_values(params)
        n = spec.n
        symbols = spec.jet_chart.symbols + list(self.params)
        self._param_args = list(self.params.values())
        if n <= self.config.symbolic_inverse_max_n:
            system = euler_lagrange_system(spec, self.config)
            self._accel = sp.lambdify(symbols, list(system.accelerations), modules='numpy')
            self._numeric = False
        else:
            self._w = sp.lambdify(symbols, hessian(spec), modules='numpy')
            self._f = sp.lambdify(symbols, list(forces(spec)), modules='numpy')
            self._numeric = True

    def accelerations(self, t: float, q: np.ndarray, qd: np.ndarray) -> np.ndarray:
        args = [t, *q, *qd, *self._param_args]
        if self._numeric:
            w = np.asarray(self._w(*args), dtype=float)
            f = np.asarray(self._f(*args), dtype=float)
            return np.linalg.solve(w, f)
        return np.asarray(self._accel(*args), dtype=float).reshape(-1)

    def _rhs(self, t: float, y: np.ndarray) -> np.ndarray:
        n = self.spec.n
        q, qd = y[:n], y[n:]
        return np.concatenate([qd, self.accelerations(t, q, qd)])

    def run(self, ic: InitialCondition, h: float, horizon: float) -> ReferenceSolution:
        """
        Integrate from an initial condition over [t0, t0 + horizon].

        Raises:
            IntegrationError: Non-finite state or a singular Hessian at a stage
        """
        steps, dt = uniform_grid(h, horizon)
        n = self.spec.n
        y = np.array(list(ic.q) + list(ic.qd), dtype=float)
        times = ic.t + dt * np.arange(steps + 1)
        states = np.empty((steps + 1, 2 * n))
        states[0] = y
        for k in range(steps):
            t = times[k]
            try:
                k1 = self._rhs(t, y) * dt
                k2 = self._rhs(t + 0.5 * dt, y + 0.5 * k1) * dt
                k3 = self._rhs(t + 0.5 * dt, y + 0.5 * k2) * dt
                k4 = self._rhs(t + dt, y + k3) * dt
            except (np.linalg.LinAlgError, ZeroDivisionError, FloatingPointError) as e:
                raise IntegrationError(f"reference Euler-Lagrange evaluation failed: {e}", k, float(t))
            y = y + (k1 + 2 * k2 + 2 * k3 + k4) / 6
            if not np.all(np.isfinite(y)):
                raise IntegrationError("reference Euler-Lagrange state is not finite", k + 1, float(times[k + 1]))
            states[k + 1] = y
        logger.debug("reference_integrated", model=self.spec.display_name, steps=steps)
        return ReferenceSolution(times=times, q=states[:, :n], qd=states[:, n:])


def integrate_euler_lagrange(
    spec: SystemSpec,
    ic: InitialCondition,
    h: float,
    horizon: float,
    params: Optional[Dict[str, float]] = None,
    config: Optional[EngineConfig] = None
) -> ReferenceSolution:
    return ReferenceIntegrator(spec, params, config).run(ic, h, horizon)
