"""
Numerical integration of the Skinner-Rusk flow.
Lifts initial conditions onto the final constraint level, runs fixed-step RK4 with optional
re-imposition of the solved-form constraints and monitors constraint drift.
"""

from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Mapping, Optional, Sequence

import numpy as np
import sympy as sp
from tqdm import tqdm

from ..geometry.legendre import legendre_graph
from ..models.chain import ConstraintChain
from ..models.config import EngineConfig
from ..models.coordinates import TAU, TIME, Coord
from ..models.system import InitialCondition, SystemSpec
from ..models.trajectory import DriftSummary, Trajectory
from ..models.vector_field import VectorFieldSpec
from ..utils.errors import (
    ChainNotStabilizedError, EvaluationDomainError, InitialConditionError, IntegrationError,
)
from ..utils.logging import get_logger
from ..utils.symbolic import bind, render, residual, simplify
from .constraints import solve_forms
from .euler_lagrange import uniform_grid

logger = get_logger(__name__)


def lift_initial_condition(
    spec: SystemSpec,
    chain: ConstraintChain,
    ic: InitialCondition,
    params: Optional[Dict[str, float]] = None,
    config: Optional[EngineConfig] = None
) -> Dict[Coord, float]:
    """
    Map a jet initial condition (t0, q0, qd0) to a point of the final level.

    tau and p come from the Legendre graph; the point is then checked
    against every cumulative constraint of the final level.

    Raises:
        ChainNotStabilizedError: The chain did not stabilize
        InitialConditionError: A constraint is violated beyond config.init_tolerance
    """
    config = config or EngineConfig()
    if not chain.status.stabilized:
        raise ChainNotStabilizedError(f"cannot lift onto a chain with status {chain.status}")
    merged = dict(spec.params, **(params or {}))
    point = legendre_graph(spec).embed(ic.as_point(), merged)
    values = bind(point, merged)

    violations: Dict[str, float] = {}
    for c in chain.final.cumulative:
        try:
            value, _ = residual(simplify(c), values)
        except EvaluationDomainError as e:
            raise InitialConditionError(f"constraint {render(c)}=0 cannot be evaluated: {e}")
        if abs(value) > config.init_tolerance:
            violations[render(c)] = abs(value)
    if violations:
        name, value = next(iter(violations.items()))
        raise InitialConditionError(f"constraint {name}=0 violated (residual {value:g})", violations)
    return point


class CompiledField:
    """
    Numeric form of a bound vector field and its constraint functions.

    Components, the projection map and the monitored constraints are
    lambdified once and shared read-only between trajectories.
    """

    def __init__(self, spec: SystemSpec, Z: VectorFieldSpec, params: Optional[Dict[str, float]] = None):
        if Z.free_params:
            raise ValueError(f"free parameters {[s.name for s in Z.free_params]} must be bound before compiling")
        self.chart = Z.chart
        self.params = spec.param_values(params)
        symbols = self.chart.symbols + list(self.params)
        self._param_args = list(self.params.values())
        self._components = sp.lambdify(symbols, list(Z.components), modules='numpy')

        constraints = list(Z.constraints)
        tau_graph = simplify(TAU.symbol - legendre_graph(spec).tau_expr)
        if self.chart.label == "mixed" and tau_graph not in constraints:
            constraints.append(tau_graph)
        self.constraint_names = tuple(render(c) for c in constraints)
        self._constraints = sp.lambdify(symbols, constraints, modules='numpy') if constraints else None

        solved, _ = solve_forms(self.chart, constraints)
        self._solved_index = [self.chart.symbols.index(s) for s in solved]
        self._solved = sp.lambdify(symbols, list(solved.values()), modules='numpy') if solved else None

    def rhs(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(self._components(*x, *self._param_args), dtype=float).reshape(-1)

    def project(self, x: np.ndarray) -> np.ndarray:
        """Overwrite solved coordinates by their solved-form values."""
        if self._solved is None:
            return x
        values = np.asarray(self._solved(*x, *self._param_args), dtype=float).reshape(-1)
        x = x.copy()
        x[self._solved_index] = values
        return x

    def residuals(self, x: np.ndarray) -> np.ndarray:
        if self._constraints is None:
            return np.zeros(0)
        return np.abs(np.asarray(self._constraints(*x, *self._param_args), dtype=float).reshape(-1))


def _bound_field(Z: VectorFieldSpec, bindings: Optional[Mapping[str, float]]) -> VectorFieldSpec:
    bindings = dict(bindings or {})
    for name in Z.unknown_bindings(bindings):
        logger.warning("unknown_binding_ignored", name=name, free_params=[s.name for s in Z.free_params])
    values = {s.name: float(bindings.get(s.name, 0.0)) for s in Z.free_params}
    defaulted = [s.name for s in Z.free_params if s.name not in bindings]
    if defaulted:
        logger.warning("free_parameter_defaulted", names=defaulted, value=0.0)
    return Z.bind(values)


def _rk4_step(field: CompiledField, x: np.ndarray, h: float) -> np.ndarray:
    k1 = field.rhs(x) * h
    k2 = field.rhs(x + 0.5 * k1) * h
    k3 = field.rhs(x + 0.5 * k2) * h
    k4 = field.rhs(x + k3) * h
    return x + (k1 + 2 * k2 + 2 * k3 + k4) / 6


def integrate(
    spec: SystemSpec,
    Z: VectorFieldSpec,
    x0: Mapping[Coord, float],
    h: float,
    horizon: float,
    bindings: Optional[Mapping[str, float]] = None,
    params: Optional[Dict[str, float]] = None,
    config: Optional[EngineConfig] = None,
    projection: Optional[bool] = None,
    progress: bool = False,
    field: Optional[CompiledField] = None
) -> Trajectory:
    """
    Fixed-step classical RK4 along Z from x0 over [t0, t0 + horizon].

    The step is T / ceil(T / h) so the last sample lands on t0 + T. Time is
    reset to t0 + k dt after each step. With projection on, solved
    coordinates are recomputed from the others after each step.

    Args:
        spec: Parsed model
        Z: Vector field on the chart of x0
        x0: Initial point, usually from lift_initial_condition
        h: Requested step
        horizon: Integration horizon T
        bindings: Values for free parameters; missing ones default to 0 with a warning
        params: Parameter overrides
        config: Engine configuration
        projection: Override config.projection
        progress: Show a tqdm progress bar
        field: Precompiled field shared between runs

    Returns:
        Trajectory with per-sample constraint residuals

    Raises:
        IntegrationError: Evaluation failure or drift above config.drift_fail_threshold
    """
    config = config or EngineConfig()
    projection = config.projection if projection is None else projection
    bound = _bound_field(Z, bindings)
    field = field or CompiledField(spec, bound, params)
    chart = field.chart
    steps, dt = uniform_grid(h, horizon)

    x = np.array([float(x0[c]) for c in chart.coords])
    t0 = float(x0[TIME])
    t_index = chart.index(TIME)
    times = t0 + dt * np.arange(steps + 1)
    states = np.empty((steps + 1, chart.dim))
    residuals = np.empty((steps + 1, len(field.constraint_names)))
    states[0] = x
    residuals[0] = field.residuals(x)

    with np.errstate(over='raise', divide='raise', invalid='raise'):
        for k in tqdm(range(steps), disable=not progress, desc=spec.display_name, unit="step"):
            try:
                x = _rk4_step(field, x, dt)
                x[t_index] = times[k + 1]
                if projection:
                    x = field.project(x)
                r = field.residuals(x)
            except (FloatingPointError, OverflowError, ZeroDivisionError, ValueError, TypeError) as e:
                raise IntegrationError(f"vector field evaluation failed: {e}", k + 1, float(times[k + 1]))
            if not np.all(np.isfinite(x)):
                raise IntegrationError("state is not finite", k + 1, float(times[k + 1]))
            drift = float(np.max(r)) if r.size else 0.0
            if drift > config.drift_fail_threshold:
                worst = field.constraint_names[int(np.argmax(r))]
                raise IntegrationError(
                    f"constraint drift {drift:g} on {worst}=0 exceeds {config.drift_fail_threshold:g}",
                    k + 1, float(times[k + 1]),
                )
            states[k + 1] = x
            residuals[k + 1] = r

    trajectory = Trajectory(
        chart=chart,
        times=times,
        states=states,
        constraint_names=field.constraint_names,
        residuals=residuals,
        bindings=dict(bound.bindings),
        defaulted=tuple(s.name for s in Z.free_params if s.name not in (bindings or {})),
        step=dt,
        projection=projection,
    )
    logger.info("trajectory_integrated", model=spec.display_name, steps=steps, step=dt,
                max_drift=float(np.max(trajectory.drift)) if len(trajectory) else 0.0)
    return trajectory


def drift_report(traj: Trajectory, constraints: Optional[Sequence[str]] = None) -> DriftSummary:
    """
    Max and mean residual per constraint and the drift trend.

    Args:
        traj: Integrated trajectory
        constraints: Subset of traj.constraint_names to summarize (all by default)
    """
    if len(traj) == 0 or traj.residuals.size == 0:
        return DriftSummary()
    names = list(constraints) if constraints is not None else list(traj.constraint_names)
    columns = [traj.constraint_names.index(name) for name in names]
    selected = traj.residuals[:, columns]
    drift = np.max(selected, axis=1) if columns else np.zeros(len(traj))
    return DriftSummary(
        max_residual={name: float(np.max(selected[:, i])) for i, name in enumerate(names)},
        mean_residual={name: float(np.mean(selected[:, i])) for i, name in enumerate(names)},
        max_drift=float(np.max(drift)) if drift.size else 0.0,
        monotone=bool(np.all(np.diff(drift) >= 0)),
        samples=len(traj),
    )


def integrate_grid(
    spec: SystemSpec,
    Z: VectorFieldSpec,
    points: Sequence[Mapping[Coord, float]],
    h: float,
    horizon: float,
    bindings: Optional[Mapping[str, float]] = None,
    params: Optional[Dict[str, float]] = None,
    config: Optional[EngineConfig] = None,
    max_workers: Optional[int] = None,
    progress: bool = False
) -> List[Trajectory]:
    """
    Integrate several initial points concurrently with one shared compiled field.

    Results are returned in the order of `points`.
    """
    config = config or EngineConfig()
    bound = _bound_field(Z, bindings)
    field = CompiledField(spec, bound, params)

    def run(x0: Mapping[Coord, float]) -> Trajectory:
        return integrate(spec, bound, x0, h, horizon, params=params, config=config, field=field)

    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        results = list(tqdm(pool.map(run, points), total=len(points), disable=not progress, desc="grid"))
    for trajectory in results:
        trajectory.bindings = dict(bound.bindings)
        trajectory.defaulted = tuple(s.name for s in Z.free_params if s.name not in (bindings or {}))
    return results
