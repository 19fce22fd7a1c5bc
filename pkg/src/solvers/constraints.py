"""
Presymplectic constraint algorithm.
Runs the iteration i_Z(omega) = 0, i_Z(eta) = 1, Z tangent to the current level on
(M1, omega_H, eta) and on (J1pi, omega_L, dt), producing the chain of constraint levels.
"""

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import sympy as sp
from scipy.linalg import null_space
from scipy.optimize import least_squares

from ..geometry.legendre import RegularityKind, RegularityReport, hessian_report
from ..geometry.phase_space import (
    build_eta, build_jet_eta, build_omega_H, build_poincare_cartan, numeric_rank,
)
from ..models.chain import ChainStatus, ChainStatusKind, ConstraintChain, ConstraintLevel, FreeDirections
from ..models.config import EngineConfig
from ..models.coordinates import Chart, CoordKind, free_parameter_symbol, momentum, position, velocity
from ..models.forms import OneFormField, TwoFormField
from ..models.system import SystemSpec
from ..utils.errors import ConstantRankError, EvaluationDomainError, UnboundSymbolError
from ..utils.logging import get_logger
from ..utils.sampling import make_rng, sample_point
from ..utils.symbolic import (
    ZeroTestConfig, diff, evaluate, evaluate_matrix, is_zero, jacobian, render, residual, simplify,
)

logger = get_logger(__name__)

# Coordinates are solved for in this order of preference when a constraint is linear in them.
_SOLVE_PREFERENCE = (
    CoordKind.MOMENTUM,
    CoordKind.TAU,
    CoordKind.VELOCITY,
    CoordKind.POSITION,
    CoordKind.TIME,
)


@dataclass(frozen=True)
class PresymplecticProblem:
    """
    A precosymplectic pair (omega, eta) on a chart.

    Attributes:
        name: Model name, used to derive seeds
        label: "mixed" or "jet"
        chart: Coordinate chart
        omega: The closed 2-form
        eta: The closed 1-form
        params: Parameter values used for numeric tests
    """
    name: str
    label: str
    chart: Chart
    omega: TwoFormField
    eta: OneFormField
    params: Dict[sp.Symbol, float]


@dataclass(frozen=True)
class LevelSolution:
    """
    General solution of the linear system on one level.

    Attributes:
        components: One expression per chart coordinate; free columns are symbols
        free_columns: Chart indices of undetermined components
        free_symbols: Symbols standing for the undetermined components
        residuals: Normalized consistency conditions not vanishing on the level
    """
    components: Tuple[sp.Expr, ...]
    free_columns: Tuple[int, ...]
    free_symbols: Tuple[sp.Symbol, ...]
    residuals: Tuple[sp.Expr, ...]


def mixed_problem(spec: SystemSpec, params: Optional[Dict[str, float]] = None) -> PresymplecticProblem:
    return PresymplecticProblem(
        name=spec.display_name,
        label="mixed",
        chart=spec.mixed_chart,
        omega=build_omega_H(spec),
        eta=build_eta(spec),
        params=spec.param_values(params),
    )


def jet_problem(spec: SystemSpec, params: Optional[Dict[str, float]] = None) -> PresymplecticProblem:
    _, omega_L = build_poincare_cartan(spec)
    return PresymplecticProblem(
        name=spec.display_name,
        label="jet",
        chart=spec.jet_chart,
        omega=omega_L,
        eta=build_jet_eta(spec),
        params=spec.param_values(params),
    )


def _zero_config(config: EngineConfig) -> ZeroTestConfig:
    return ZeroTestConfig(
        trials=config.zero_trials,
        seed=config.seed,
        tolerance=config.zero_tolerance,
        radius=config.sample_radius,
        max_resample=config.max_resample,
    )


def _solvable_symbol(chart: Chart, constraint: sp.Expr) -> Optional[sp.Symbol]:
    """A coordinate the constraint is affine in with a numeric coefficient."""
    free = constraint.free_symbols
    for kind in _SOLVE_PREFERENCE:
        for coord in chart.of_kind(kind):
            s = coord.symbol
            if s not in free:
                continue
            d = sp.diff(constraint, s)
            if d.is_number and d != 0:
                return s
    return None


def solve_forms(chart: Chart, constraints: Sequence[sp.Expr]) -> Tuple[Dict[sp.Symbol, sp.Expr], List[sp.Expr]]:
    """
    Split constraints into solved-form substitutions and the rest.

    Returns:
        (solved, unsolved); right-hand sides of `solved` contain no solved symbol
    """
    solved: Dict[sp.Symbol, sp.Expr] = {}
    unsolved: List[sp.Expr] = []
    for c in constraints:
        r = simplify(c.xreplace(solved)) if solved else simplify(c)
        if r == 0:
            continue
        target = _solvable_symbol(chart, r)
        if target is None:
            unsolved.append(r)
            continue
        coeff = sp.diff(r, target)
        rhs = simplify(-(r - coeff * target) / coeff)
        solved = {s: simplify(e.xreplace({target: rhs})) for s, e in solved.items()}
        solved[target] = rhs
    unsolved = [u for u in (simplify(u.xreplace(solved)) for u in unsolved) if u != 0]
    return solved, unsolved


def _project_onto(
    unsolved: Sequence[sp.Expr],
    values: Dict[sp.Symbol, float],
    free: Sequence[sp.Symbol],
    params: Dict[sp.Symbol, float],
    tolerance: float
) -> Optional[Dict[sp.Symbol, float]]:
    """Damped least-squares projection of a sample onto the unsolved constraints."""
    variables = [s for s in free if any(s in u.free_symbols for u in unsolved)]
    if not variables:
        return None
    fixed = [s for s in free if s not in variables] + list(params)
    func = sp.lambdify(variables + fixed, list(unsolved), modules='numpy')
    fixed_values = [values[s] for s in fixed]

    def residuals(x):
        return np.asarray(func(*x, *fixed_values), dtype=float)

    x0 = np.array([values[s] for s in variables])
    try:
        result = least_squares(residuals, x0)
    except (ValueError, FloatingPointError, ZeroDivisionError, OverflowError):
        return None
    if not np.all(np.isfinite(result.x)) or np.max(np.abs(result.fun)) > tolerance:
        return None
    projected = dict(values)
    projected.update({s: float(v) for s, v in zip(variables, result.x)})
    return projected


def witness_points(
    problem: PresymplecticProblem,
    solved: Dict[sp.Symbol, sp.Expr],
    unsolved: Sequence[sp.Expr],
    level_index: int,
    config: EngineConfig,
    count: Optional[int] = None
) -> Tuple[Dict[sp.Symbol, float], ...]:
    """
    Seeded points on a constraint level.

    Free coordinates are drawn uniformly from [-r, r]; solved coordinates are
    computed from them and the remaining constraints are met by a damped
    least-squares root finder. An empty result means the level was not found
    to be inhabited.
    """
    count = count or config.witness_points
    rng = make_rng(config.seed, problem.name, problem.label, 'witness', level_index)
    free = [s for s in problem.chart.symbols if s not in solved]
    points = []
    attempts = 0
    while len(points) < count and attempts < count * config.max_resample:
        attempts += 1
        values = sample_point(rng, free, config.sample_radius)
        values.update(problem.params)
        if unsolved:
            values = _project_onto(unsolved, values, free, problem.params, config.witness_tolerance)
            if values is None:
                continue
        try:
            for s, e in solved.items():
                values[s] = evaluate(e, values)
        except EvaluationDomainError:
            continue
        points.append(values)
    if len(points) < count:
        logger.debug("witness_shortfall", chain=problem.label, level=level_index, found=len(points), wanted=count)
    return tuple(points)


def build_level(
    problem: PresymplecticProblem,
    index: int,
    new_constraints: Sequence[sp.Expr],
    previous: Optional[ConstraintLevel],
    config: EngineConfig
) -> ConstraintLevel:
    """Assemble a level: cumulative constraints, solved forms and witness points."""
    cumulative = (previous.cumulative if previous else ()) + tuple(new_constraints)
    solved, unsolved = solve_forms(problem.chart, cumulative)
    points = witness_points(problem, solved, unsolved, index, config)
    return ConstraintLevel(
        level=index,
        chart=problem.chart,
        constraints=tuple(new_constraints),
        cumulative=cumulative,
        solved=solved,
        unsolved=tuple(unsolved),
        witness_points=points,
    )


def primary_constraints(spec: SystemSpec, config: Optional[EngineConfig] = None) -> ConstraintLevel:
    """Level 2 = M_L: phi_A = p_A - dL/dqd^A."""
    config = config or EngineConfig()
    problem = mixed_problem(spec)
    constraints = [
        simplify(momentum(a).symbol - diff(spec.lagrangian, velocity(a), spec.n))
        for a in range(1, spec.n + 1)
    ]
    level1 = build_level(problem, 1, [], None, config)
    return build_level(problem, 2, constraints, level1, config)


def _reduce_entry(e: sp.Expr, level: ConstraintLevel) -> sp.Expr:
    e = level.reduce(e)
    if e == 0 or e.is_number:
        return e
    try:
        return sp.cancel(e)
    except sp.PolynomialError:
        return simplify(e)


def _vanishing_state(e: sp.Expr, level: ConstraintLevel) -> str:
    """'zero', 'nonzero' or 'mixed' over the witness points of the level."""
    if e == 0:
        return 'zero'
    if e.is_number:
        return 'nonzero'
    flags = []
    for values in level.witness_points:
        try:
            value, scale = residual(e, values)
        except EvaluationDomainError:
            continue
        flags.append(abs(value) <= 1e-8 + 1e-9 * scale)
    if not flags:
        return 'nonzero'
    if all(flags):
        return 'zero'
    if any(flags):
        return 'mixed'
    return 'nonzero'


def _magnitude(e: sp.Expr, level: ConstraintLevel) -> float:
    if e.is_number:
        return abs(float(e))
    if not level.witness_points:
        return 0.0
    try:
        return abs(residual(e, level.witness_points[0])[0])
    except (EvaluationDomainError, UnboundSymbolError):
        return 0.0


def linear_system(problem: PresymplecticProblem, level: ConstraintLevel) -> Tuple[List[List[sp.Expr]], List[sp.Expr]]:
    """
    Rows of i_Z(omega) = 0, i_Z(eta) = 1 and Z(psi) = 0 for every cumulative psi.

    Returns:
        (coefficient rows over the chart order, right-hand sides)
    """
    chart = problem.chart
    c = problem.omega.coeffs
    rows: List[List[sp.Expr]] = []
    rhs: List[sp.Expr] = []
    for j in range(chart.dim):
        rows.append([c[i, j] for i in range(chart.dim)])
        rhs.append(sp.S.Zero)
    rows.append(list(problem.eta.coeffs))
    rhs.append(sp.S.One)
    for psi in level.cumulative:
        rows.append([sp.diff(psi, s) for s in chart.symbols])
        rhs.append(sp.S.Zero)
    rows = [[_reduce_entry(e, level) for e in row] for row in rows]
    return rows, rhs


def _free_symbol(chart: Chart, column: int) -> sp.Symbol:
    coord = chart.coords[column]
    if coord.kind is CoordKind.VELOCITY:
        return free_parameter_symbol(coord.index)
    return sp.Symbol(f"z_{coord.name}", real=True)


def normalize_constraint(e: sp.Expr) -> sp.Expr:
    """Numerator with rational content and leading sign removed."""
    e = sp.together(sp.sympify(e))
    numerator, _ = sp.fraction(e)
    numerator = sp.expand(numerator)
    if numerator == 0:
        return sp.S.Zero
    _, primitive = numerator.as_content_primitive()
    if primitive.could_extract_minus_sign():
        primitive = -primitive
    return simplify(primitive)


def solve_on_level(problem: PresymplecticProblem, level: ConstraintLevel) -> LevelSolution:
    """
    Gauss-Jordan elimination of the level's linear system in chart column order.

    Pivots are chosen among entries that do not vanish on the level: numeric
    constants first, then the lowest operation count, then the largest
    magnitude at the first witness point, then the lowest row index.

    Raises:
        ConstantRankError: A candidate pivot vanishes at some witness points only
    """
    rows, rhs = linear_system(problem, level)
    chart = problem.chart
    used: Dict[int, int] = {}
    used_rows = set()

    for col in range(chart.dim):
        candidates = []
        for r, row in enumerate(rows):
            if r in used_rows or row[col] == 0:
                continue
            state = _vanishing_state(row[col], level)
            if state == 'zero':
                row[col] = sp.S.Zero
                continue
            if state == 'mixed':
                raise ConstantRankError(
                    f"coefficient '{render(row[col])}' vanishes on part of level {level.level}; "
                    f"the constant-rank hypothesis fails"
                )
            candidates.append(r)
        if not candidates:
            continue

        pivot = min(candidates, key=lambda r: (
            0 if rows[r][col].is_number else 1,
            sp.count_ops(rows[r][col]),
            -_magnitude(rows[r][col], level),
            r,
        ))
        used[col] = pivot
        used_rows.add(pivot)
        p = rows[pivot][col]
        rows[pivot] = [_reduce_entry(e / p, level) if e != 0 else e for e in rows[pivot]]
        rhs[pivot] = _reduce_entry(rhs[pivot] / p, level)
        for r, row in enumerate(rows):
            f = row[col]
            if r == pivot or f == 0:
                continue
            rows[r] = [_reduce_entry(a - f * b, level) for a, b in zip(row, rows[pivot])]
            rhs[r] = _reduce_entry(rhs[r] - f * rhs[pivot], level)

    free_columns = tuple(col for col in range(chart.dim) if col not in used)
    free_symbols = tuple(_free_symbol(chart, col) for col in free_columns)
    components: List[sp.Expr] = []
    for col in range(chart.dim):
        if col in used:
            r = used[col]
            value = rhs[r] - sum((rows[r][k] * s for k, s in zip(free_columns, free_symbols)), sp.S.Zero)
            components.append(_reduce_entry(value, level))
        else:
            components.append(free_symbols[free_columns.index(col)])

    residuals = []
    for r in range(len(rows)):
        if r in used_rows or rhs[r] == 0:
            continue
        if _vanishing_state(rhs[r], level) == 'zero':
            continue
        normalized = normalize_constraint(rhs[r])
        if normalized != 0 and normalized not in residuals:
            residuals.append(normalized)

    return LevelSolution(
        components=tuple(components),
        free_columns=free_columns,
        free_symbols=free_symbols,
        residuals=tuple(residuals),
    )


def _full_row_rank(problem: PresymplecticProblem, exprs: Sequence[sp.Expr], level: ConstraintLevel) -> bool:
    if not exprs:
        return True
    jac = jacobian(exprs, problem.chart.coords)
    for values in level.witness_points:
        try:
            matrix = evaluate_matrix(jac, values)
        except EvaluationDomainError:
            continue
        if numeric_rank(matrix) < len(exprs):
            return False
    return True


def tangency_step(
    problem: PresymplecticProblem,
    levels: Sequence[ConstraintLevel],
    config: EngineConfig
) -> Union[ConstraintLevel, ChainStatus]:
    """
    One iteration of the algorithm.

    Residuals of the general solution on the current level that cannot be
    absorbed by the free components become the next level's constraints.

    Returns:
        The next ConstraintLevel, or the ChainStatus when the chain terminates here
    """
    current = levels[-1]
    solution = solve_on_level(problem, current)
    zero_config = _zero_config(config)
    accepted: List[sp.Expr] = []
    for r in sorted(solution.residuals, key=lambda e: (sp.count_ops(e), sp.default_sort_key(e))):
        if r.is_number:
            logger.warning("inconsistent_residual", chain=problem.label, level=current.level, residual=render(r))
            return ChainStatus(ChainStatusKind.EMPTY_FINAL, current.level)
        if current.vanishes(r, zero_config):
            continue
        if accepted:
            solved, unsolved = solve_forms(problem.chart, list(current.cumulative) + accepted)
            reduced = simplify(r.xreplace(solved))
            if reduced == 0 or (not unsolved and is_zero(reduced, config=zero_config)):
                continue
        if _full_row_rank(problem, list(current.cumulative) + accepted + [r], current):
            accepted.append(r)
        else:
            logger.warning("dependent_residual", chain=problem.label, level=current.level, residual=render(r))
            return ChainStatus(ChainStatusKind.EMPTY_FINAL, current.level)

    if not accepted:
        return ChainStatus(ChainStatusKind.STABILIZED, current.level)
    nxt = build_level(problem, current.level + 1, accepted, current, config)
    logger.info("constraint_level", chain=problem.label, level=nxt.level, constraints=nxt.rendered())
    return nxt


def free_directions(problem: PresymplecticProblem, level: ConstraintLevel, solution: LevelSolution) -> FreeDirections:
    """Kernel of omega and eta on the tangent space of the level, symbolically and at witness points."""
    chart = problem.chart
    stacked = sp.Matrix(problem.omega.coeffs.T)
    stacked = stacked.col_join(sp.Matrix([list(problem.eta.coeffs)]))
    if level.cumulative:
        stacked = stacked.col_join(jacobian(level.cumulative, chart.coords))
    dims = []
    basis: Tuple[Dict[str, float], ...] = ()
    for values in level.witness_points:
        try:
            kernel = null_space(evaluate_matrix(stacked, values), rcond=1e-9)
        except EvaluationDomainError:
            continue
        dims.append(int(kernel.shape[1]))
        if not basis:
            basis = tuple(
                {name: round(float(v), 12) for name, v in zip(chart.names(), kernel[:, k]) if abs(v) > 1e-12}
                for k in range(kernel.shape[1])
            )
    return FreeDirections(
        components=tuple(chart.coords[c].name for c in solution.free_columns),
        kernel_dimensions=tuple(dims),
        basis=basis,
    )


def _iterate(
    problem: PresymplecticProblem,
    levels: List[ConstraintLevel],
    max_levels: int,
    config: EngineConfig
) -> Tuple[List[ConstraintLevel], ChainStatus]:
    while True:
        if not levels[-1].witness_points:
            logger.warning("empty_level", chain=problem.label, level=levels[-1].level)
            return levels, ChainStatus(ChainStatusKind.EMPTY_FINAL, levels[-1].level)
        result = tangency_step(problem, levels, config)
        if isinstance(result, ChainStatus):
            return levels, result
        if len(levels) >= max_levels:
            logger.warning("max_levels_reached", chain=problem.label, max_levels=max_levels)
            return levels, ChainStatus(ChainStatusKind.MAX_ITERATIONS_EXCEEDED, len(levels))
        levels.append(result)


def _finish(problem: PresymplecticProblem, levels: List[ConstraintLevel], status: ChainStatus) -> ConstraintChain:
    if status.stabilized:
        solution = solve_on_level(problem, levels[-1])
        return ConstraintChain(
            label=problem.label,
            chart=problem.chart,
            levels=tuple(levels),
            status=status,
            free_directions=free_directions(problem, levels[-1], solution),
            solution=solution.components,
            free_parameters=solution.free_symbols,
        )
    return ConstraintChain(label=problem.label, chart=problem.chart, levels=tuple(levels), status=status)


def run_algorithm(
    spec: SystemSpec,
    max_levels: Optional[int] = None,
    config: Optional[EngineConfig] = None,
    regularity: Optional[RegularityReport] = None
) -> ConstraintChain:
    """
    The constraint chain on M1 = T*E x_E J1pi.

    Level 1 is the whole space, level 2 is M_L, later levels come from
    tangency_step until the chain stabilizes.

    Args:
        spec: Parsed model
        max_levels: Level cap (defaults to config.max_levels)
        config: Engine configuration
        regularity: Precomputed Hessian analysis

    Returns:
        The chain with its status; MaxIterationsExceeded and EmptyFinal are statuses

    Raises:
        ConstantRankError: The Hessian rank varies
    """
    config = config or EngineConfig()
    max_levels = max_levels or config.max_levels
    regularity = regularity or hessian_report(spec, config=config)
    if regularity.kind is RegularityKind.VARIABLE_RANK:
        where = f" (drops at {regularity.rank_drop_witness})" if regularity.rank_drop_witness else ""
        raise ConstantRankError(f"Hessian rank is not constant{where}; the constraint algorithm needs constant rank")

    problem = mixed_problem(spec)
    level1 = build_level(problem, 1, [], None, config)
    level2 = primary_constraints(spec, config)
    levels = [level1, level2]
    logger.info("constraint_level", chain=problem.label, level=2, constraints=level2.rendered())
    levels, status = _iterate(problem, levels, max_levels, config)
    chain = _finish(problem, levels, status)
    logger.info("chain_finished", chain=problem.label, model=spec.display_name, status=str(status))
    return chain


def run_jet_algorithm(spec: SystemSpec, config: Optional[EngineConfig] = None) -> ConstraintChain:
    """
    The same engine on (J1pi, omega_L, dt).

    The general solution on the final level is reported together with its
    second-order residuals X_q - qd; no extra refinement is imposed.
    """
    config = config or EngineConfig()
    problem = jet_problem(spec)
    levels = [build_level(problem, 1, [], None, config)]
    levels, status = _iterate(problem, levels, config.max_levels, config)
    chain = _finish(problem, levels, status)
    if chain.solution:
        final = chain.final
        sode = tuple(
            final.reduce(chain.solution[problem.chart.index(position(a))] - velocity(a).symbol)
            for a in range(1, spec.n + 1)
        )
        chain = ConstraintChain(
            label=chain.label,
            chart=chain.chart,
            levels=chain.levels,
            status=chain.status,
            free_directions=chain.free_directions,
            solution=chain.solution,
            free_parameters=chain.free_parameters,
            sode_residuals=sode,
        )
    logger.info("chain_finished", chain=problem.label, model=spec.display_name, status=str(status))
    return chain


def flat_map(form: TwoFormField, eta: OneFormField, values: Dict[sp.Symbol, float]) -> np.ndarray:
    """
    Matrix of v -> i_v(form) + (i_v eta) eta at a point.

    Column k is the 1-form image of the k-th coordinate vector.
    """
    c = form.evaluate(values)
    e = eta.evaluate(values)
    return c.T + np.outer(e, e)


def eta_in_flat_image(
    form: TwoFormField,
    eta: OneFormField,
    constraints: Sequence[sp.Expr],
    values: Dict[sp.Symbol, float],
    tolerance: float = 1e-9
) -> bool:
    """
    Numeric test eta in flat(T_x P) for P cut out by `constraints`.

    Solvability is decided by comparing the rank of flat restricted to the
    tangent space with the rank of the system augmented by eta.
    """
    chart = form.chart
    b = flat_map(form, eta, values)
    if constraints:
        tangent = null_space(evaluate_matrix(jacobian(constraints, chart.coords), values), rcond=tolerance)
    else:
        tangent = np.eye(chart.dim)
    restricted = b @ tangent
    target = eta.evaluate(values).reshape(-1, 1)
    augmented = np.hstack([restricted, target])
    scale = max(1.0, float(np.max(np.abs(augmented))))
    rank = np.linalg.matrix_rank(restricted, tol=tolerance * scale) if restricted.size else 0
    return np.linalg.matrix_rank(augmented, tol=tolerance * scale) == rank
