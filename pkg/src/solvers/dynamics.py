"""
Skinner-Rusk dynamics.
Assembles the vector field Z solving i_Z(omega_H) = 0, i_Z(eta) = 1 on the final constraint level
and projects it to J1pi and to J1pi* x_E J1pi.
"""

from typing import Dict, List, Optional, Sequence, Tuple, Union

import sympy as sp

from ..geometry.exterior import interior_product
from ..geometry.legendre import RegularityReport, dual_legendre, hessian_report, legendre_graph
from ..geometry.phase_space import build_eta, build_omega_H
from ..models.chain import ConstraintChain, ConstraintLevel
from ..models.config import EngineConfig
from ..models.coordinates import TAU, TIME, Chart, momentum, position, velocity
from ..models.system import SystemSpec
from ..models.vector_field import FieldMode, VectorFieldSpec
from ..utils.errors import (
    ChainNotStabilizedError, DynamicsError, ProjectionUnavailableError, RegularityRequiredError,
)
from ..utils.logging import get_logger
from ..utils.sampling import make_rng, sample_point
from ..utils.symbolic import ZeroTestConfig, diff, is_zero, render, simplify, vanishes_at
from .constraints import solve_forms
from .euler_lagrange import euler_lagrange_field

logger = get_logger(__name__)

_TAU_PLACEHOLDER = sp.Symbol("z_tau", real=True)


def _directional(chart: Chart, components: Sequence[sp.Expr], f: sp.Expr) -> sp.Expr:
    return simplify(sum(
        (c * sp.diff(f, s) for c, s in zip(components, chart.symbols) if c != 0),
        sp.S.Zero,
    ))


def _raw_field(spec: SystemSpec, chain: ConstraintChain) -> VectorFieldSpec:
    chart = chain.chart
    final = chain.final
    tau_expr = legendre_graph(spec).tau_expr
    components = list(chain.solution)
    # Z_tau follows the energy balance Z(tau_expr); tau_expr has no tau dependence.
    z_tau = final.reduce(_directional(chart, components, tau_expr))
    components = [final.reduce(c.xreplace({_TAU_PLACEHOLDER: z_tau})) for c in components]
    used = set().union(*(c.free_symbols for c in components))
    free = tuple(s for s in chain.free_parameters if s in used and s != _TAU_PLACEHOLDER)
    return VectorFieldSpec(chart=chart, components=tuple(components), free_params=free,
                           domain=final, mode=FieldMode.RAW)


def _graph_refined_field(spec: SystemSpec, chain: ConstraintChain, config: EngineConfig) -> VectorFieldSpec:
    chart = chain.chart
    n = spec.n
    graph = legendre_graph(spec)
    accelerations = euler_lagrange_field(spec, config)
    jet_components = [sp.S.One] + [velocity(a).symbol for a in range(1, n + 1)] + list(accelerations)
    z_tau = _directional(spec.jet_chart, jet_components, graph.tau_expr)

    by_coord = {TIME: sp.S.One, TAU: z_tau}
    for a in range(1, n + 1):
        by_coord[position(a)] = velocity(a).symbol
        by_coord[velocity(a)] = accelerations[a - 1]
        by_coord[momentum(a)] = simplify(diff(spec.lagrangian, position(a), n))
    return VectorFieldSpec(
        chart=chart,
        components=tuple(by_coord[c] for c in chart.coords),
        domain=chain.final,
        mode=FieldMode.GRAPH_REFINED,
        extra_constraints=(simplify(TAU.symbol - graph.tau_expr),),
    )


def solve_Z(
    spec: SystemSpec,
    chain: ConstraintChain,
    mode: Union[FieldMode, str] = FieldMode.RAW,
    config: Optional[EngineConfig] = None,
    regularity: Optional[RegularityReport] = None
) -> VectorFieldSpec:
    """
    Vector field solving i_Z(omega_H) = 0, i_Z(eta) = 1 tangent to the final level.

    Args:
        spec: Parsed model
        chain: Stabilized chain on M1
        mode: raw for the general solution on M_f, graph_refined for the unique
            solution tangent to graph_L (regular Lagrangians only)
        config: Engine configuration
        regularity: Precomputed Hessian analysis

    Returns:
        The solved VectorFieldSpec; undetermined velocity components are free parameters u<A>

    Raises:
        ChainNotStabilizedError: The chain did not stabilize
        RegularityRequiredError: graph_refined requested for a singular Lagrangian
    """
    config = config or EngineConfig()
    mode = FieldMode(mode)
    if chain.label != "mixed":
        raise DynamicsError(f"solve_Z needs the chain on the mixed space, got '{chain.label}'")
    if not chain.status.stabilized:
        raise ChainNotStabilizedError(f"vector field needs a stabilized chain, status is {chain.status}")

    if mode is FieldMode.RAW:
        field = _raw_field(spec, chain)
    elif mode is FieldMode.GRAPH_REFINED:
        regularity = regularity or hessian_report(spec, config=config)
        if not regularity.is_regular:
            raise RegularityRequiredError(
                f"graph_refined mode requires a regular Lagrangian ({regularity.label})"
            )
        field = _graph_refined_field(spec, chain, config)
    else:
        raise DynamicsError(f"solve_Z does not build {mode.value} fields")

    logger.info("vector_field_solved", model=spec.display_name, mode=field.mode.value,
                free_params=[s.name for s in field.free_params])
    return field


def _graph_substitution(spec: SystemSpec, keep_momenta: bool = False) -> Dict[sp.Symbol, sp.Expr]:
    graph = legendre_graph(spec)
    replacements = {TAU.symbol: graph.tau_expr}
    if not keep_momenta:
        for a, p in enumerate(graph.momentum_exprs, start=1):
            replacements[momentum(a).symbol] = p
    return replacements


def _projected_level(
    level: Optional[ConstraintLevel],
    chart: Chart,
    constraints: Sequence[sp.Expr],
    replacements: Dict[sp.Symbol, sp.Expr]
) -> ConstraintLevel:
    projected: List[sp.Expr] = []
    for c in constraints:
        r = simplify(sp.sympify(c).xreplace(replacements))
        if r != 0 and r not in projected:
            projected.append(r)
    solved, unsolved = solve_forms(chart, projected)
    dropped = set(replacements)
    points = tuple(
        {s: v for s, v in point.items() if s not in dropped}
        for point in (level.witness_points if level else ())
    )
    return ConstraintLevel(
        level=level.level if level else 1,
        chart=chart,
        constraints=tuple(projected),
        cumulative=tuple(projected),
        solved=solved,
        unsolved=tuple(unsolved),
        witness_points=points,
    )


def project_to_jet(spec: SystemSpec, Z: VectorFieldSpec) -> VectorFieldSpec:
    """
    Push Z forward along pr2 onto J1pi.

    Momenta and tau are replaced by their graph values so that the result
    is a field (1, qd, Z_qd) on (t, q, qd); free parameters are carried over.
    """
    if Z.chart.label == "jet":
        return Z
    chart = spec.jet_chart
    replacements = _graph_substitution(spec)
    components = tuple(simplify(Z.component(c).xreplace(replacements)) for c in chart.coords)
    domain = _projected_level(Z.domain, chart, Z.constraints, replacements)
    components = tuple(domain.reduce(c) for c in components)
    return VectorFieldSpec(
        chart=chart,
        components=components,
        free_params=Z.free_params,
        domain=domain,
        mode=FieldMode.JET,
        bindings=Z.bindings,
    )


def project_to_dual(
    spec: SystemSpec,
    Z: VectorFieldSpec,
    config: Optional[EngineConfig] = None,
    regularity: Optional[RegularityReport] = None
) -> VectorFieldSpec:
    """
    Push Z forward along nu x_E id onto J1pi* x_E J1pi, dropping the tau component.

    Only defined for regular Lagrangians. leg_L must be locally invertible at
    seeded jet points; global hyperregularity is not verified and a warning is
    logged on every call.

    Raises:
        ProjectionUnavailableError: The Lagrangian is singular, Z is not graph_refined,
            or leg_L is not locally invertible at a sampled point
    """
    config = config or EngineConfig()
    regularity = regularity or hessian_report(spec, config=config)
    if not regularity.is_regular:
        raise ProjectionUnavailableError("projection unavailable for singular Lagrangian")
    if Z.mode is not FieldMode.GRAPH_REFINED:
        raise ProjectionUnavailableError(f"projection needs a graph_refined field, got {Z.mode.value}")
    leg = dual_legendre(spec, config)
    rng = make_rng(config.seed, spec.display_name, "dual_legendre")
    params = spec.param_values()
    for _ in range(config.regularity_samples):
        values = {**sample_point(rng, spec.jet_chart.symbols, config.sample_radius), **params}
        if not leg.locally_invertible_at(values):
            point = {s.name: round(v, 6) for s, v in values.items()}
            raise ProjectionUnavailableError(f"leg_L is not locally invertible at {point}")
    logger.warning("hyperregularity_unverified", model=spec.display_name, samples=config.regularity_samples,
                   detail="leg_L is locally invertible at sampled points; global invertibility is not checked")
    chart = Chart.dual(spec.n)
    replacements = _graph_substitution(spec, keep_momenta=True)
    components = tuple(simplify(Z.component(c)) for c in chart.coords)
    domain = _projected_level(Z.domain, chart, Z.domain.cumulative if Z.domain else (), replacements)
    return VectorFieldSpec(chart=chart, components=components, domain=domain, mode=FieldMode.DUAL)


def el_residual(spec: SystemSpec, Z: VectorFieldSpec) -> Tuple[sp.Expr, ...]:
    """
    Euler-Lagrange residuals d/dt(dL/dqd^A) - dL/dq^A along the jet projection of Z.

    The derivative along the flow is Z(dL/dqd^A); residuals are reduced by
    the solved-form constraints of the projected domain.
    """
    jet = project_to_jet(spec, Z)
    n = spec.n
    out = []
    for a in range(1, n + 1):
        momentum = diff(spec.lagrangian, velocity(a), n)
        r = jet.apply(momentum) - diff(spec.lagrangian, position(a), n)
        out.append(jet.reduce(r))
    return tuple(out)


def reduce_on_domain(Z: VectorFieldSpec, e: sp.Expr) -> sp.Expr:
    """Reduce an expression by every solved-form constraint of Z's domain, extra constraints included."""
    solved, _ = solve_forms(Z.chart, Z.constraints)
    e = sp.sympify(e)
    return simplify(e.xreplace(solved)) if solved else simplify(e)


def vanishes_on_domain(Z: VectorFieldSpec, e: sp.Expr, config: Optional[EngineConfig] = None) -> bool:
    """Zero test modulo the domain; unsolved constraints fall back to witness points."""
    config = config or EngineConfig()
    solved, unsolved = solve_forms(Z.chart, Z.constraints)
    reduced = simplify(sp.sympify(e).xreplace(solved)) if solved else simplify(e)
    if reduced == 0:
        return True
    if unsolved and Z.domain and Z.domain.witness_points:
        return all(vanishes_at(reduced, Z.domain.witness_points))
    zero_config = ZeroTestConfig(trials=config.zero_trials, seed=config.seed, tolerance=config.zero_tolerance,
                                 radius=config.sample_radius, max_resample=config.max_resample)
    return is_zero(reduced, config=zero_config)


def field_residuals(spec: SystemSpec, Z: VectorFieldSpec) -> Dict[str, sp.Expr]:
    """
    Algebraic residuals of Z on its domain, keyed for reporting.

    Contains every coefficient of i_Z(omega_H), i_Z(eta) - 1 and Z(psi) for
    each domain constraint psi, all reduced modulo the domain.
    """
    if Z.chart.label != "mixed":
        raise DynamicsError("field residuals are defined for fields on the mixed space")
    chart = Z.chart
    out: Dict[str, sp.Expr] = {}
    contracted = interior_product(Z.components, build_omega_H(spec))
    for coord, c in zip(chart.coords, contracted.coeffs):
        out[f"i_Z omega_H[{coord.name}]"] = reduce_on_domain(Z, c)
    out["i_Z eta - 1"] = reduce_on_domain(Z, build_eta(spec).apply(Z.components) - 1)
    for psi in Z.constraints:
        out[f"Z({render(psi)})"] = reduce_on_domain(Z, Z.apply(psi))
    return out
