"""
Legendre analysis.
Hessian regularity classification, the extended Legendre map and its graph, leg_L and the energy function.
"""

from dataclasses import dataclass
from enum import Enum
from itertools import combinations
from typing import Dict, List, Mapping, Optional, Tuple

import numpy as np
import sympy as sp
from scipy.optimize import least_squares

from ..models.config import EngineConfig
from ..models.coordinates import TAU, Coord, momentum, velocity
from ..models.system import SystemSpec
from ..utils.errors import EvaluationDomainError
from ..utils.logging import get_logger
from ..utils.sampling import make_rng, sample_point
from ..utils.symbolic import ZeroTestConfig, diff, evaluate, evaluate_matrix, is_zero, simplify
from .phase_space import build_hamiltonian, numeric_rank

logger = get_logger(__name__)

# Minors are only expanded symbolically up to this fibre dimension.
_SYMBOLIC_MINOR_MAX_N = 3


class RegularityKind(str, Enum):
    """Hessian classification."""
    REGULAR = "Regular"
    CONSTANT_RANK_SINGULAR = "ConstantRankSingular"
    VARIABLE_RANK = "VariableRank"


@dataclass(frozen=True)
class RegularityReport:
    """
    Outcome of the Hessian analysis.

    Attributes:
        hessian: n x n matrix of d2L/dqd^A dqd^B
        determinant: Symbolic determinant of the Hessian
        rank_profile: Observed numeric rank at each sample point
        kind: Classification
        rank: Constant rank r when the classification has one
        rank_drop_witness: Point where the rank falls below the sampled value, if found
    """
    hessian: sp.ImmutableMatrix
    determinant: sp.Expr
    rank_profile: Tuple[int, ...]
    kind: RegularityKind
    rank: Optional[int]
    rank_drop_witness: Optional[Dict[str, float]] = None

    @property
    def is_regular(self) -> bool:
        return self.kind is RegularityKind.REGULAR

    @property
    def label(self) -> str:
        if self.kind is RegularityKind.REGULAR:
            return "Regular"
        if self.kind is RegularityKind.CONSTANT_RANK_SINGULAR:
            return f"Singular rank {self.rank}"
        return "Variable rank"


def hessian(spec: SystemSpec) -> sp.ImmutableMatrix:
    n = spec.n
    rows = []
    for a in range(1, n + 1):
        first = diff(spec.lagrangian, velocity(a), n)
        rows.append([simplify(diff(first, velocity(b), n)) for b in range(1, n + 1)])
    return sp.ImmutableMatrix(rows)


def _jet_sample(spec: SystemSpec, rng: np.random.Generator, radius: float) -> Dict[sp.Symbol, float]:
    values = sample_point(rng, spec.jet_chart.symbols, radius)
    values.update(spec.param_values())
    return values


def _minors(matrix: sp.Matrix, order: int) -> List[sp.Expr]:
    n = matrix.shape[0]
    out = []
    for rows in combinations(range(n), order):
        for cols in combinations(range(n), order):
            m = simplify(matrix.extract(list(rows), list(cols)).det(method='berkowitz'))
            if m != 0:
                out.append(m)
    return out


def _search_rank_drop(
    spec: SystemSpec,
    minors: List[sp.Expr],
    starts: List[Dict[sp.Symbol, float]],
    config: EngineConfig
) -> Optional[Dict[str, float]]:
    """Damped least-squares search for a jet point where every given minor vanishes."""
    if not minors:
        return None
    symbols = sorted(set().union(*(m.free_symbols for m in minors)) - set(spec.param_symbols), key=lambda s: s.name)
    if not symbols:
        return None
    params = spec.param_values()
    funcs = [sp.lambdify(symbols + list(params), m, modules='numpy') for m in minors]
    param_args = list(params.values())

    def residuals(x):
        return np.array([float(f(*x, *param_args)) for f in funcs])

    bound = 4.0 * config.sample_radius
    for start in starts:
        x0 = np.array([start.get(s, 0.0) for s in symbols])
        try:
            result = least_squares(residuals, x0)
        except (ValueError, FloatingPointError, ZeroDivisionError, OverflowError):
            continue
        if np.all(np.isfinite(result.x)) and np.max(np.abs(result.x)) <= bound:
            if np.max(np.abs(result.fun)) <= config.witness_tolerance:
                return {s.name: float(v) for s, v in zip(symbols, result.x)}
    return None


def hessian_report(
    spec: SystemSpec,
    samples: Optional[int] = None,
    seed: Optional[int] = None,
    config: Optional[EngineConfig] = None
) -> RegularityReport:
    """
    Classify the Lagrangian by the rank of its velocity Hessian.

    The rank is observed at seeded sample points. When it is constant there,
    the vanishing locus of the relevant minors is searched with a damped
    root finder; a real zero inside the sampling region means the rank drops
    on a hypersurface and the classification is VariableRank.

    Args:
        spec: Parsed model
        samples: Number of sample points (defaults to config.regularity_samples)
        seed: Root seed (defaults to config.seed)
        config: Engine configuration

    Returns:
        RegularityReport; VariableRank is reported, never raised
    """
    config = config or EngineConfig()
    samples = samples or config.regularity_samples
    seed = config.seed if seed is None else seed
    n = spec.n

    w = hessian(spec)
    det = simplify(w.det(method='berkowitz'))
    rng = make_rng(seed, spec.display_name, 'hessian')
    points = []
    profile = []
    attempts = 0
    while len(profile) < samples and attempts < samples * config.max_resample:
        attempts += 1
        values = _jet_sample(spec, rng, config.sample_radius)
        try:
            matrix = evaluate_matrix(w, values)
        except EvaluationDomainError:
            continue
        points.append(values)
        profile.append(numeric_rank(matrix, config.rank_tolerance))

    zero_config = ZeroTestConfig(trials=config.zero_trials, seed=seed, tolerance=config.zero_tolerance,
                                 radius=config.sample_radius, max_resample=config.max_resample)
    if len(set(profile)) > 1:
        kind, rank, witness = RegularityKind.VARIABLE_RANK, None, None
    else:
        rank = profile[0] if profile else 0
        witness = None
        if rank > 0 and n <= _SYMBOLIC_MINOR_MAX_N:
            minors = [det] if rank == n else _minors(sp.Matrix(w), rank)
            if not any(m.is_number for m in minors):
                witness = _search_rank_drop(spec, minors, points[:4], config)
        if witness is not None:
            kind, rank = RegularityKind.VARIABLE_RANK, None
        elif rank == n and not is_zero(det, config=zero_config):
            kind = RegularityKind.REGULAR
        else:
            kind = RegularityKind.CONSTANT_RANK_SINGULAR

    report = RegularityReport(
        hessian=w,
        determinant=det,
        rank_profile=tuple(profile),
        kind=kind,
        rank=rank,
        rank_drop_witness=witness,
    )
    logger.info("hessian_classified", model=spec.display_name, classification=report.label)
    return report


@dataclass(frozen=True)
class LegendreGraph:
    """
    The extended Legendre map Leg_L and the embedding Leg_L x_E id onto graph_L.

    Attributes:
        momentum_exprs: p_A = dL/dqd^A in (t, q, qd)
        tau_expr: tau = L - qd^A dL/dqd^A
    """
    spec: SystemSpec
    momentum_exprs: Tuple[sp.Expr, ...]
    tau_expr: sp.Expr

    @property
    def embedding_exprs(self) -> Dict[Coord, sp.Expr]:
        """Every mixed coordinate as an expression in the jet symbols."""
        mapping = {c: c.symbol for c in self.spec.jet_chart.coords}
        mapping[TAU] = self.tau_expr
        for a, p in enumerate(self.momentum_exprs, start=1):
            mapping[momentum(a)] = p
        return mapping

    def constraints(self) -> List[sp.Expr]:
        """Functions cutting out graph_L in M1: p_A - dL/dqd^A and tau - tau_expr."""
        out = [simplify(momentum(a).symbol - p) for a, p in enumerate(self.momentum_exprs, start=1)]
        out.append(simplify(TAU.symbol - self.tau_expr))
        return out

    def embed(
        self,
        jet_point: Mapping[Coord, float],
        params: Optional[Mapping[str, float]] = None
    ) -> Dict[Coord, float]:
        """Map a jet point (t, q, qd) to its image on graph_L."""
        params = dict(self.spec.params, **(params or {}))
        point = dict(jet_point)
        out = {c: float(point[c]) for c in self.spec.jet_chart.coords}
        out[TAU] = evaluate(self.tau_expr, point, params)
        for a, p in enumerate(self.momentum_exprs, start=1):
            out[momentum(a)] = evaluate(p, point, params)
        return out


def legendre_graph(spec: SystemSpec) -> LegendreGraph:
    n = spec.n
    momenta = tuple(simplify(diff(spec.lagrangian, velocity(a), n)) for a in range(1, n + 1))
    tau = simplify(spec.lagrangian - sum((velocity(a).symbol * momenta[a - 1] for a in range(1, n + 1)), sp.S.Zero))
    return LegendreGraph(spec=spec, momentum_exprs=momenta, tau_expr=tau)


def energy_function(spec: SystemSpec) -> sp.Expr:
    """E_L = qd^A dL/dqd^A - L."""
    n = spec.n
    L = spec.lagrangian
    return simplify(sum((velocity(a).symbol * diff(L, velocity(a), n) for a in range(1, n + 1)), sp.S.Zero) - L)


def hamiltonian_on_graph(spec: SystemSpec) -> sp.Expr:
    """H composed with the graph embedding; vanishes identically."""
    graph = legendre_graph(spec)
    replacements = {c.symbol: e for c, e in graph.embedding_exprs.items()}
    return simplify(build_hamiltonian(spec).h.xreplace(replacements))


@dataclass(frozen=True)
class DualLegendre:
    """
    leg_L = nu o Leg_L: (t, q, qd) -> (t, q, dL/dqd) into J1pi*.

    Attributes:
        momentum_exprs: p_A as expressions on J1pi
        jacobian: d(p_A)/d(qd^B), the Hessian block
    """
    spec: SystemSpec
    momentum_exprs: Tuple[sp.Expr, ...]
    jacobian: sp.ImmutableMatrix
    tolerance: float = 1e-9

    def locally_invertible_at(self, values: Mapping[sp.Symbol, float]) -> bool:
        """Inverse function theorem test at one jet point."""
        matrix = evaluate_matrix(self.jacobian, values)
        return numeric_rank(matrix, self.tolerance) == self.spec.n


def dual_legendre(spec: SystemSpec, config: Optional[EngineConfig] = None) -> DualLegendre:
    config = config or EngineConfig()
    graph = legendre_graph(spec)
    return DualLegendre(
        spec=spec,
        momentum_exprs=graph.momentum_exprs,
        jacobian=hessian(spec),
        tolerance=config.rank_tolerance,
    )

