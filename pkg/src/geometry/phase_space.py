"""
Canonical geometric objects on M1 = T*E x_E J1pi and on J1pi.
Builds omega, eta, the Hamiltonian, omega_H, the Poincare-Cartan forms and their pullbacks.
"""

from dataclasses import dataclass
from typing import Dict, Mapping, Optional, Tuple, Union

import numpy as np
import sympy as sp

from ..models.coordinates import TAU, TIME, Coord, momentum, position, velocity
from ..models.forms import OneFormField, TwoFormField
from ..models.system import SystemSpec
from ..utils.logging import get_logger
from ..utils.symbolic import bind, diff, simplify
from .exterior import exterior_derivative, pullback

logger = get_logger(__name__)

DEFAULT_RANK_TOLERANCE = 1e-9


@dataclass(frozen=True)
class HamiltonianFn:
    """
    H = p_A qd^A + tau - L on M1, with cached partials.

    Attributes:
        h: The Hamiltonian expression
        dh_dqd: dH/dqd^A for A = 1..n
        dh_dtau: dH/dtau (structurally 1)
    """
    h: sp.Expr
    dh_dqd: Tuple[sp.Expr, ...]
    dh_dtau: sp.Expr


def build_eta(spec: SystemSpec) -> OneFormField:
    """eta = (pi o pr)^* dt."""
    return OneFormField.basis(spec.mixed_chart, TIME)


def build_jet_eta(spec: SystemSpec) -> OneFormField:
    return OneFormField.basis(spec.jet_chart, TIME)


def build_omega(spec: SystemSpec) -> TwoFormField:
    """omega = pr1^* omega_E with omega_E = dq^A wedge dp_A + dt wedge dtau."""
    entries = {(position(a), momentum(a)): sp.S.One for a in range(1, spec.n + 1)}
    entries[(TIME, TAU)] = sp.S.One
    return TwoFormField.from_entries(spec.mixed_chart, entries)


def build_hamiltonian(spec: SystemSpec) -> HamiltonianFn:
    n = spec.n
    h = sum((momentum(a).symbol * velocity(a).symbol for a in range(1, n + 1)), sp.S.Zero)
    h = simplify(h + TAU.symbol - spec.lagrangian)
    return HamiltonianFn(
        h=h,
        dh_dqd=tuple(simplify(diff(h, velocity(a), n)) for a in range(1, n + 1)),
        dh_dtau=simplify(diff(h, TAU, n)),
    )


def build_omega_H(spec: SystemSpec) -> TwoFormField:
    """
    omega_H = omega + dH wedge eta.

    The dtau wedge dt term of dH wedge dt cancels the dt wedge dtau leg of
    omega, so d/dtau lies in the kernel.
    """
    chart = spec.mixed_chart
    h = build_hamiltonian(spec).h
    dh = OneFormField.differential(chart, h)
    entries: Dict[Tuple[Coord, Coord], sp.Expr] = {}
    for coord, coeff in zip(chart.coords, dh.coeffs):
        if coord != TIME and coeff != 0:
            entries[(coord, TIME)] = coeff
    return (build_omega(spec) + TwoFormField.from_entries(chart, entries)).simplified()


def build_poincare_cartan(spec: SystemSpec) -> Tuple[OneFormField, TwoFormField]:
    """
    Theta_L = (L - qd^A dL/dqd^A) dt + (dL/dqd^A) dq^A and omega_L = -d Theta_L on J1pi.

    Returns:
        (Theta_L, omega_L)
    """
    chart = spec.jet_chart
    n = spec.n
    L = spec.lagrangian
    momenta = [diff(L, velocity(a), n) for a in range(1, n + 1)]
    coeffs = {TIME: simplify(L - sum((velocity(a).symbol * momenta[a - 1] for a in range(1, n + 1)), sp.S.Zero))}
    for a in range(1, n + 1):
        coeffs[position(a)] = simplify(momenta[a - 1])
    theta = OneFormField(chart, tuple(coeffs.get(c, sp.S.Zero) for c in chart.coords))
    omega_L = exterior_derivative(theta).scale(sp.S.NegativeOne).simplified()
    return theta, omega_L


def projection_pr2(spec: SystemSpec) -> Dict[Coord, sp.Expr]:
    """pr2: M1 -> J1pi, written as jet coordinates in mixed symbols."""
    return {c: c.symbol for c in spec.jet_chart.coords}


def legendre_retraction(spec: SystemSpec) -> Dict[Coord, sp.Expr]:
    """M1 -> M_L, (t, q, tau, p, qd) -> (t, q, tau, dL/dqd, qd)."""
    mapping = {c: c.symbol for c in spec.mixed_chart.coords}
    for a in range(1, spec.n + 1):
        mapping[momentum(a)] = simplify(diff(spec.lagrangian, velocity(a), spec.n))
    return mapping


def pullback_omega_L(spec: SystemSpec) -> TwoFormField:
    """pr2^* omega_L on M1 (tau and p rows vanish)."""
    _, omega_L = build_poincare_cartan(spec)
    return pullback(omega_L, spec.mixed_chart, projection_pr2(spec))


def restrict_omega_H(spec: SystemSpec) -> TwoFormField:
    """omega_H pulled back along the retraction onto M_L (p -> dL/dqd, dp -> d(dL/dqd))."""
    return pullback(build_omega_H(spec), spec.mixed_chart, legendre_retraction(spec))


def numeric_rank(matrix: np.ndarray, tolerance: float = DEFAULT_RANK_TOLERANCE) -> int:
    """Rank by singular-value thresholding relative to the largest singular value."""
    if matrix.size == 0:
        return 0
    singular_values = np.linalg.svd(matrix, compute_uv=False)
    top = singular_values[0] if singular_values.size else 0.0
    if top == 0.0:
        return 0
    return int(np.sum(singular_values > tolerance * top))


def rank_at(
    form: TwoFormField,
    point: Mapping[Union[Coord, sp.Symbol, str], float],
    params: Optional[Mapping[str, float]] = None,
    tolerance: float = DEFAULT_RANK_TOLERANCE
) -> int:
    """
    Rank of the evaluated antisymmetric coefficient matrix.

    Args:
        form: 2-form
        point: Coordinate values
        params: Parameter values by name
        tolerance: Relative singular value cut-off

    Returns:
        Even integer rank
    """
    matrix = form.evaluate(bind(point, params))
    rank = numeric_rank(matrix, tolerance)
    if rank % 2:
        logger.warning("odd_rank_observed", rank=rank, chart=form.chart.label)
    return rank


def rank_off_time(
    form: TwoFormField,
    values: Mapping[sp.Symbol, float],
    tolerance: float = DEFAULT_RANK_TOLERANCE
) -> int:
    """Rank of the form restricted to ker dt (time row and column dropped)."""
    matrix = form.evaluate(values)
    i = form.chart.index(TIME)
    keep = [k for k in range(form.chart.dim) if k != i]
    return numeric_rank(matrix[np.ix_(keep, keep)], tolerance)
