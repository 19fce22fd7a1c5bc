"""
Coordinate exterior calculus.
Exterior derivative, wedge products, interior products and pullbacks on coefficient arrays.
"""

from typing import Mapping, Sequence

import sympy as sp

from ..models.coordinates import Chart, Coord
from ..models.forms import KForm, OneFormField, TwoFormField
from ..utils.symbolic import simplify


def exterior_derivative(form: OneFormField) -> TwoFormField:
    """
    d(sum_j a_j dx^j) = sum_{i<j} (d_i a_j - d_j a_i) dx^i wedge dx^j.

    Args:
        form: 1-form on any chart

    Returns:
        The 2-form d(form) with antisymmetric coefficient matrix
    """
    symbols = form.chart.symbols
    dim = form.chart.dim
    m = sp.zeros(dim, dim)
    for i in range(dim):
        for j in range(i + 1, dim):
            c = simplify(sp.diff(form.coeffs[j], symbols[i]) - sp.diff(form.coeffs[i], symbols[j]))
            m[i, j] = c
            m[j, i] = -c
    return TwoFormField(form.chart, sp.ImmutableMatrix(m))


def exterior_derivative_k(form: KForm) -> KForm:
    """Exterior derivative of a sparse k-form; d(f dx^I) = df wedge dx^I."""
    result = KForm(form.chart, form.degree + 1, {})
    for key, coeff in form.terms.items():
        leg = KForm(form.chart, form.degree, {key: sp.S.One})
        df = OneFormField.differential(form.chart, coeff).to_kform()
        result = _add(result, df.wedge(leg))
    return result


def _add(a: KForm, b: KForm) -> KForm:
    terms = dict(a.terms)
    for key, c in b.terms.items():
        terms[key] = simplify(terms.get(key, sp.S.Zero) + c)
    return KForm(a.chart, a.degree, {k: v for k, v in terms.items() if v != 0})


def wedge(a: KForm, b: KForm) -> KForm:
    return a.wedge(b)


def power(form: TwoFormField, k: int) -> KForm:
    """k-th exterior power of a 2-form as a sparse 2k-form."""
    return form.to_kform().power(k)


def interior_product(vector: Sequence[sp.Expr], form: TwoFormField) -> OneFormField:
    """
    i_v(form): the 1-form w -> form(v, w).

    Args:
        vector: Components in the chart order
        form: 2-form on the same chart
    """
    if len(vector) != form.chart.dim:
        raise ValueError(f"vector needs {form.chart.dim} components, got {len(vector)}")
    v = sp.Matrix([list(vector)])
    row = v * form.coeffs
    return OneFormField(form.chart, tuple(simplify(c) for c in row))


def coordinate_vector(chart: Chart, coord: Coord) -> tuple:
    """Components of the coordinate vector field d/d(coord)."""
    components = [sp.S.Zero] * chart.dim
    components[chart.index(coord)] = sp.S.One
    return tuple(components)


def map_jacobian(source: Chart, target: Chart, mapping: Mapping[Coord, sp.Expr]) -> sp.Matrix:
    """
    Jacobian of a coordinate map source -> target.

    Args:
        source: Chart of the domain
        target: Chart of the image
        mapping: Expression of every target coordinate in the source symbols

    Returns:
        target.dim x source.dim matrix
    """
    missing = [c.name for c in target.coords if c not in mapping]
    if missing:
        raise ValueError(f"map does not define target coordinate(s) {', '.join(missing)}")
    rows = [mapping[c] for c in target.coords]
    return sp.Matrix([[sp.diff(e, s) for s in source.symbols] for e in rows])


def pullback(form: TwoFormField, source: Chart, mapping: Mapping[Coord, sp.Expr]) -> TwoFormField:
    """
    Pull a 2-form back along a coordinate map.

    The pulled-back coefficients are J^T C(phi(x)) J, with C the target
    coefficients evaluated along the map and J its Jacobian.

    Args:
        form: 2-form on the target chart
        source: Chart of the domain
        mapping: Expression of every target coordinate in the source symbols

    Returns:
        The pulled-back 2-form on the source chart
    """
    target = form.chart
    jac = map_jacobian(source, target, mapping)
    along = form.coeffs.xreplace({c.symbol: mapping[c] for c in target.coords})
    pulled = (jac.T * along * jac).applyfunc(simplify)
    return TwoFormField(source, sp.ImmutableMatrix(pulled))


def pullback_one_form(form: OneFormField, source: Chart, mapping: Mapping[Coord, sp.Expr]) -> OneFormField:
    """Pull a 1-form back along a coordinate map (coefficients J^T a(phi(x)))."""
    target = form.chart
    jac = map_jacobian(source, target, mapping)
    along = sp.Matrix([list(form.coeffs)]).xreplace({c.symbol: mapping[c] for c in target.coords})
    pulled = along * jac
    return OneFormField(source, tuple(simplify(c) for c in pulled))
