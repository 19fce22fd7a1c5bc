"""
Differential form models.
Coefficient representations of 1-forms, 2-forms and general k-forms over a fixed chart.
"""

from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Tuple

import numpy as np
import sympy as sp

from ..utils.symbolic import evaluate_matrix, simplify
from .coordinates import Chart, Coord


@dataclass(frozen=True)
class OneFormField:
    """
    A 1-form sum_i coeffs[i] dx^i in the chart's fixed coordinate order.

    Attributes:
        chart: Coordinate chart
        coeffs: One expression per chart coordinate
    """
    chart: Chart
    coeffs: Tuple[sp.Expr, ...]

    def __post_init__(self):
        if len(self.coeffs) != self.chart.dim:
            raise ValueError(
                f"1-form on the {self.chart.label} chart needs {self.chart.dim} coefficients, got {len(self.coeffs)}"
            )

    @classmethod
    def zero(cls, chart: Chart) -> 'OneFormField':
        return cls(chart, tuple(sp.S.Zero for _ in range(chart.dim)))

    @classmethod
    def basis(cls, chart: Chart, coord: Coord) -> 'OneFormField':
        """The coordinate differential d(coord)."""
        coeffs = [sp.S.Zero] * chart.dim
        coeffs[chart.index(coord)] = sp.S.One
        return cls(chart, tuple(coeffs))

    @classmethod
    def differential(cls, chart: Chart, f: sp.Expr) -> 'OneFormField':
        """df = sum_i (df/dx^i) dx^i."""
        return cls(chart, tuple(sp.diff(f, s) for s in chart.symbols))

    def __getitem__(self, coord: Coord) -> sp.Expr:
        return self.coeffs[self.chart.index(coord)]

    def __add__(self, other: 'OneFormField') -> 'OneFormField':
        return OneFormField(self.chart, tuple(a + b for a, b in zip(self.coeffs, other.coeffs)))

    def scale(self, factor: sp.Expr) -> 'OneFormField':
        return OneFormField(self.chart, tuple(factor * c for c in self.coeffs))

    def simplified(self) -> 'OneFormField':
        return OneFormField(self.chart, tuple(simplify(c) for c in self.coeffs))

    def apply(self, vector: Iterable[sp.Expr]) -> sp.Expr:
        """Contraction with a vector given by its components."""
        return simplify(sum((c * v for c, v in zip(self.coeffs, vector)), sp.S.Zero))

    def evaluate(self, values: Mapping[sp.Symbol, float]) -> np.ndarray:
        return evaluate_matrix(sp.Matrix([list(self.coeffs)]), values)[0]

    def to_kform(self) -> 'KForm':
        return KForm(self.chart, 1, {(i,): c for i, c in enumerate(self.coeffs) if c != 0})


@dataclass(frozen=True)
class TwoFormField:
    """
    A 2-form as an antisymmetric coefficient matrix.

    coeffs[i, j] is the coefficient paired with (dx^i wedge dx^j) so that
    (da wedge db)[a, b] = +1 and [b, a] = -1. The form acts on vectors as
    form(u, v) = u^T C v.
    """
    chart: Chart
    coeffs: sp.ImmutableMatrix

    def __post_init__(self):
        if self.coeffs.shape != (self.chart.dim, self.chart.dim):
            raise ValueError(
                f"2-form on the {self.chart.label} chart needs a {self.chart.dim}x{self.chart.dim} matrix"
            )

    @classmethod
    def zero(cls, chart: Chart) -> 'TwoFormField':
        return cls(chart, sp.ImmutableMatrix.zeros(chart.dim, chart.dim))

    @classmethod
    def from_entries(cls, chart: Chart, entries: Mapping[Tuple[Coord, Coord], sp.Expr]) -> 'TwoFormField':
        """Build from upper entries {(a, b): c} meaning c da wedge db."""
        m = sp.zeros(chart.dim, chart.dim)
        for (a, b), c in entries.items():
            i, j = chart.index(a), chart.index(b)
            m[i, j] += c
            m[j, i] -= c
        return cls(chart, sp.ImmutableMatrix(m))

    def __getitem__(self, key: Tuple[Coord, Coord]) -> sp.Expr:
        a, b = key
        return self.coeffs[self.chart.index(a), self.chart.index(b)]

    def __add__(self, other: 'TwoFormField') -> 'TwoFormField':
        return TwoFormField(self.chart, sp.ImmutableMatrix(self.coeffs + other.coeffs))

    def __sub__(self, other: 'TwoFormField') -> 'TwoFormField':
        return TwoFormField(self.chart, sp.ImmutableMatrix(self.coeffs - other.coeffs))

    def scale(self, factor: sp.Expr) -> 'TwoFormField':
        return TwoFormField(self.chart, sp.ImmutableMatrix(self.coeffs * factor))

    def simplified(self) -> 'TwoFormField':
        return TwoFormField(self.chart, sp.ImmutableMatrix(self.coeffs.applyfunc(simplify)))

    def substitute(self, replacements: Mapping[sp.Symbol, sp.Expr]) -> 'TwoFormField':
        """Coefficient-wise substitution (the legs are left untouched)."""
        if not replacements:
            return self
        return TwoFormField(self.chart, sp.ImmutableMatrix(self.coeffs.xreplace(dict(replacements))))

    def nonzero_entries(self) -> Dict[Tuple[str, str], sp.Expr]:
        """Upper-triangular nonzero coefficients keyed by coordinate names."""
        names = self.chart.names()
        out = {}
        for i in range(self.chart.dim):
            for j in range(i + 1, self.chart.dim):
                c = simplify(self.coeffs[i, j])
                if c != 0:
                    out[(names[i], names[j])] = c
        return out

    def antisymmetry_defects(self) -> List[sp.Expr]:
        """Entries of C + C^T; all vanish for a well-formed 2-form."""
        sym = self.coeffs + self.coeffs.T
        return [simplify(sym[i, j]) for i in range(self.chart.dim) for j in range(i, self.chart.dim)]

    def evaluate(self, values: Mapping[sp.Symbol, float]) -> np.ndarray:
        return evaluate_matrix(self.coeffs, values)

    def to_kform(self) -> 'KForm':
        terms = {}
        for i in range(self.chart.dim):
            for j in range(i + 1, self.chart.dim):
                c = self.coeffs[i, j]
                if c != 0:
                    terms[(i, j)] = c
        return KForm(self.chart, 2, terms)


def permutation_sign(indices: Tuple[int, ...]) -> int:
    """Sign of the permutation sorting `indices`; 0 when an index repeats."""
    if len(set(indices)) != len(indices):
        return 0
    sign = 1
    seq = list(indices)
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                sign = -sign
    return sign


@dataclass(frozen=True)
class KForm:
    """
    Sparse k-form: {strictly increasing index tuple: coefficient}.

    Used for wedge products and powers where full antisymmetric tensors would
    be wasteful.
    """
    chart: Chart
    degree: int
    terms: Dict[Tuple[int, ...], sp.Expr] = field(default_factory=dict)

    @classmethod
    def scalar(cls, chart: Chart, value: sp.Expr = sp.S.One) -> 'KForm':
        return cls(chart, 0, {(): value})

    def wedge(self, other: 'KForm') -> 'KForm':
        """Exterior product; coefficients expanded and zeros dropped."""
        out: Dict[Tuple[int, ...], sp.Expr] = {}
        for left, a in self.terms.items():
            for right, b in other.terms.items():
                joined = left + right
                sign = permutation_sign(joined)
                if sign == 0:
                    continue
                key = tuple(sorted(joined))
                out[key] = out.get(key, sp.S.Zero) + sign * a * b
        cleaned = {k: v for k, v in ((k, simplify(v)) for k, v in out.items()) if v != 0}
        return KForm(self.chart, self.degree + other.degree, cleaned)

    def power(self, k: int) -> 'KForm':
        """k-th exterior power (k = 0 gives the unit 0-form)."""
        result = KForm.scalar(self.chart)
        for _ in range(k):
            result = result.wedge(self)
            if not result.terms:
                break
        return result

    def is_structurally_zero(self) -> bool:
        return not self.terms

    def coefficients(self) -> List[sp.Expr]:
        return list(self.terms.values())

    def labelled_terms(self) -> Dict[str, sp.Expr]:
        names = self.chart.names()
        return {"^".join(names[i] for i in key) or "1": c for key, c in self.terms.items()}

    def component(self, *coords: Coord) -> sp.Expr:
        """Coefficient of d(coords[0]) wedge ... wedge d(coords[-1])."""
        idx = tuple(self.chart.index(c) for c in coords)
        sign = permutation_sign(idx)
        if sign == 0:
            return sp.S.Zero
        return sign * self.terms.get(tuple(sorted(idx)), sp.S.Zero)

