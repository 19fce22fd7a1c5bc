"""
Vector field models.
Solved vector fields on a chart with their free parameters and the constraint level they live on.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Mapping, Optional, Tuple

import sympy as sp

from ..utils.symbolic import render, simplify
from .chain import ConstraintLevel
from .coordinates import Chart, Coord


class FieldMode(str, Enum):
    """How the vector field was obtained."""
    RAW = "raw"
    GRAPH_REFINED = "graph_refined"
    JET = "jet"
    DUAL = "dual"


@dataclass(frozen=True)
class VectorFieldSpec:
    """
    A vector field given by one expression per chart coordinate.

    Attributes:
        chart: Coordinates the components refer to
        components: Z^i in chart order
        free_params: Symbols left undetermined (u1, u2, ...)
        domain: Constraint level the field is defined on and tangent to
        mode: Construction mode
        extra_constraints: Constraints imposed on top of the domain level (tau graph in graph_refined mode)
        bindings: Values substituted for former free parameters
    """
    chart: Chart
    components: Tuple[sp.Expr, ...]
    free_params: Tuple[sp.Symbol, ...] = ()
    domain: Optional[ConstraintLevel] = None
    mode: FieldMode = FieldMode.RAW
    extra_constraints: Tuple[sp.Expr, ...] = ()
    bindings: Dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if len(self.components) != self.chart.dim:
            raise ValueError(f"{self.chart.label} vector field needs {self.chart.dim} components, got {len(self.components)}")

    @property
    def unique(self) -> bool:
        return not self.free_params

    @property
    def constraints(self) -> Tuple[sp.Expr, ...]:
        """Every function required to vanish on the domain."""
        cumulative = self.domain.cumulative if self.domain else ()
        return tuple(cumulative) + tuple(self.extra_constraints)

    def component(self, coord: Coord) -> sp.Expr:
        return self.components[self.chart.index(coord)]

    def apply(self, f: sp.Expr) -> sp.Expr:
        """Directional derivative Z(f)."""
        f = sp.sympify(f)
        return simplify(sum(
            (c * sp.diff(f, s) for c, s in zip(self.components, self.chart.symbols) if c != 0),
            sp.S.Zero,
        ))

    def reduce(self, e: sp.Expr) -> sp.Expr:
        """Substitute the solved-form constraints of the domain."""
        return self.domain.reduce(e) if self.domain else simplify(e)

    def bind(self, values: Mapping[str, float]) -> 'VectorFieldSpec':
        """
        Substitute constant values for free parameters.

        Names that are not free parameters of this field are ignored; the
        caller decides whether to warn about them.
        """
        by_name = {s.name: s for s in self.free_params}
        replacements = {by_name[k]: sp.Float(v) for k, v in values.items() if k in by_name}
        if not replacements:
            return self
        bound = dict(self.bindings)
        bound.update({s.name: float(v) for s, v in replacements.items()})
        return VectorFieldSpec(
            chart=self.chart,
            components=tuple(simplify(c.xreplace(replacements)) for c in self.components),
            free_params=tuple(s for s in self.free_params if s not in replacements),
            domain=self.domain,
            mode=self.mode,
            extra_constraints=self.extra_constraints,
            bindings=bound,
        )

    def unknown_bindings(self, values: Mapping[str, float]) -> List[str]:
        names = {s.name for s in self.free_params} | set(self.bindings)
        return sorted(k for k in values if k not in names)

    def rendered(self) -> Dict[str, str]:
        return {c.name: render(e) for c, e in zip(self.chart.coords, self.components)}

    def describe(self) -> str:
        """Render as a sum of coordinate vectors, Z = d/dt + qd1 d/dq1 + ..."""
        terms = []
        for coord, e in zip(self.chart.coords, self.components):
            if e == 0:
                continue
            leg = f"d/d{coord.name}"
            terms.append(leg if e == 1 else f"({render(e)}) {leg}")
        return " + ".join(terms) if terms else "0"
