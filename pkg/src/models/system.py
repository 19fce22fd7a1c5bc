"""
System models.
Defines the validated problem definition produced by the model parser.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import sympy as sp

from .coordinates import Chart, Coord, CoordKind, coordinate_symbol


@dataclass(frozen=True)
class InitialCondition:
    """
    Labeled initial point (t0, q0, qd0) on the jet space.

    Attributes:
        label: Name used to select the condition from the command line
        t: Initial time
        q: Positions q1..qn
        qd: Velocities qd1..qdn
    """
    label: str
    t: float
    q: Tuple[float, ...]
    qd: Tuple[float, ...]

    def as_point(self) -> Dict[Coord, float]:
        from .coordinates import TIME, position, velocity
        point = {TIME: self.t}
        point.update({position(a + 1): v for a, v in enumerate(self.q)})
        point.update({velocity(a + 1): v for a, v in enumerate(self.qd)})
        return point


@dataclass(frozen=True)
class SystemSpec:
    """
    Parsed problem definition.

    Attributes:
        n: Fibre dimension
        lagrangian: L(t, q, qd) with parameters left symbolic
        params: Parameter name to default value, in declaration order
        initial_conditions: Optional labeled initial points
        name: Free-form model name
        description: Free-form description
    """
    n: int
    lagrangian: sp.Expr
    params: Dict[str, float] = field(default_factory=dict)
    initial_conditions: Tuple[InitialCondition, ...] = ()
    name: Optional[str] = None
    description: Optional[str] = None

    @property
    def mixed_chart(self) -> Chart:
        return Chart.mixed(self.n)

    @property
    def jet_chart(self) -> Chart:
        return Chart.jet(self.n)

    @property
    def param_symbols(self) -> List[sp.Symbol]:
        return [coordinate_symbol(name) for name in self.params]

    def param_values(self, overrides: Optional[Dict[str, float]] = None) -> Dict[sp.Symbol, float]:
        """Parameter values keyed by symbol, defaults updated with overrides."""
        values = dict(self.params)
        values.update(overrides or {})
        return {coordinate_symbol(k): float(v) for k, v in values.items()}

    def is_autonomous(self) -> bool:
        return coordinate_symbol(CoordKind.TIME.value) not in self.lagrangian.free_symbols

    def initial_condition(self, label: Optional[str] = None) -> Optional[InitialCondition]:
        """Return the labeled initial condition, or the first one when no label is given."""
        if not self.initial_conditions:
            return None
        if label is None:
            return self.initial_conditions[0]
        for ic in self.initial_conditions:
            if ic.label == label:
                return ic
        return None

    @property
    def display_name(self) -> str:
        return self.name or "model"
