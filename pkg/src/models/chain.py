"""
Constraint chain models.
Constraint levels M1 > M2 > ..., their solved-form substitutions, witness points and termination status.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Tuple

import sympy as sp

from ..utils.symbolic import ZeroTestConfig, is_zero, render, simplify, vanishes_at
from .coordinates import Chart


class ChainStatusKind(str, Enum):
    """Termination status of the constraint algorithm."""
    STABILIZED = "Stabilized"
    EMPTY_FINAL = "EmptyFinal"
    MAX_ITERATIONS_EXCEEDED = "MaxIterationsExceeded"


@dataclass(frozen=True)
class ChainStatus:
    """
    Status with the final level index where it applies.

    Stabilized(k) means level k is final: level k+1 would add nothing.
    """
    kind: ChainStatusKind
    level: int

    @property
    def stabilized(self) -> bool:
        return self.kind is ChainStatusKind.STABILIZED

    def __str__(self) -> str:
        if self.stabilized:
            return f"Stabilized({self.level})"
        return self.kind.value


@dataclass(frozen=True)
class ConstraintLevel:
    """
    One level P_l of the chain.

    Attributes:
        level: Index l >= 1; level 1 is the whole space
        constraints: Constraints introduced at this level
        cumulative: All constraints of levels 1..l
        solved: Solved-form substitutions symbol -> expression, fully reduced
        unsolved: Cumulative constraints with no solved form, after substitution
        witness_points: Seeded points on the level (coordinates and parameters)
    """
    level: int
    chart: Chart
    constraints: Tuple[sp.Expr, ...] = ()
    cumulative: Tuple[sp.Expr, ...] = ()
    solved: Dict[sp.Symbol, sp.Expr] = field(default_factory=dict)
    unsolved: Tuple[sp.Expr, ...] = ()
    witness_points: Tuple[Dict[sp.Symbol, float], ...] = ()

    def reduce(self, e: sp.Expr) -> sp.Expr:
        """Substitute the solved-form constraints of this level."""
        e = sp.sympify(e)
        if not self.solved:
            return simplify(e)
        return simplify(e.xreplace(self.solved))

    def vanishes(self, e: sp.Expr, zero_config: Optional[ZeroTestConfig] = None) -> bool:
        """
        Decide whether e vanishes on the level.

        With only solved-form constraints this is a zero test of the reduced
        expression. Otherwise it is checked at the witness points.
        """
        reduced = self.reduce(e)
        if reduced == 0:
            return True
        if not self.unsolved:
            return is_zero(reduced, config=zero_config) if zero_config else is_zero(reduced)
        if not self.witness_points:
            return False
        return all(vanishes_at(reduced, self.witness_points))

    def rendered(self) -> List[str]:
        return [render(c) for c in self.constraints]


@dataclass(frozen=True)
class FreeDirections:
    """
    Description of ker(omega) cap ker(eta) cap T(final level).

    Attributes:
        components: Coordinate names whose vector-field component stays undetermined
        kernel_dimensions: Numeric kernel dimension at each witness point
        basis: Numeric kernel basis at the first witness point, keyed by coordinate name
    """
    components: Tuple[str, ...] = ()
    kernel_dimensions: Tuple[int, ...] = ()
    basis: Tuple[Dict[str, float], ...] = ()


@dataclass(frozen=True)
class ConstraintChain:
    """
    Ordered constraint levels with their termination status.

    Attributes:
        label: "mixed" for M1 or "jet" for J1pi
        levels: Levels 1..f
        status: Termination status
        free_directions: Kernel description on the final level
        solution: General solution of the final level, one component per chart coordinate
        free_parameters: Symbols of the undetermined components in `solution`
        sode_residuals: X_q - qd of the general solution (jet chain only)
    """
    label: str
    chart: Chart
    levels: Tuple[ConstraintLevel, ...]
    status: ChainStatus
    free_directions: FreeDirections = field(default_factory=FreeDirections)
    solution: Tuple[sp.Expr, ...] = ()
    free_parameters: Tuple[sp.Symbol, ...] = ()
    sode_residuals: Tuple[sp.Expr, ...] = ()

    @property
    def final(self) -> ConstraintLevel:
        return self.levels[-1]

    def level(self, index: int) -> ConstraintLevel:
        """Level by 1-based index, clamped to the final level."""
        return self.levels[min(index, len(self.levels)) - 1]

    def constraint_sets(self) -> List[List[str]]:
        return [level.rendered() for level in self.levels]

    def summary(self) -> str:
        return f"{self.status}; levels {len(self.levels)}"

