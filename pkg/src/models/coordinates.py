"""
Coordinate models for the jet space J1pi and the mixed space T*E x_E J1pi.
Defines coordinate kinds, their symbols and the fixed coordinate order shared by every module.
"""

from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Dict, List, Optional, Tuple

import sympy as sp

from ..utils.errors import UnknownCoordinateError


class CoordKind(Enum):
    """Kinds of natural bundle coordinates."""
    TIME = "t"
    POSITION = "q"
    TAU = "tau"
    MOMENTUM = "p"
    VELOCITY = "qd"

    @property
    def indexed(self) -> bool:
        return self in (CoordKind.POSITION, CoordKind.MOMENTUM, CoordKind.VELOCITY)


@dataclass(frozen=True)
class Coord:
    """
    A natural bundle coordinate.

    Attributes:
        kind: Coordinate kind
        index: Fibre index A in 1..n for indexed kinds, None for t and tau
    """
    kind: CoordKind
    index: Optional[int] = None

    def __post_init__(self):
        if self.kind.indexed and (self.index is None or self.index < 1):
            raise UnknownCoordinateError(f"{self.kind.value} coordinate needs an index >= 1")
        if not self.kind.indexed and self.index is not None:
            raise UnknownCoordinateError(f"{self.kind.value} carries no index")

    @property
    def name(self) -> str:
        """DSL name: t, q1, qd1, tau, p1."""
        return self.kind.value if self.index is None else f"{self.kind.value}{self.index}"

    @property
    def symbol(self) -> sp.Symbol:
        return coordinate_symbol(self.name)

    def __str__(self) -> str:
        return self.name


def coordinate_symbol(name: str) -> sp.Symbol:
    """Symbol used for coordinates and parameters; all are real."""
    return sp.Symbol(name, real=True)


def free_parameter_symbol(index: int) -> sp.Symbol:
    """Named free parameter u<index> of a non-unique vector field."""
    return sp.Symbol(f"u{index}", real=True)


TIME = Coord(CoordKind.TIME)
TAU = Coord(CoordKind.TAU)


def position(index: int) -> Coord:
    return Coord(CoordKind.POSITION, index)


def velocity(index: int) -> Coord:
    return Coord(CoordKind.VELOCITY, index)


def momentum(index: int) -> Coord:
    return Coord(CoordKind.MOMENTUM, index)


@dataclass(frozen=True)
class Chart:
    """
    Ordered natural coordinates of a space with fibre dimension n.

    The mixed space uses (t, q1..qn, tau, p1..pn, qd1..qdn) and the jet space
    (t, q1..qn, qd1..qdn). Every coefficient array in the engine is indexed in
    this order.
    """
    n: int
    coords: Tuple[Coord, ...]
    label: str

    @classmethod
    def mixed(cls, n: int) -> 'Chart':
        """Chart of M1 = T*E x_E J1pi (3n+2 coordinates)."""
        coords = (
            [TIME]
            + [position(a) for a in range(1, n + 1)]
            + [TAU]
            + [momentum(a) for a in range(1, n + 1)]
            + [velocity(a) for a in range(1, n + 1)]
        )
        return cls(n=n, coords=tuple(coords), label="mixed")

    @classmethod
    def jet(cls, n: int) -> 'Chart':
        """Chart of J1pi (2n+1 coordinates)."""
        coords = (
            [TIME]
            + [position(a) for a in range(1, n + 1)]
            + [velocity(a) for a in range(1, n + 1)]
        )
        return cls(n=n, coords=tuple(coords), label="jet")

    @classmethod
    def dual(cls, n: int) -> 'Chart':
        """Chart of J1pi* x_E J1pi, coordinates (t, q, p, qd)."""
        coords = (
            [TIME]
            + [position(a) for a in range(1, n + 1)]
            + [momentum(a) for a in range(1, n + 1)]
            + [velocity(a) for a in range(1, n + 1)]
        )
        return cls(n=n, coords=tuple(coords), label="dual")

    @property
    def dim(self) -> int:
        return len(self.coords)

    @cached_property
    def symbols(self) -> List[sp.Symbol]:
        return [c.symbol for c in self.coords]

    @cached_property
    def _positions(self) -> Dict[Coord, int]:
        return {c: i for i, c in enumerate(self.coords)}

    def index(self, coord: Coord) -> int:
        """Position of a coordinate in the fixed order."""
        try:
            return self._positions[coord]
        except KeyError:
            raise UnknownCoordinateError(f"coordinate {coord} is not part of the {self.label} chart (n={self.n})")

    def names(self) -> List[str]:
        return [c.name for c in self.coords]

    def of_kind(self, kind: CoordKind) -> List[Coord]:
        return [c for c in self.coords if c.kind is kind]

    def check(self, coord: Coord) -> Coord:
        """Reject coordinates whose index exceeds n."""
        if coord.index is not None and coord.index > self.n:
            raise UnknownCoordinateError(f"coordinate {coord} exceeds fibre dimension n={self.n}")
        self.index(coord)
        return coord
