"""
Symbolic core.
Exact partial differentiation, conservative simplification, numeric evaluation and a
probabilistic zero test over sympy expressions in the phase-space coordinates.
"""

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import sympy as sp

from ..models.coordinates import Coord, coordinate_symbol
from .errors import EvaluationDomainError, UnboundSymbolError, UnknownCoordinateError
from .logging import get_logger
from .sampling import make_rng, sample_point

logger = get_logger(__name__)

Expr = sp.Expr
PointLike = Mapping[Union[Coord, sp.Symbol, str], float]

_DOMAIN_ERRORS = (ValueError, ZeroDivisionError, OverflowError, TypeError)


@dataclass(frozen=True)
class ZeroTestConfig:
    """Configuration for the probabilistic zero test."""
    trials: int = 16
    seed: int = 42
    tolerance: float = 1e-9
    radius: float = 2.0
    max_resample: int = 10


def simplify(e: Expr) -> Expr:
    """
    Conservative simplification: flatten, fold constants, expand products and cancel identical terms.

    No factoring and no trigonometric rewriting; idempotent.
    """
    return sp.expand(sp.sympify(e))


def diff(e: Expr, coord: Coord, n: Optional[int] = None) -> Expr:
    """
    Exact partial derivative treating every coordinate as an independent symbol.

    Args:
        e: Expression over the coordinate alphabet
        coord: Coordinate to differentiate by
        n: Declared fibre dimension, used to reject out-of-range indices

    Returns:
        The partial derivative
    """
    if n is not None and coord.index is not None and coord.index > n:
        raise UnknownCoordinateError(f"coordinate {coord} exceeds fibre dimension n={n}")
    return sp.diff(e, coord.symbol)


def _symbol_key(key: Union[Coord, sp.Symbol, str]) -> sp.Symbol:
    if isinstance(key, Coord):
        return key.symbol
    if isinstance(key, sp.Symbol):
        return key
    return coordinate_symbol(str(key))


def bind(point: PointLike, params: Optional[Mapping[str, float]] = None) -> Dict[sp.Symbol, float]:
    """Merge a coordinate point and parameter values into one symbol map."""
    bound = {_symbol_key(k): float(v) for k, v in point.items()}
    for name, value in (params or {}).items():
        bound[coordinate_symbol(name)] = float(value)
    return bound


def ordered_symbols(e: Expr) -> Tuple[sp.Symbol, ...]:
    return tuple(sorted(e.free_symbols, key=lambda s: s.name))


@lru_cache(maxsize=4096)
def compile_expr(e: Expr, symbols: Tuple[sp.Symbol, ...]) -> Callable[..., float]:
    """Lambdify an expression against an ordered symbol tuple (cached)."""
    return sp.lambdify(symbols, e, modules='math')


@lru_cache(maxsize=1024)
def compile_many(exprs: Tuple[Expr, ...], symbols: Tuple[sp.Symbol, ...]) -> Callable[..., list]:
    """Lambdify a tuple of expressions into one function returning a list."""
    return sp.lambdify(symbols, list(exprs), modules='math')


def _locate_domain_error(e: Expr, values: Dict[sp.Symbol, float]) -> Expr:
    """Return the innermost subexpression whose evaluation leaves the real domain."""
    for arg in e.args:
        if isinstance(arg, sp.Expr) and arg.free_symbols:
            culprit = _locate_domain_error(arg, values)
            if culprit is not None:
                return culprit
    symbols = ordered_symbols(e)
    try:
        value = compile_expr(e, symbols)(*[values[s] for s in symbols])
        if isinstance(value, complex) or not math.isfinite(value):
            return e
    except _DOMAIN_ERRORS:
        return e
    return None


def _checked_value(value, e: Expr, values: Dict[sp.Symbol, float]) -> float:
    if isinstance(value, complex) or not math.isfinite(value):
        culprit = _locate_domain_error(e, values)
        raise EvaluationDomainError("non-real or non-finite value", str(culprit if culprit is not None else e))
    return float(value)


def evaluate(
    e: Expr,
    point: PointLike,
    params: Optional[Mapping[str, float]] = None
) -> float:
    """
    Floating evaluation of an expression at a point.

    Args:
        e: Expression
        point: Coordinate (or symbol) values
        params: Parameter values by name

    Returns:
        The real value

    Raises:
        UnboundSymbolError: A free symbol has no value
        EvaluationDomainError: Evaluation left the real domain; names the offending subexpression
    """
    e = sp.sympify(e)
    values = bind(point, params)
    missing = [s.name for s in ordered_symbols(e) if s not in values]
    if missing:
        raise UnboundSymbolError(f"unbound symbol(s) {', '.join(missing)} in '{e}'")
    symbols = ordered_symbols(e)
    if not symbols:
        constant = complex(sp.N(e))
        if constant.imag != 0.0:
            raise EvaluationDomainError("non-real value", str(e))
        return _checked_value(constant.real, e, values)
    try:
        value = compile_expr(e, symbols)(*[values[s] for s in symbols])
    except _DOMAIN_ERRORS as exc:
        culprit = _locate_domain_error(e, values)
        raise EvaluationDomainError(str(exc), str(culprit if culprit is not None else e))
    return _checked_value(value, e, values)


def residual(e: Expr, values: Mapping[sp.Symbol, float]) -> Tuple[float, float]:
    """
    Evaluate an expression together with its term scale.

    The scale is the sum of absolute values of the top-level terms, so that a
    cancellation such as sin(t)^2 + cos(t)^2 - 1 is judged relative to the size
    of its parts.

    Returns:
        (value, scale); raises the standard evaluation errors
    """
    terms = tuple(e.args) if isinstance(e, sp.Add) else (e,)
    symbols = ordered_symbols(e)
    try:
        parts = compile_many(terms, symbols)(*[values[s] for s in symbols])
    except KeyError as exc:
        raise UnboundSymbolError(f"unbound symbol {exc.args[0]} in '{e}'")
    except _DOMAIN_ERRORS as exc:
        culprit = _locate_domain_error(e, dict(values))
        raise EvaluationDomainError(str(exc), str(culprit if culprit is not None else e))
    if any(isinstance(p, complex) or not math.isfinite(p) for p in parts):
        culprit = _locate_domain_error(e, dict(values))
        raise EvaluationDomainError("non-real or non-finite value", str(culprit if culprit is not None else e))
    return float(sum(parts)), float(sum(abs(p) for p in parts))


def is_zero(
    e: Expr,
    trials: int = 16,
    seed: int = 42,
    config: Optional[ZeroTestConfig] = None
) -> bool:
    """
    Probabilistic zero test.

    Exact structural zero short-circuits to True. Otherwise the simplified
    expression is evaluated at `trials` seeded points drawn uniformly from
    [-r, r]; it is declared zero when every sample is below the relative
    tolerance. Points leaving the domain are resampled (bounded retries).

    Args:
        e: Expression to test
        trials: Number of sample points (>= 1)
        seed: Seed of the sampling distribution
        config: Optional full configuration (overrides trials and seed)

    Returns:
        True iff the expression vanishes at every sample
    """
    if config is None:
        config = ZeroTestConfig(trials=trials, seed=seed)
    if config.trials < 1:
        raise ValueError("is_zero needs at least one trial")

    s = simplify(e)
    if s == 0:
        return True
    if not s.free_symbols:
        return False

    symbols = ordered_symbols(s)
    rng = make_rng(config.seed, 'is_zero')
    accepted = 0
    attempts = 0
    while accepted < config.trials and attempts < config.trials * config.max_resample:
        attempts += 1
        values = sample_point(rng, symbols, config.radius)
        try:
            value, scale = residual(s, values)
        except EvaluationDomainError:
            continue
        if abs(value) > config.tolerance * scale or (scale == 0.0 and value != 0.0):
            return False
        accepted += 1

    if accepted == 0:
        logger.warning("zero_test_no_valid_sample", expression=str(s), attempts=attempts)
        return False
    return True


def vanishes_at(
    e: Expr,
    points: Sequence[Mapping[sp.Symbol, float]],
    atol: float = 1e-8,
    rtol: float = 1e-9
) -> List[bool]:
    """
    Pointwise vanishing test at given (approximate) points.

    Uses |value| <= atol + rtol * scale so that points that only satisfy
    constraints to a numerical tolerance are still accepted.
    """
    s = sp.sympify(e)
    if s == 0:
        return [True] * len(points)
    flags = []
    for values in points:
        value, scale = residual(s, values)
        flags.append(abs(value) <= atol + rtol * scale)
    return flags


def jacobian(exprs: Sequence[Expr], coords: Iterable[Coord]) -> sp.Matrix:
    """Symbolic Jacobian d(exprs)/d(coords)."""
    coords = list(coords)
    return sp.Matrix([[sp.diff(e, c.symbol) for c in coords] for e in exprs])


def evaluate_matrix(
    matrix: sp.Matrix,
    values: Mapping[sp.Symbol, float]
) -> np.ndarray:
    """Evaluate a symbolic matrix to a float array at a point."""
    rows, cols = matrix.shape
    out = np.zeros((rows, cols))
    for i in range(rows):
        for j in range(cols):
            entry = matrix[i, j]
            if entry != 0:
                out[i, j] = residual(entry, values)[0] if entry.free_symbols else float(entry)
    return out


def render(e: Expr) -> str:
    """Render an expression in DSL syntax (^ for powers)."""
    return sp.sstr(sp.sympify(e)).replace('**', '^')
