"""
Parser and renderer for the `.lag` model definition language.

Grammar (statements end with ';', '#' starts a line comment):

    dim <n>;
    param <name> [= <number>];
    L = <expr>;
    ic <label>: t=<number>, q1=<number>, qd1=<number>, ...;
    name "<text>";
    description "<text>";

Expressions are conventional infix with '^' for powers, the functions
sin, cos, exp, log, sqrt and the constants pi and E. Positions and velocities
are written q<k> and qd<k>; t is time. tau and p<k> are reserved and rejected
inside L, which must live on the jet space.
"""

import re
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple, Union

import sympy as sp

from ..models.coordinates import coordinate_symbol
from ..models.system import InitialCondition, SystemSpec
from ..utils.errors import DslError, DslSemanticError, DslSyntaxError
from ..utils.logging import get_logger
from ..utils.symbolic import render

logger = get_logger(__name__)

TOKEN_TYPES = [
    ("COMMENT", r"#[^\n]*"),
    ("NEWLINE", r"\n"),
    ("WHITESPACE", r"[ \t\r\f]+"),
    ("NUMBER", r"(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?"),
    ("STRING", r'"[^"\n]*"'),
    ("IDENT", r"[A-Za-z_][A-Za-z0-9_]*"),
    ("PLUS", r"\+"),
    ("MINUS", r"-"),
    ("MULTIPLY", r"\*"),
    ("DIVIDE", r"/"),
    ("POWER", r"\^"),
    ("LPAREN", r"\("),
    ("RPAREN", r"\)"),
    ("EQUALS", r"="),
    ("SEMICOLON", r";"),
    ("COLON", r":"),
    ("COMMA", r","),
    ("MISMATCH", r"."),
]

token_pattern = re.compile("|".join(f"(?P<{name}>{pattern})" for name, pattern in TOKEN_TYPES))

KEYWORDS = {"dim", "param", "L", "ic", "name", "description"}

FUNCTIONS: Dict[str, Callable[[sp.Expr], sp.Expr]] = {
    "sin": sp.sin,
    "cos": sp.cos,
    "exp": sp.exp,
    "log": sp.log,
    "sqrt": sp.sqrt,
}

CONSTANTS: Dict[str, sp.Expr] = {"pi": sp.pi, "E": sp.E}

_POSITION = re.compile(r"^q(\d+)$")
_VELOCITY = re.compile(r"^qd(\d+)$")
_MOMENTUM = re.compile(r"^p(\d+)$")
_FREE_PARAMETER = re.compile(r"^u(\d+)$")


@dataclass
class Token:
    """Token with position tracking for diagnostics."""
    type: str
    value: str
    line: int = 1
    column: int = 1

    def __repr__(self):
        return f"{self.type}:{self.value}@{self.line}:{self.column}"


def tokenize(source: str) -> List[Token]:
    """
    Split source into tokens, dropping whitespace and comments.

    Args:
        source: DSL text

    Returns:
        List of tokens

    Raises:
        DslSyntaxError: On a character outside the language
    """
    tokens = []
    line = 1
    line_start = 0
    for match in token_pattern.finditer(source):
        kind = match.lastgroup
        value = match.group()
        column = match.start() - line_start + 1
        if kind == "NEWLINE":
            line += 1
            line_start = match.end()
            continue
        if kind in ("WHITESPACE", "COMMENT"):
            continue
        if kind == "MISMATCH":
            raise DslSyntaxError(f"unexpected character '{value}'", line, column)
        tokens.append(Token(kind, value, line, column))
    return tokens


@dataclass
class _SymbolUse:
    name: str
    token: Token


class LagrangianParser:
    """Recursive-descent parser producing a validated SystemSpec."""

    def __init__(self, tokens: List[Token]):
        self.tokens = tokens
        self.pos = 0
        self.dim: Optional[Tuple[int, Token]] = None
        self.lagrangian: Optional[Tuple[sp.Expr, Token]] = None
        self.params: Dict[str, float] = {}
        self.param_tokens: Dict[str, Token] = {}
        self.ics: List[Tuple[Token, Dict[str, float], Dict[str, Token]]] = []
        self.name: Optional[str] = None
        self.description: Optional[str] = None
        self._uses: List[_SymbolUse] = []
        self._lagrangian_uses: List[_SymbolUse] = []

    def peek(self) -> Optional[Token]:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def match(self, *expected_types: str) -> Optional[Token]:
        token = self.peek()
        if token and token.type in expected_types:
            self.pos += 1
            return token
        return None

    def expect(self, expected_type: str, what: Optional[str] = None) -> Token:
        token = self.match(expected_type)
        if token:
            return token
        current = self.peek()
        label = what or expected_type.lower()
        if current:
            raise DslSyntaxError(f"expected {label} but got '{current.value}'", current.line, current.column)
        last = self.tokens[-1] if self.tokens else Token("EOF", "", 1, 1)
        raise DslSyntaxError(f"expected {label} but reached end of input", last.line, last.column + len(last.value))

    def parse(self) -> SystemSpec:
        """Parse the complete program and run the semantic checks."""
        while self.peek() is not None:
            self.parse_statement()
        return self._build()

    def parse_statement(self) -> None:
        token = self.expect("IDENT", "a statement keyword")
        handlers = {
            "dim": self.parse_dim,
            "param": self.parse_param,
            "L": self.parse_lagrangian,
            "ic": self.parse_ic,
            "name": self.parse_name,
            "description": self.parse_description,
        }
        handler = handlers.get(token.value)
        if handler is None:
            raise DslSyntaxError(f"unknown statement '{token.value}'", token.line, token.column)
        handler(token)
        self.expect("SEMICOLON", "';'")

    def parse_dim(self, keyword: Token) -> None:
        number = self.expect("NUMBER", "fibre dimension")
        if not number.value.isdigit() or int(number.value) < 1:
            raise DslSemanticError("fibre dimension must be a positive integer", number.line, number.column)
        if self.dim is not None:
            raise DslSemanticError("duplicate 'dim' declaration", keyword.line, keyword.column)
        self.dim = (int(number.value), keyword)

    def parse_param(self, keyword: Token) -> None:
        ident = self.expect("IDENT", "parameter name")
        name = ident.value
        if _reserved(name):
            raise DslSemanticError(f"parameter name '{name}' collides with a reserved name", ident.line, ident.column)
        if name in self.params:
            raise DslSemanticError(f"duplicate parameter '{name}'", ident.line, ident.column)
        value = 1.0
        if self.match("EQUALS"):
            value = self.parse_number()
        self.params[name] = value
        self.param_tokens[name] = ident

    def parse_lagrangian(self, keyword: Token) -> None:
        self.expect("EQUALS", "'='")
        if self.lagrangian is not None:
            raise DslSemanticError("duplicate Lagrangian definition", keyword.line, keyword.column)
        self._uses = []
        expr = self.parse_expression()
        self.lagrangian = (expr, keyword)
        self._lagrangian_uses = list(self._uses)

    def parse_ic(self, keyword: Token) -> None:
        label = self.expect("IDENT", "initial condition label")
        self.expect("COLON", "':'")
        values: Dict[str, float] = {}
        positions: Dict[str, Token] = {}
        while True:
            ident = self.expect("IDENT", "coordinate name")
            if ident.value in values:
                raise DslSemanticError(f"duplicate coordinate name '{ident.value}' in ic", ident.line, ident.column)
            self.expect("EQUALS", "'='")
            values[ident.value] = self.parse_number()
            positions[ident.value] = ident
            if not self.match("COMMA"):
                break
        self.ics.append((label, values, positions))

    def parse_name(self, keyword: Token) -> None:
        self.name = self.expect("STRING", "quoted name").value[1:-1]

    def parse_description(self, keyword: Token) -> None:
        self.description = self.expect("STRING", "quoted description").value[1:-1]

    def parse_number(self) -> float:
        """Signed numeric literal or constant expression."""
        start = self.peek()
        self._uses = []
        expr = self.parse_expression()
        if self._uses:
            use = self._uses[0]
            raise DslSemanticError(f"'{use.name}' is not a constant", use.token.line, use.token.column)
        if expr.is_Rational:
            return float(expr)
        value = complex(sp.N(expr, 30))
        if value.imag != 0.0:
            raise DslSemanticError("value is not real", start.line, start.column)
        return float(value.real)

    def parse_expression(self) -> sp.Expr:
        return self.parse_additive()

    def parse_additive(self) -> sp.Expr:
        left = self.parse_multiplicative()
        while True:
            if self.match("PLUS"):
                left = left + self.parse_multiplicative()
            elif self.match("MINUS"):
                left = left - self.parse_multiplicative()
            else:
                return left

    def parse_multiplicative(self) -> sp.Expr:
        left = self.parse_unary()
        while True:
            if self.match("MULTIPLY"):
                left = left * self.parse_unary()
            elif self.match("DIVIDE"):
                left = left / self.parse_unary()
            else:
                return left

    def parse_unary(self) -> sp.Expr:
        if self.match("MINUS"):
            return -self.parse_unary()
        if self.match("PLUS"):
            return self.parse_unary()
        return self.parse_power()

    def parse_power(self) -> sp.Expr:
        base = self.parse_primary()
        if self.match("POWER"):
            return base ** self.parse_unary()
        return base

    def parse_primary(self) -> sp.Expr:
        token = self.peek()
        if token is None:
            self.expect("NUMBER", "an expression")

        if self.match("NUMBER"):
            return sp.Rational(token.value)

        if self.match("LPAREN"):
            expr = self.parse_expression()
            self.expect("RPAREN", "')'")
            return expr

        if self.match("IDENT"):
            name = token.value
            if self.match("LPAREN"):
                if name not in FUNCTIONS:
                    raise DslSemanticError(f"unknown function '{name}'", token.line, token.column)
                arg = self.parse_expression()
                self.expect("RPAREN", "')'")
                return FUNCTIONS[name](arg)
            if name in CONSTANTS:
                return CONSTANTS[name]
            if name in KEYWORDS:
                raise DslSyntaxError(f"keyword '{name}' inside an expression", token.line, token.column)
            self._uses.append(_SymbolUse(name, token))
            return coordinate_symbol(name)

        raise DslSyntaxError(f"unexpected token '{token.value}'", token.line, token.column)

    def _build(self) -> SystemSpec:
        """Semantic checks and SystemSpec construction."""
        first = self.tokens[0] if self.tokens else Token("EOF", "", 1, 1)
        if self.dim is None:
            raise DslSemanticError("missing 'dim' declaration", first.line, first.column)
        if self.lagrangian is None:
            raise DslSemanticError("missing Lagrangian 'L = ...'", first.line, first.column)
        n = self.dim[0]
        lagrangian = self.lagrangian[0]

        for use in self._lagrangian_uses:
            self._check_lagrangian_symbol(use, n)

        ics = []
        labels = set()
        for label_token, values, positions in self.ics:
            if label_token.value in labels:
                raise DslSemanticError(
                    f"duplicate initial condition '{label_token.value}'", label_token.line, label_token.column
                )
            labels.add(label_token.value)
            ics.append(self._build_ic(label_token, values, positions, n))

        return SystemSpec(
            n=n,
            lagrangian=lagrangian,
            params=dict(self.params),
            initial_conditions=tuple(ics),
            name=self.name,
            description=self.description,
        )

    def _check_lagrangian_symbol(self, use: _SymbolUse, n: int) -> None:
        name, token = use.name, use.token
        if name == "t" or name in self.params:
            return
        if name == "tau":
            raise DslSemanticError("tau coordinate not allowed in L", token.line, token.column)
        if _MOMENTUM.match(name):
            raise DslSemanticError("momentum coordinate not allowed in L", token.line, token.column)
        indexed = _POSITION.match(name) or _VELOCITY.match(name)
        if indexed:
            index = int(indexed.group(1))
            if not 1 <= index <= n:
                raise DslSemanticError(
                    f"coordinate '{name}' does not match declared dim {n}", token.line, token.column
                )
            return
        raise DslSemanticError(f"undeclared symbol '{name}'", token.line, token.column)

    def _build_ic(
        self, label_token: Token, values: Dict[str, float], positions: Dict[str, Token], n: int
    ) -> InitialCondition:
        expected = {"t"} | {f"q{a}" for a in range(1, n + 1)} | {f"qd{a}" for a in range(1, n + 1)}
        for key in values:
            if key not in expected:
                token = positions[key]
                raise DslSemanticError(
                    f"'{key}' is not a jet coordinate of a dim {n} model", token.line, token.column
                )
        missing = sorted(expected - set(values) - {"t"})
        if missing:
            raise DslSemanticError(
                f"initial condition '{label_token.value}' misses {', '.join(missing)}", label_token.line, label_token.column
            )
        return InitialCondition(
            label=label_token.value,
            t=values.get("t", 0.0),
            q=tuple(values[f"q{a}"] for a in range(1, n + 1)),
            qd=tuple(values[f"qd{a}"] for a in range(1, n + 1)),
        )


def _reserved(name: str) -> bool:
    return (
        name in KEYWORDS
        or name in FUNCTIONS
        or name in CONSTANTS
        or name in ("t", "tau")
        or any(p.match(name) for p in (_POSITION, _VELOCITY, _MOMENTUM, _FREE_PARAMETER))
    )


def parse_system(source: str, filename: Optional[str] = None) -> SystemSpec:
    """
    Parse DSL text into a validated SystemSpec.

    Args:
        source: DSL text
        filename: Optional file name used in diagnostics

    Returns:
        The parsed SystemSpec

    Raises:
        DslSyntaxError: Grammar violation, positioned
        DslSemanticError: Invariant violation, positioned
    """
    try:
        spec = LagrangianParser(tokenize(source)).parse()
    except DslError as e:
        raise e.with_filename(filename) if filename else e
    logger.debug("model_parsed", model=spec.display_name, n=spec.n, params=len(spec.params))
    return spec


def load_system(path: Union[str, Path]) -> SystemSpec:
    """Read and parse a UTF-8 `.lag` file."""
    path = Path(path)
    return parse_system(path.read_text(encoding='utf-8'), filename=str(path))


def render_system(spec: SystemSpec) -> str:
    """
    Render a SystemSpec back to DSL text.

    parse_system(render_system(s)) is structurally equal to s.
    """
    lines = []
    if spec.name is not None:
        lines.append(f'name "{spec.name}";')
    if spec.description is not None:
        lines.append(f'description "{spec.description}";')
    lines.append(f"dim {spec.n};")
    for name, value in spec.params.items():
        lines.append(f"param {name} = {float(value)!r};")
    lines.append(f"L = {render(spec.lagrangian)};")
    for ic in spec.initial_conditions:
        assignments = [f"t={float(ic.t)!r}"]
        assignments += [f"q{a + 1}={float(v)!r}" for a, v in enumerate(ic.q)]
        assignments += [f"qd{a + 1}={float(v)!r}" for a, v in enumerate(ic.qd)]
        lines.append(f"ic {ic.label}: {', '.join(assignments)};")
    return "\n".join(lines) + "\n"
