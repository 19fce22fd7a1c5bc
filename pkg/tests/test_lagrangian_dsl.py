import pytest
import sympy as sp
from hypothesis import given
from hypothesis import strategies as st

from src.models.coordinates import TIME, coordinate_symbol, position, velocity
from src.parsers.lagrangian_dsl import load_system, parse_system, render_system, tokenize
from src.utils.errors import DslSemanticError, DslSyntaxError, ModelError

q1, qd1 = position(1).symbol, velocity(1).symbol


def test_parses_oscillator_file(oscillator):
    assert oscillator.n == 1
    assert oscillator.name == "oscillator"
    assert sp.expand(oscillator.lagrangian - (qd1 ** 2 / 2 - q1 ** 2 / 2)) == 0
    assert [ic.label for ic in oscillator.initial_conditions] == ["start", "kicked"]
    assert oscillator.initial_condition().q == (1.0,)
    assert oscillator.initial_condition("kicked").qd == (1.0,)
    assert oscillator.initial_condition("missing") is None
    assert oscillator.is_autonomous()


def test_time_dependent_model_keeps_parameter_symbolic(td_oscillator):
    eps = coordinate_symbol("eps")
    assert td_oscillator.params == {"eps": 0.1}
    assert eps in td_oscillator.lagrangian.free_symbols
    assert TIME.symbol in td_oscillator.lagrangian.free_symbols
    assert not td_oscillator.is_autonomous()
    assert td_oscillator.param_values({"eps": 0.3}) == {eps: 0.3}


def test_numeric_literals_are_exact():
    spec = parse_system("dim 1; L = 0.5*qd1^2;")
    assert spec.lagrangian == sp.Rational(1, 2) * qd1 ** 2


def test_param_without_value_defaults_to_one():
    spec = parse_system("dim 1; param k; L = qd1^2/2 - k*q1^2/2;")
    assert spec.params == {"k": 1.0}


def test_functions_and_constants():
    spec = parse_system("dim 1; L = exp(qd1) + sin(t)*q1 + pi*sqrt(2) + log(E);")
    expected = sp.exp(qd1) + sp.sin(TIME.symbol) * q1 + sp.pi * sp.sqrt(2) + 1
    assert sp.simplify(spec.lagrangian - expected) == 0


def test_comments_and_metadata():
    spec = parse_system('# a comment\nname "demo"; description "two words";\ndim 1; L = qd1; # trailing\n')
    assert spec.name == "demo"
    assert spec.description == "two words"


def test_momentum_in_lagrangian_is_rejected(fixtures_dir):
    with pytest.raises(DslSemanticError) as info:
        load_system(fixtures_dir / "broken.lag")
    error = info.value
    assert "momentum coordinate not allowed in L" in error.message
    assert error.line == 4
    assert error.diagnostic().startswith(str(fixtures_dir / "broken.lag") + ":4:")
    assert isinstance(error, ModelError)


@pytest.mark.parametrize("source, message", [
    ("dim 1; L = qd1 + tau;", "tau coordinate not allowed in L"),
    ("dim 1; L = qd2;", "does not match declared dim 1"),
    ("dim 1; L = qd1 + k;", "undeclared symbol 'k'"),
    ("dim 1; param q1 = 2; L = qd1;", "collides with a reserved name"),
    ("dim 1; param u1 = 2; L = qd1;", "collides with a reserved name"),
    ("dim 1; param k = 1; param k = 2; L = qd1;", "duplicate parameter 'k'"),
    ("L = qd1;", "missing 'dim' declaration"),
    ("dim 1;", "missing Lagrangian"),
    ("dim 0; L = qd1;", "positive integer"),
    ("dim 1; dim 2; L = qd1;", "duplicate 'dim'"),
    ("dim 1; L = qd1; L = q1;", "duplicate Lagrangian"),
    ("dim 1; L = foo(qd1);", "unknown function 'foo'"),
    ("dim 1; L = qd1; ic a: q1=0;", "misses qd1"),
    ("dim 1; L = qd1; ic a: q1=0, qd1=0, p1=1;", "'p1' is not a jet coordinate"),
    ("dim 1; L = qd1; ic a: q1=0, qd1=0; ic a: q1=1, qd1=1;", "duplicate initial condition 'a'"),
    ("dim 1; param k = q1; L = qd1;", "'q1' is not a constant"),
])
def test_semantic_errors(source, message):
    with pytest.raises(DslSemanticError) as info:
        parse_system(source)
    assert message in info.value.message


@pytest.mark.parametrize("source", [
    "dim 1 L = qd1;",
    "dim 1; L = (qd1;",
    "dim 1; L = qd1 $ 2;",
    "dim 1; velocity = qd1;",
    "dim 1; L = qd1",
])
def test_syntax_errors(source):
    with pytest.raises(DslSyntaxError):
        parse_system(source)


def test_syntax_error_is_positioned():
    with pytest.raises(DslSyntaxError) as info:
        parse_system("dim 1;\nL = qd1 $ 2;")
    assert (info.value.line, info.value.column) == (2, 9)


def test_tokenizer_tracks_columns():
    tokens = tokenize("dim 2;\n  L = q1;")
    assert [(tok.value, tok.line, tok.column) for tok in tokens[3:5]] == [("L", 2, 3), ("=", 2, 5)]


def test_render_round_trips_corpus(corpus):
    for spec in corpus.values():
        again = parse_system(render_system(spec))
        assert again.n == spec.n
        assert again.params == spec.params
        assert again.initial_conditions == spec.initial_conditions
        assert again.name == spec.name
        assert sp.simplify(again.lagrangian - spec.lagrangian) == 0


def _term(n):
    index = st.integers(min_value=1, max_value=n)
    coeff = st.integers(min_value=-4, max_value=4).filter(bool)
    return st.one_of(
        st.builds(lambda c, a: f"{c}*qd{a}^2", coeff, index),
        st.builds(lambda c, a, b: f"{c}*q{a}*qd{b}", coeff, index, index),
        st.builds(lambda c, a: f"{c}*cos(q{a})", coeff, index),
        st.builds(lambda c: f"{c}*k*sin(t)", coeff),
    )


@st.composite
def dsl_sources(draw):
    n = draw(st.integers(min_value=1, max_value=3))
    terms = draw(st.lists(_term(n), min_size=1, max_size=5))
    k = draw(st.floats(min_value=-10, max_value=10, allow_nan=False, allow_infinity=False))
    ic = ", ".join([f"q{a}={draw(st.integers(-3, 3))}" for a in range(1, n + 1)]
                   + [f"qd{a}={draw(st.integers(-3, 3))}" for a in range(1, n + 1)])
    name = draw(st.text(alphabet="abcdefgh xyz_", min_size=1, max_size=12))
    description = draw(st.one_of(st.none(), st.text(alphabet="abcdefgh xyz_.,:-", max_size=30)))
    header = f'name "{name}";\n'
    if description is not None:
        header += f'description "{description}";\n'
    return header + f'dim {n};\nparam k = {k!r};\nL = {" + ".join(terms)};\nic start: t=0, {ic};\n'


@given(dsl_sources())
def test_render_then_parse_is_structurally_equal(source):
    spec = parse_system(source)
    again = parse_system(render_system(spec))
    assert again == spec
    assert again.description == spec.description
