import numpy as np
import pytest
import sympy as sp

from src.geometry.phase_space import build_eta, build_omega_H
from src.models.chain import ChainStatusKind, ConstraintLevel
from src.models.coordinates import TAU, TIME, Chart, free_parameter_symbol, momentum, position, velocity
from src.parsers.lagrangian_dsl import parse_system
from src.solvers.constraints import (
    eta_in_flat_image, flat_map, normalize_constraint, primary_constraints, run_algorithm,
    run_jet_algorithm, solve_forms,
)
from src.utils.errors import ConstantRankError

q1, q2 = position(1).symbol, position(2).symbol
qd1, qd2 = velocity(1).symbol, velocity(2).symbol
p1, p2 = momentum(1).symbol, momentum(2).symbol


def _same_up_to_sign(a, b):
    return sp.expand(a - b) == 0 or sp.expand(a + b) == 0


def assert_levels(chain, expected):
    """Every level introduces the expected constraints, in any order and up to sign."""
    assert len(chain.levels) == len(expected)
    for level, constraints in zip(chain.levels, expected):
        assert len(level.constraints) == len(constraints), level.rendered()
        for c in constraints:
            assert any(_same_up_to_sign(c, got) for got in level.constraints), (c, level.rendered())


def test_oscillator_chain(oscillator, config):
    chain = run_algorithm(oscillator, config=config)
    assert_levels(chain, [[], [p1 - qd1]])
    assert chain.status.kind is ChainStatusKind.STABILIZED
    assert str(chain.status) == "Stabilized(2)"
    assert [s.name for s in chain.free_parameters] == ["z_tau"]


def test_singular_chain_has_four_levels(singular2, config):
    chain = run_algorithm(singular2, config=config)
    assert_levels(chain, [[], [p1 - q2 - qd1, p2], [qd1], [qd2]])
    assert str(chain.status) == "Stabilized(4)"
    assert [s.name for s in chain.free_parameters] == ["z_tau"]
    assert chain.summary() == "Stabilized(4); levels 4"


def test_singular_jet_chain(singular2, config):
    chain = run_jet_algorithm(singular2, config)
    assert_levels(chain, [[], [qd1]])
    assert str(chain.status) == "Stabilized(2)"


def test_degenerate_chain_keeps_a_free_parameter(degenerate, config):
    chain = run_algorithm(degenerate, config=config)
    assert_levels(chain, [[], [p1 - 1]])
    assert str(chain.status) == "Stabilized(2)"
    assert chain.free_parameters[-1] == free_parameter_symbol(1)
    assert chain.free_directions.components == ("tau", "qd1")


def test_degenerate_jet_chain_stabilizes_immediately(degenerate, config):
    chain = run_jet_algorithm(degenerate, config)
    assert len(chain.levels) == 1
    assert str(chain.status) == "Stabilized(1)"


def test_regular_jet_chain_is_second_order(oscillator, config):
    chain = run_jet_algorithm(oscillator, config)
    assert str(chain.status) == "Stabilized(1)"
    assert all(r == 0 for r in chain.sode_residuals)


def test_variable_rank_is_refused(config):
    spec = parse_system('name "cubic"; dim 1; L = qd1^3/3;')
    with pytest.raises(ConstantRankError):
        run_algorithm(spec, config=config)


def test_level_cap_is_reported_as_status(singular2, config):
    chain = run_algorithm(singular2, max_levels=2, config=config)
    assert chain.status.kind is ChainStatusKind.MAX_ITERATIONS_EXCEEDED
    assert str(chain.status) == "MaxIterationsExceeded"
    assert chain.solution == ()


def test_chain_is_reproducible(singular2, config):
    first = run_algorithm(singular2, config=config)
    second = run_algorithm(singular2, config=config)
    assert first.constraint_sets() == second.constraint_sets()
    assert first.final.witness_points == second.final.witness_points


def test_witness_points_lie_on_their_level(singular2, config):
    chain = run_algorithm(singular2, config=config)
    final = chain.final
    assert final.witness_points
    for point in final.witness_points:
        for c in final.cumulative:
            assert abs(float(c.xreplace(point))) < 1e-9


def test_primary_constraints_are_momentum_definitions(td_oscillator, config):
    level = primary_constraints(td_oscillator, config)
    assert level.level == 2
    assert [sp.expand(c - (p1 - qd1)) for c in level.constraints] == [0]
    assert level.solved == {p1: qd1}


def test_solve_forms_prefers_momenta_and_reduces():
    chart = Chart.mixed(2)
    solved, unsolved = solve_forms(chart, [p1 - q2 - qd1, p2, qd1])
    assert solved[p1] == q2
    assert solved[p2] == 0
    assert solved[qd1] == 0
    assert unsolved == []


def test_solve_forms_keeps_nonlinear_constraints():
    chart = Chart.mixed(1)
    solved, unsolved = solve_forms(chart, [qd1 ** 2 + q1 ** 2 - 1])
    assert solved == {}
    assert unsolved == [qd1 ** 2 + q1 ** 2 - 1]


def test_normalize_constraint_drops_content_and_sign():
    assert normalize_constraint(-sp.Rational(2, 3) * qd1) == qd1
    assert normalize_constraint((q1 - qd1) / (1 + q1 ** 2)) in (q1 - qd1, qd1 - q1)
    assert normalize_constraint(sp.S.Zero) == 0


def test_eta_lies_in_flat_image_on_the_final_level(oscillator, config):
    chain = run_algorithm(oscillator, config=config)
    omega_H, eta = build_omega_H(oscillator), build_eta(oscillator)
    for point in chain.final.witness_points[:5]:
        assert eta_in_flat_image(omega_H, eta, chain.final.cumulative, point)


def test_flat_map_is_square(oscillator):
    values = {s: 0.5 for s in oscillator.mixed_chart.symbols}
    matrix = flat_map(build_omega_H(oscillator), build_eta(oscillator), values)
    assert matrix.shape == (5, 5)
    assert np.allclose(matrix[:, oscillator.mixed_chart.index(TAU)], 0.0)


def test_level_without_solved_forms_still_simplifies(oscillator):
    q1, t, eps = position(1).symbol, TIME.symbol, sp.Symbol("eps", real=True)
    level = ConstraintLevel(level=1, chart=oscillator.mixed_chart)
    e = -eps * q1 * sp.sin(t) + 2 * q1 * (eps * sp.sin(t) / 2 + sp.Rational(1, 2)) - q1
    assert level.reduce(e) == 0
