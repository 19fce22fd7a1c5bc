import math
from dataclasses import replace

import numpy as np
import pytest
import sympy as sp

from src.models.coordinates import TIME, position, velocity
from src.models.system import InitialCondition
from src.parsers.lagrangian_dsl import parse_system
from src.solvers.euler_lagrange import (
    ReferenceIntegrator, euler_lagrange_system, forces, integrate_euler_lagrange, uniform_grid,
)
from src.utils.errors import RegularityRequiredError

q1, qd1, t = position(1).symbol, velocity(1).symbol, TIME.symbol


def test_oscillator_accelerations(oscillator):
    system = euler_lagrange_system(oscillator)
    assert system.accelerations == (-q1,)
    assert system.determinant == 1


def test_time_dependent_accelerations(td_oscillator):
    eps = sp.Symbol("eps", real=True)
    acc = euler_lagrange_system(td_oscillator).accelerations[0]
    assert sp.simplify(acc + (1 + eps * sp.sin(t)) * q1) == 0


def test_forces_include_gyroscopic_terms(singular2):
    qd2 = velocity(2).symbol
    f1, f2 = forces(singular2)
    assert sp.expand(f1 + qd2) == 0
    assert sp.expand(f2 - qd1) == 0


def test_non_unit_mass():
    spec = parse_system("dim 1; L = 2*qd1^2 - q1^4;")
    assert euler_lagrange_system(spec).accelerations == (-q1 ** 3,)


def test_singular_lagrangian_has_no_normal_form(singular2):
    with pytest.raises(RegularityRequiredError):
        euler_lagrange_system(singular2)


@pytest.mark.parametrize("h, horizon, steps, dt", [
    (0.1, 1.0, 10, 0.1),
    (0.3, 1.0, 4, 0.25),
    (1e-3, 2.0, 2000, 1e-3),
    (5.0, 1.0, 1, 1.0),
])
def test_uniform_grid_lands_on_horizon(h, horizon, steps, dt):
    n, step = uniform_grid(h, horizon)
    assert n == steps
    assert step == pytest.approx(dt)
    assert n * step == pytest.approx(horizon)


def test_uniform_grid_rejects_nonpositive_values():
    with pytest.raises(ValueError):
        uniform_grid(0.0, 1.0)
    with pytest.raises(ValueError):
        uniform_grid(0.1, -1.0)


def test_reference_integrator_tracks_exact_solution(oscillator):
    ic = oscillator.initial_condition("start")
    solution = integrate_euler_lagrange(oscillator, ic, 1e-3, math.tau)
    assert solution.times[-1] == pytest.approx(math.tau)
    assert solution.q[-1, 0] == pytest.approx(1.0, abs=1e-6)
    assert solution.qd[-1, 0] == pytest.approx(0.0, abs=1e-6)
    rows = solution.as_jet_rows()
    assert rows.shape == (len(solution.times), 3)


def test_reference_integrator_is_fourth_order(oscillator):
    ic = InitialCondition(label="x", t=0.0, q=(1.0,), qd=(0.0,))
    errors = []
    for h in (0.2, 0.1):
        solution = integrate_euler_lagrange(oscillator, ic, h, 2.0)
        errors.append(abs(solution.q[-1, 0] - math.cos(2.0)))
    assert errors[0] / errors[1] >= 12


def test_reference_integrator_uses_parameter_overrides(td_oscillator):
    ic = td_oscillator.initial_condition()
    frozen = ReferenceIntegrator(td_oscillator, params={"eps": 0.0}).run(ic, 1e-2, math.tau)
    assert frozen.q[-1, 0] == pytest.approx(1.0, abs=1e-6)
    driven = ReferenceIntegrator(td_oscillator).run(ic, 1e-2, math.tau)
    assert not np.isclose(driven.q[-1, 0], 1.0, atol=1e-6)


def test_numeric_solve_beyond_symbolic_limit(oscillator, config):
    numeric = ReferenceIntegrator(oscillator, config=replace(config, symbolic_inverse_max_n=0))
    symbolic = ReferenceIntegrator(oscillator, config=config)
    ic = oscillator.initial_condition()
    assert np.allclose(numeric.run(ic, 0.01, 1.0).q, symbolic.run(ic, 0.01, 1.0).q)
