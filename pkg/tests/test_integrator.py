import math

import numpy as np
import pytest

from src.models.coordinates import TAU, TIME, momentum, position, velocity
from src.models.system import InitialCondition
from src.models.trajectory import Trajectory
from src.models.vector_field import FieldMode
from src.parsers.lagrangian_dsl import load_system
from src.solvers.constraints import run_algorithm
from src.solvers.dynamics import solve_Z
from src.solvers.integrator import (
    CompiledField, drift_report, integrate, integrate_grid, lift_initial_condition,
)
from src.utils.errors import InitialConditionError, IntegrationError


@pytest.fixture(scope="module")
def oscillator_field(oscillator, chains, config):
    return solve_Z(oscillator, chains["oscillator"], FieldMode.GRAPH_REFINED, config)


def _start(spec, chain, label=None, config=None):
    return lift_initial_condition(spec, chain, spec.initial_condition(label), config=config)


def test_lift_places_point_on_graph(oscillator, chains):
    x0 = _start(oscillator, chains["oscillator"], "kicked")
    assert x0[momentum(1)] == pytest.approx(1.0)
    assert x0[TAU] == pytest.approx(-0.5)
    assert x0[TIME] == 0.0


def test_lift_rejects_point_off_final_level(singular2, chains):
    ic = InitialCondition(label="moving", t=0.0, q=(1.0, 0.5), qd=(1.0, 0.0))
    with pytest.raises(InitialConditionError) as info:
        lift_initial_condition(singular2, chains["singular2"], ic)
    assert info.value.residuals == {"qd1": pytest.approx(1.0)}
    assert "qd1=0 violated" in str(info.value)


def test_oscillator_returns_after_one_period(oscillator, chains, oscillator_field, config):
    x0 = _start(oscillator, chains["oscillator"], "start")
    traj = integrate(oscillator, oscillator_field, x0, 1e-3, math.tau, config=config)
    assert len(traj) == 6285
    assert traj.times[-1] == pytest.approx(math.tau)
    assert traj.final()["q1"] == pytest.approx(1.0, abs=1e-6)
    assert traj.final()["qd1"] == pytest.approx(0.0, abs=1e-6)
    assert float(np.max(traj.drift)) < 1e-8
    assert traj.header() == ["t", "q1", "tau", "p1", "qd1", "drift"]


def test_step_halving_shrinks_error_sixteenfold(oscillator, chains, oscillator_field, config):
    x0 = _start(oscillator, chains["oscillator"], "start")
    errors = []
    for h in (0.2, 0.1):
        traj = integrate(oscillator, oscillator_field, x0, h, 2.0, config=config)
        errors.append(abs(traj.final()["q1"] - math.cos(2.0)))
    assert errors[0] / errors[1] >= 12


def test_projection_can_be_switched_off(oscillator, chains, oscillator_field, config):
    x0 = _start(oscillator, chains["oscillator"], "start")
    traj = integrate(oscillator, oscillator_field, x0, 0.01, 1.0, config=config, projection=False)
    assert not traj.projection
    summary = drift_report(traj)
    assert summary.samples == len(traj)
    assert summary.max_drift < 1e-6
    assert set(summary.max_residual) == set(traj.constraint_names)


def test_time_dependent_tau_tracks_energy(td_oscillator, chains, config):
    Z = solve_Z(td_oscillator, chains["td_oscillator"], FieldMode.GRAPH_REFINED, config)
    x0 = _start(td_oscillator, chains["td_oscillator"])
    traj = integrate(td_oscillator, Z, x0, 1e-3, 3.0, config=config, projection=False)
    q, qd, t = traj.column("q1"), traj.column("qd1"), traj.times
    energy = 0.5 * qd ** 2 + 0.5 * (1 + 0.1 * np.sin(t)) * q ** 2
    assert np.allclose(traj.column("tau"), -energy, atol=1e-8)


def test_singular_model_stays_frozen(singular2, chains, config):
    Z = solve_Z(singular2, chains["singular2"], FieldMode.RAW, config)
    x0 = _start(singular2, chains["singular2"], "frozen")
    traj = integrate(singular2, Z, x0, 0.01, 1.0, config=config)
    assert np.all(traj.column("qd1") == 0.0)
    assert np.allclose(traj.column("q1"), 1.0)
    assert np.allclose(traj.column("q2"), 0.5)


def test_free_parameters_default_to_zero(degenerate, chains, config):
    Z = solve_Z(degenerate, chains["degenerate"], FieldMode.RAW, config)
    x0 = _start(degenerate, chains["degenerate"], "drift")
    traj = integrate(degenerate, Z, x0, 0.01, 1.0, config=config)
    assert traj.defaulted == ("u1",)
    assert traj.bindings == {"u1": 0.0}
    assert np.allclose(traj.column("qd1"), 0.3)
    assert traj.final()["q1"] == pytest.approx(0.3)


def test_bindings_drive_free_directions(degenerate, chains, config):
    Z = solve_Z(degenerate, chains["degenerate"], FieldMode.RAW, config)
    x0 = _start(degenerate, chains["degenerate"], "drift")
    traj = integrate(degenerate, Z, x0, 0.01, 2.0, bindings={"u1": 0.5, "u9": 3.0}, config=config)
    assert traj.defaulted == ()
    assert traj.bindings == {"u1": 0.5}
    assert traj.final()["qd1"] == pytest.approx(1.3)
    assert traj.final()["q1"] == pytest.approx(0.3 * 2.0 + 0.5 * 2.0 ** 2 / 2)


def test_compiling_requires_bound_parameters(degenerate, chains, config):
    Z = solve_Z(degenerate, chains["degenerate"], FieldMode.RAW, config)
    with pytest.raises(ValueError, match="u1"):
        CompiledField(degenerate, Z)


def test_blowup_is_reported(fixtures_dir, config):
    spec = load_system(fixtures_dir / "blowup.lag")
    chain = run_algorithm(spec, config=config)
    Z = solve_Z(spec, chain, FieldMode.GRAPH_REFINED, config)
    x0 = _start(spec, chain)
    with pytest.raises(IntegrationError) as info:
        integrate(spec, Z, x0, 1e-3, 3.0, config=config)
    assert 1.0 < info.value.time < 3.0


def test_grid_keeps_input_order(oscillator, chains, oscillator_field, config):
    chain = chains["oscillator"]
    points = [
        lift_initial_condition(oscillator, chain, InitialCondition("a", 0.0, (q,), (0.0,)))
        for q in (0.5, 1.0, 1.5)
    ]
    trajectories = integrate_grid(oscillator, oscillator_field, points, 0.01, 1.0, config=config, max_workers=3)
    assert [traj.states[0, 1] for traj in trajectories] == [0.5, 1.0, 1.5]
    for q, traj in zip((0.5, 1.0, 1.5), trajectories):
        assert traj.final()["q1"] == pytest.approx(q * math.cos(1.0), abs=1e-8)


def test_drift_report_of_empty_trajectory(oscillator):
    empty = Trajectory(chart=oscillator.mixed_chart, times=np.zeros(0), states=np.zeros((0, 5)))
    summary = drift_report(empty)
    assert summary.empty
    assert summary.max_drift == 0.0


def test_drift_report_selects_constraints(oscillator, chains, oscillator_field, config):
    x0 = _start(oscillator, chains["oscillator"], "kicked")
    traj = integrate(oscillator, oscillator_field, x0, 0.01, 1.0, config=config)
    name = traj.constraint_names[0]
    summary = drift_report(traj, [name])
    assert list(summary.max_residual) == [name]
    assert summary.mean_residual[name] <= summary.max_residual[name]


def test_initial_point_keeps_its_velocity(oscillator, chains):
    x0 = _start(oscillator, chains["oscillator"], "kicked")
    assert x0[velocity(1)] == 1.0
    assert x0[position(1)] == 0.0
