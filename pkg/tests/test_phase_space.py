import numpy as np
import pytest
import sympy as sp

from src.geometry.exterior import coordinate_vector, exterior_derivative_k, interior_product
from src.geometry.phase_space import (
    build_eta, build_hamiltonian, build_omega, build_omega_H, build_poincare_cartan, numeric_rank,
    pullback_omega_L, rank_at, rank_off_time, restrict_omega_H,
)
from src.models.coordinates import TAU, TIME, momentum, position, velocity
from src.utils.symbolic import bind

q1, qd1, p1 = position(1).symbol, velocity(1).symbol, momentum(1).symbol


def test_omega_is_canonical(oscillator):
    omega = build_omega(oscillator)
    assert omega.nonzero_entries() == {("t", "tau"): 1, ("q1", "p1"): 1}


def test_hamiltonian_of_oscillator(oscillator):
    ham = build_hamiltonian(oscillator)
    expected = p1 * qd1 + TAU.symbol - qd1 ** 2 / 2 + q1 ** 2 / 2
    assert sp.expand(ham.h - expected) == 0
    assert ham.dh_dtau == 1
    assert sp.expand(ham.dh_dqd[0] - (p1 - qd1)) == 0


def test_omega_H_entries(oscillator):
    omega_H = build_omega_H(oscillator)
    assert omega_H[position(1), momentum(1)] == 1
    assert omega_H[position(1), TIME] == q1
    assert omega_H[momentum(1), TIME] == qd1
    assert sp.expand(omega_H[velocity(1), TIME] - (p1 - qd1)) == 0
    assert omega_H[TIME, TAU] == 0


@pytest.mark.parametrize("name", ["free_particle", "oscillator", "td_oscillator", "singular2", "degenerate"])
def test_d_tau_spans_part_of_the_kernel(corpus, name):
    spec = corpus[name]
    chart = spec.mixed_chart
    d_tau = coordinate_vector(chart, TAU)
    assert all(c == 0 for c in interior_product(d_tau, build_omega_H(spec)).coeffs)
    assert build_eta(spec).apply(d_tau) == 0


def test_omega_H_is_closed_and_antisymmetric(td_oscillator):
    omega_H = build_omega_H(td_oscillator)
    assert all(d == 0 for d in omega_H.antisymmetry_defects())
    assert exterior_derivative_k(omega_H.to_kform()).is_structurally_zero()


def test_poincare_cartan_of_oscillator(oscillator):
    theta, omega_L = build_poincare_cartan(oscillator)
    assert sp.expand(theta[TIME] - (-qd1 ** 2 / 2 - q1 ** 2 / 2)) == 0
    assert theta[position(1)] == qd1
    assert omega_L[position(1), velocity(1)] == 1
    assert omega_L[position(1), TIME] == q1
    assert omega_L[velocity(1), TIME] == qd1


def test_degenerate_lagrangian_has_vanishing_omega_L(degenerate):
    _, omega_L = build_poincare_cartan(degenerate)
    assert omega_L.nonzero_entries() == {}


@pytest.mark.parametrize("name", ["free_particle", "oscillator", "td_oscillator", "singular2", "degenerate"])
def test_omega_H_on_graph_matches_pulled_back_omega_L(corpus, name):
    spec = corpus[name]
    difference = (restrict_omega_H(spec) - pullback_omega_L(spec)).simplified()
    assert difference.nonzero_entries() == {}


def test_pulled_back_omega_L_ignores_tau_and_momenta(singular2):
    pulled = pullback_omega_L(singular2)
    chart = singular2.mixed_chart
    for coord in [TAU, momentum(1), momentum(2)]:
        i = chart.index(coord)
        assert all(pulled.coeffs[i, j] == 0 for j in range(chart.dim))


def test_rank_of_omega_H_at_a_point(oscillator):
    omega_H = build_omega_H(oscillator)
    point = {"t": 0.0, "q1": 0.3, "tau": 1.0, "p1": 2.0, "qd1": 0.5}
    assert rank_at(omega_H, point) == 4
    assert rank_off_time(omega_H, bind(point)) == 2


def test_numeric_rank_thresholds_relative_to_largest_value():
    assert numeric_rank(np.diag([1.0, 1e-12])) == 1
    assert numeric_rank(np.zeros((3, 3))) == 0
    assert numeric_rank(np.zeros((0, 0))) == 0
    assert numeric_rank(np.eye(3)) == 3
