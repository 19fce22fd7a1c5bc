import pytest

import src.geometry.phase_space as phase_space
from src.geometry.legendre import hessian_report
from src.models.vector_field import FieldMode
from src.solvers.constraints import run_jet_algorithm
from src.solvers.dynamics import solve_Z
from src.verification.checks import (
    CheckStatus, check_cosymplectic_L, check_energy_balance, check_equivalence, check_field_equations,
    check_flat_agreement, check_kernel_direction, check_pullback_identity, check_rank_relations,
    check_uniqueness,
)
from src.verification.suite import CHAIN_DEPENDENT, run_suite

NAMES = ["free_particle", "oscillator", "td_oscillator", "singular2", "degenerate"]


@pytest.fixture
def flipped_omega(monkeypatch):
    """omega with the opposite sign; d/dtau then leaves the kernel of omega_H."""
    original = phase_space.build_omega
    monkeypatch.setattr(phase_space, "build_omega", lambda spec: original(spec).scale(-1))


@pytest.mark.parametrize("name", NAMES)
def test_kernel_direction(corpus, config, name):
    result = check_kernel_direction(corpus[name], config)
    assert result.status is CheckStatus.PASS
    assert result.method == "symbolic"


@pytest.mark.parametrize("name", NAMES)
def test_rank_relations(corpus, config, name):
    result = check_rank_relations(corpus[name], points=10, config=config)
    assert result.status is CheckStatus.PASS, result.details
    assert result.method == "symbolic+numeric"
    assert all(result.details["identities"].values())


@pytest.mark.slow
@pytest.mark.parametrize("name", NAMES)
def test_rank_relations_at_default_sample_count(corpus, config, name):
    result = check_rank_relations(corpus[name], config=config)
    assert result.status is CheckStatus.PASS, result.details
    assert config.rank_points == 50
    assert sum(result.details["rank_counts_M1"].values()) == config.rank_points
    assert sum(result.details["rank_counts_ML"].values()) == config.rank_points


@pytest.mark.parametrize("name, rank", [("oscillator", 1), ("singular2", 1), ("degenerate", 0)])
def test_cosymplectic_relations(corpus, config, name, rank):
    spec = corpus[name]
    result = check_cosymplectic_L(spec, hessian_report(spec, config=config), points=10, config=config)
    assert result.status is CheckStatus.PASS, result.details
    assert result.details["rank"] == rank


@pytest.mark.parametrize("name", NAMES)
def test_pullback_identity(corpus, config, name):
    result = check_pullback_identity(corpus[name], config=config)
    assert result.status is CheckStatus.PASS, result.message
    assert result.details["mismatched_coefficients"] == {}
    assert result.details["points"] == 10


def test_flat_agreement_on_singular_chain(singular2, chains, config):
    result = check_flat_agreement(singular2, chains["singular2"], config)
    assert result.status is CheckStatus.PASS, result.details
    assert set(result.details["levels"]) == {"2", "3", "4"}


def test_field_equations_for_both_modes(oscillator, chains, config):
    fields = [solve_Z(oscillator, chains["oscillator"], mode, config) for mode in ("raw", "graph_refined")]
    result = check_field_equations(oscillator, fields, config)
    assert result.status is CheckStatus.PASS
    assert result.details["modes"] == ["raw", "graph_refined"]


def test_uniqueness_is_skipped_for_singular_models(singular2, oscillator, chains, config):
    skipped = check_uniqueness(singular2, chains["singular2"], hessian_report(singular2, config=config), config)
    assert skipped.status is CheckStatus.SKIP
    unique = check_uniqueness(oscillator, chains["oscillator"], hessian_report(oscillator, config=config), config)
    assert unique.status is CheckStatus.PASS
    assert unique.details["free_params"] == []


@pytest.mark.slow
def test_equivalence_against_reference_integration(td_oscillator, chains, config):
    chain = chains["td_oscillator"]
    regularity = hessian_report(td_oscillator, config=config)
    Z = solve_Z(td_oscillator, chain, FieldMode.GRAPH_REFINED, config, regularity)
    jet_chain = run_jet_algorithm(td_oscillator, config)
    result = check_equivalence(td_oscillator, chain, jet_chain, Z, regularity, horizon=2.0, config=config)
    assert result.status is CheckStatus.PASS, result.details
    assert result.details["flows"][0]["kind"] == "reference_gap"
    assert result.details["flows"][0]["max_gap"] < 1e-8


def test_equivalence_uses_el_residuals_for_singular_models(singular2, chains, config):
    chain = chains["singular2"]
    regularity = hessian_report(singular2, config=config)
    Z = solve_Z(singular2, chain, FieldMode.RAW, config, regularity)
    jet_chain = run_jet_algorithm(singular2, config)
    result = check_equivalence(singular2, chain, jet_chain, Z, regularity, h=0.01, horizon=1.0, config=config)
    assert result.status is CheckStatus.PASS, result.details
    assert result.details["flows"][0]["kind"] == "el_residual"
    assert all(not item["not_vanishing"] for item in result.details["correspondence"])


def test_energy_balance_without_initial_conditions_is_skipped(oscillator, chains, config):
    Z = solve_Z(oscillator, chains["oscillator"], FieldMode.GRAPH_REFINED, config)
    result = check_energy_balance(oscillator, chains["oscillator"], Z, ics=[], config=config)
    assert result.status is CheckStatus.SKIP


def test_energy_balance_conserves_energy(oscillator, chains, config):
    Z = solve_Z(oscillator, chains["oscillator"], FieldMode.GRAPH_REFINED, config)
    result = check_energy_balance(oscillator, chains["oscillator"], Z, h=1e-3, horizon=2.0, config=config)
    assert result.status is CheckStatus.PASS, result.details
    assert result.details["autonomous"]
    assert all(flow["energy_drift"] < 1e-8 for flow in result.details["flows"])


@pytest.mark.slow
@pytest.mark.parametrize("name", NAMES)
def test_suite_passes_on_corpus(corpus, config, name):
    report = run_suite(corpus[name], config=config, points=10)
    assert report.passed, report.to_text()
    assert [r.name for r in report.results] == [
        "kernel_direction", "rank_relations", "cosymplectic_L", "pullback_identity",
        "flat_agreement", "field_equations", "uniqueness", "equivalence", "energy_balance",
    ]
    assert report.to_text().endswith("PASSED")


def test_flipped_omega_fails_kernel_check(oscillator, config, flipped_omega):
    result = check_kernel_direction(oscillator, config)
    assert result.status is CheckStatus.FAIL
    assert "t" in result.details["i_dtau_omega_H_nonzero"]


def test_suite_reports_flipped_omega(oscillator, config, flipped_omega):
    report = run_suite(oscillator, config=config, points=5, horizon=0.5)
    assert not report.passed
    assert "kernel_direction" in [r.name for r in report.failures()]
    if not report.chain_status.startswith("Stabilized"):
        skipped = [r.name for r in report.results if r.status is CheckStatus.SKIP]
        assert skipped == list(CHAIN_DEPENDENT)
