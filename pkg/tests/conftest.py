"""
Shared fixtures: the model corpus, engine configuration and hypothesis profiles.
"""

import os
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from src.models.config import EngineConfig
from src.parsers.lagrangian_dsl import load_system
from src.solvers.constraints import run_algorithm

ROOT = Path(__file__).resolve().parent.parent
MODELS_DIR = ROOT / "models"
FIXTURES_DIR = Path(__file__).resolve().parent / "fixtures"

settings.register_profile("ci", max_examples=200, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("fast", max_examples=25, deadline=None)
settings.load_profile(os.getenv("HYPOTHESIS_PROFILE", "fast"))


@pytest.fixture(scope="session")
def models_dir() -> Path:
    return MODELS_DIR


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES_DIR


@pytest.fixture(scope="session")
def config() -> EngineConfig:
    return EngineConfig()


@pytest.fixture(scope="session")
def free_particle():
    return load_system(MODELS_DIR / "free_particle.lag")


@pytest.fixture(scope="session")
def oscillator():
    return load_system(MODELS_DIR / "oscillator.lag")


@pytest.fixture(scope="session")
def td_oscillator():
    return load_system(MODELS_DIR / "td_oscillator.lag")


@pytest.fixture(scope="session")
def singular2():
    return load_system(MODELS_DIR / "singular2.lag")


@pytest.fixture(scope="session")
def degenerate():
    return load_system(MODELS_DIR / "degenerate.lag")


@pytest.fixture(scope="session")
def corpus(free_particle, oscillator, td_oscillator, singular2, degenerate):
    return {
        "free_particle": free_particle,
        "oscillator": oscillator,
        "td_oscillator": td_oscillator,
        "singular2": singular2,
        "degenerate": degenerate,
    }


@pytest.fixture(scope="session")
def chains(corpus, config):
    """Mixed-space constraint chain of every corpus model."""
    return {name: run_algorithm(spec, config=config) for name, spec in corpus.items()}


@pytest.fixture
def output_dir(tmp_path) -> Path:
    return tmp_path / "output"


@pytest.fixture(autouse=True)
def _isolated_env(monkeypatch):
    """Keep SRUSK_* variables of the developer's shell out of the tests."""
    for name in ("SRUSK_SEED", "SRUSK_ZERO_TRIALS", "SRUSK_MAX_LEVELS", "SRUSK_DRIFT_FAIL", "SRUSK_LOG_LEVEL"):
        monkeypatch.delenv(name, raising=False)
