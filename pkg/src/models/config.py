"""
Configuration classes for the analysis engine.
Holds the numeric tunables shared by every module and the output directory layout.
"""

import os
from dataclasses import dataclass, field, replace
from pathlib import Path

from dotenv import load_dotenv


@dataclass(frozen=True)
class EngineConfig:
    """
    Tunables for sampling, rank decisions, the constraint algorithm and integration.

    Attributes:
        seed: Root seed; every random draw in the engine derives from it
        zero_trials: Sample points used by the probabilistic zero test
        zero_tolerance: Relative tolerance of the zero test
        sample_radius: Coordinates are sampled uniformly from [-r, r]
        max_resample: Retry factor when a sample point leaves the domain
        regularity_samples: Points used to profile the Hessian rank
        rank_tolerance: Singular values below tol * largest count as zero
        max_levels: Upper bound on constraint levels
        witness_points: Witness points sampled per constraint level
        witness_tolerance: Max constraint residual accepted for a witness point
        drift_fail_threshold: Integration aborts above this constraint drift
        init_tolerance: Initial points must satisfy constraints to this tolerance
        rank_points: Points used by the numeric rank checks
        symbolic_wedge_max_n: Largest n for which wedge powers are expanded symbolically
        symbolic_inverse_max_n: Largest n for which the Hessian is inverted symbolically
        projection: Re-impose solved-form constraints after each integration step
    """
    seed: int = 42
    zero_trials: int = 16
    zero_tolerance: float = 1e-9
    sample_radius: float = 2.0
    max_resample: int = 10
    regularity_samples: int = 32
    rank_tolerance: float = 1e-9
    max_levels: int = 10
    witness_points: int = 20
    witness_tolerance: float = 1e-10
    drift_fail_threshold: float = 1e-3
    init_tolerance: float = 1e-12
    rank_points: int = 50
    symbolic_wedge_max_n: int = 2
    symbolic_inverse_max_n: int = 3
    projection: bool = True

    @classmethod
    def from_env(cls) -> 'EngineConfig':
        """Create configuration from environment variables (a .env file is honoured)."""
        load_dotenv()
        defaults = cls()
        return cls(
            seed=int(os.getenv('SRUSK_SEED', str(defaults.seed))),
            zero_trials=int(os.getenv('SRUSK_ZERO_TRIALS', str(defaults.zero_trials))),
            max_levels=int(os.getenv('SRUSK_MAX_LEVELS', str(defaults.max_levels))),
            drift_fail_threshold=float(os.getenv('SRUSK_DRIFT_FAIL', str(defaults.drift_fail_threshold))),
        )

    def with_seed(self, seed: int) -> 'EngineConfig':
        """Return a copy with another root seed."""
        return replace(self, seed=seed)

    def validate(self) -> None:
        """Validate configuration parameters."""
        if self.zero_trials < 1:
            raise ValueError("Zero test needs at least one trial")
        if not 0 < self.zero_tolerance < 1:
            raise ValueError("Zero tolerance must be in (0, 1)")
        if self.sample_radius <= 0:
            raise ValueError("Sample radius must be positive")
        if self.max_levels < 2:
            raise ValueError("At least two constraint levels are required")
        if self.witness_points < 1:
            raise ValueError("At least one witness point per level is required")
        if self.drift_fail_threshold <= 0:
            raise ValueError("Drift threshold must be positive")


@dataclass
class OutputConfig:
    """Configuration for output directory structure."""
    base_dir: Path
    reports_dir: Path = field(init=False)
    trajectories_dir: Path = field(init=False)
    logs_dir: Path = field(init=False)

    def __post_init__(self):
        """Initialise directory structure."""
        if isinstance(self.base_dir, str):
            self.base_dir = Path(self.base_dir)
        self.reports_dir = self.base_dir / 'reports'
        self.trajectories_dir = self.base_dir / 'trajectories'
        self.logs_dir = self.base_dir / 'logs'

    def create_directories(self):
        """Create all required directories."""
        for directory in [self.reports_dir, self.trajectories_dir, self.logs_dir]:
            directory.mkdir(parents=True, exist_ok=True)
