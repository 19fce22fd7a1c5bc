"""
Configuration management for the srusk CLI.
Merges command-line flags with environment variables; flags win over the environment, the environment over defaults.
"""

import argparse
import os
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, Optional

from dotenv import load_dotenv

from ..models.config import EngineConfig
from .formatters import OutputFormat
from .parser import parse_assignments

DEFAULT_SEED = 42


def resolve_seed(flag: Optional[int]) -> int:
    """--seed, then $SRUSK_SEED, then 42."""
    if flag is not None:
        return flag
    load_dotenv()
    value = os.getenv('SRUSK_SEED')
    return int(value) if value else DEFAULT_SEED


@dataclass
class CLIConfig:
    """Configuration container for CLI arguments with validation."""
    command: str
    model_file: Optional[Path] = None
    seed: int = DEFAULT_SEED
    points: Optional[int] = None
    ic: Optional[str] = None
    h: float = 1e-3
    T: float = 10.0
    bindings: Dict[str, float] = field(default_factory=dict)
    params: Dict[str, float] = field(default_factory=dict)
    mode: Optional[str] = None
    max_levels: Optional[int] = None
    output_dir: Path = Path("output")
    output_mode: OutputFormat = OutputFormat.DETAILED
    projection: bool = True
    progress: bool = False
    verbose: bool = False
    log_file: Optional[Path] = None
    schema_dir: Path = Path("schemas")

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> 'CLIConfig':
        """Create configuration from parsed arguments."""
        return cls(
            command=args.command,
            model_file=getattr(args, 'file', None),
            seed=resolve_seed(getattr(args, 'seed', None)),
            points=getattr(args, 'points', None),
            ic=getattr(args, 'ic', None),
            h=getattr(args, 'h', 1e-3),
            T=getattr(args, 'T', 10.0),
            bindings=parse_assignments(getattr(args, 'bind', [])),
            params=parse_assignments(getattr(args, 'param', [])),
            mode=getattr(args, 'mode', None),
            max_levels=getattr(args, 'max_levels', None),
            output_dir=getattr(args, 'output_dir', Path("output")),
            output_mode=getattr(args, 'output_mode', OutputFormat.DETAILED),
            projection=getattr(args, 'projection', True),
            progress=getattr(args, 'progress', False),
            verbose=getattr(args, 'verbose', False),
            log_file=getattr(args, 'log_file', None),
            schema_dir=getattr(args, 'dir', Path("schemas")),
        )

    def engine_config(self) -> EngineConfig:
        """Engine tunables from the environment, with the CLI seed and projection applied."""
        engine = EngineConfig.from_env().with_seed(self.seed)
        if not self.projection:
            engine = replace(engine, projection=False)
        engine.validate()
        return engine

    def validate(self) -> None:
        """Validate configuration parameters."""
        if self.command != 'schemas' and self.model_file is None:
            raise ValueError("A model file must be specified")
        if self.h <= 0:
            raise ValueError("Step must be positive")
        if self.T <= 0:
            raise ValueError("Horizon must be positive")
        if self.points is not None and self.points < 1:
            raise ValueError("Points must be positive")
        if self.max_levels is not None and self.max_levels < 2:
            raise ValueError("At least two constraint levels are required")
