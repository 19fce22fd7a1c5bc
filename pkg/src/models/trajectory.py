"""
Trajectory models.
Integrated samples on a chart with per-sample constraint residuals and the drift summary.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Tuple

import numpy as np

from .coordinates import Chart


@dataclass
class Trajectory:
    """
    Samples of an integral curve.

    Attributes:
        chart: Coordinates of the state columns
        times: Sample times, strictly increasing with uniform step
        states: Array of shape (samples, chart.dim) in chart order
        constraint_names: Rendered constraints monitored along the flow
        residuals: Absolute constraint residuals, shape (samples, len(constraint_names))
        bindings: Values used for the free parameters of the field
        defaulted: Free parameters that were bound to 0 because no value was given
        step: Uniform step
        projection: Whether solved-form constraints were re-imposed after each step
    """
    chart: Chart
    times: np.ndarray
    states: np.ndarray
    constraint_names: Tuple[str, ...] = ()
    residuals: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    bindings: Dict[str, float] = field(default_factory=dict)
    defaulted: Tuple[str, ...] = ()
    step: float = 0.0
    projection: bool = True

    def __len__(self) -> int:
        return int(self.times.shape[0])

    @property
    def drift(self) -> np.ndarray:
        """Per-sample max constraint residual."""
        if self.residuals.size == 0:
            return np.zeros(len(self))
        return np.max(self.residuals, axis=1)

    def column(self, name: str) -> np.ndarray:
        return self.states[:, self.chart.names().index(name)]

    def sample(self, i: int) -> Dict[str, float]:
        return {name: float(v) for name, v in zip(self.chart.names(), self.states[i])}

    def final(self) -> Dict[str, float]:
        return self.sample(len(self) - 1)

    def header(self) -> List[str]:
        return self.chart.names() + ['drift']


@dataclass(frozen=True)
class DriftSummary:
    """
    Constraint drift statistics of a trajectory.

    Attributes:
        max_residual: Max |residual| per constraint
        mean_residual: Mean |residual| per constraint
        max_drift: Max over constraints and samples
        monotone: Drift never decreases from one sample to the next
        samples: Number of samples summarized
    """
    max_residual: Dict[str, float] = field(default_factory=dict)
    mean_residual: Dict[str, float] = field(default_factory=dict)
    max_drift: float = 0.0
    monotone: bool = True
    samples: int = 0

    @property
    def empty(self) -> bool:
        return self.samples == 0
