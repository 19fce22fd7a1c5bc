"""
Report schemas.
Pydantic models for every JSON document the engine writes; the shipped JSON schemas are generated from them.
"""

from typing import Any, Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field


class _Report(BaseModel):
    model_config = ConfigDict(extra='forbid')


class RegularityModel(_Report):
    kind: str
    label: str
    rank: Optional[int] = None
    rank_profile: List[int] = Field(default_factory=list)
    determinant: str
    rank_drop_witness: Optional[Dict[str, float]] = None


class LevelModel(_Report):
    level: int = Field(ge=1)
    constraints: List[str] = Field(default_factory=list)
    cumulative: List[str] = Field(default_factory=list)
    solved: Dict[str, str] = Field(default_factory=dict)
    witness_points: int = Field(ge=0)


class FreeDirectionsModel(_Report):
    components: List[str] = Field(default_factory=list)
    kernel_dimensions: List[int] = Field(default_factory=list)
    basis: List[Dict[str, float]] = Field(default_factory=list)


class ChainModel(_Report):
    model: str
    label: str
    status: str
    final_level: int
    levels: List[LevelModel]
    free_directions: FreeDirectionsModel
    solution: Dict[str, str] = Field(default_factory=dict)
    free_parameters: List[str] = Field(default_factory=list)
    sode_residuals: List[str] = Field(default_factory=list)


class VectorFieldModel(_Report):
    chart: str
    mode: str
    components: Dict[str, str]
    free_params: List[str] = Field(default_factory=list)
    domain_level: Optional[int] = None
    extra_constraints: List[str] = Field(default_factory=list)
    bindings: Dict[str, float] = Field(default_factory=dict)
    unique: bool


class AnalysisModel(_Report):
    model: str
    seed: int
    summary: str
    regularity: RegularityModel
    chain: ChainModel
    jet_chain: Optional[ChainModel] = None
    vector_field: Optional[VectorFieldModel] = None


class RunConfigModel(_Report):
    model: str
    ic_label: str
    seed: int
    h: float = Field(gt=0)
    T: float = Field(gt=0)
    ic: Dict[str, float]
    bindings: Dict[str, float] = Field(default_factory=dict)
    params: Dict[str, float] = Field(default_factory=dict)
    projection: bool = True
    mode: str


class DriftModel(_Report):
    max_residual: Dict[str, float] = Field(default_factory=dict)
    mean_residual: Dict[str, float] = Field(default_factory=dict)
    max_drift: float = 0.0
    monotone: bool = True
    samples: int = 0


class TrajectoryModel(_Report):
    coordinates: List[str]
    times: List[float]
    samples: List[List[float]]
    drift: List[float]
    step: float
    projection: bool
    bindings: Dict[str, float] = Field(default_factory=dict)
    defaulted_bindings: List[str] = Field(default_factory=list)
    drift_summary: DriftModel
    run: RunConfigModel


class CheckModel(_Report):
    name: str
    status: str = Field(pattern=r'^(PASS|FAIL|SKIP)$')
    method: str
    message: str = ""
    details: Dict[str, Any] = Field(default_factory=dict)


class VerificationModel(_Report):
    model: str
    seed: int
    regularity: str
    chain_status: str
    passed: bool
    checks: List[CheckModel]


SCHEMAS = {
    'chain': ChainModel,
    'vector_field': VectorFieldModel,
    'trajectory': TrajectoryModel,
    'verification': VerificationModel,
    'analysis': AnalysisModel,
}
