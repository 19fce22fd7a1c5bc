"""
Report generation.
Builds the pydantic report models from engine results and writes JSON, CSV, NDJSON and YAML artifacts.
"""

import csv
import json
import math
import re
from pathlib import Path
from typing import Any, Dict, List, Optional

import ndjson
import yaml
from pydantic import BaseModel

from ..geometry.legendre import RegularityReport
from ..models.chain import ConstraintChain
from ..models.config import OutputConfig
from ..models.trajectory import Trajectory
from ..models.vector_field import VectorFieldSpec
from ..solvers.integrator import drift_report
from ..utils.logging import get_logger
from ..utils.symbolic import render
from ..verification.suite import VerificationReport
from .schemas import (
    SCHEMAS, AnalysisModel, ChainModel, CheckModel, DriftModel, FreeDirectionsModel, LevelModel,
    RegularityModel, RunConfigModel, TrajectoryModel, VectorFieldModel, VerificationModel,
)

logger = get_logger(__name__)

SIGNIFICANT_DIGITS = 15


def _round(value: Any) -> Any:
    """Round floats to 15 significant digits recursively; non-finite floats become None."""
    if isinstance(value, bool) or value is None:
        return value
    if isinstance(value, float):
        if not math.isfinite(value):
            return None
        return float(f"{value:.{SIGNIFICANT_DIGITS}g}")
    if isinstance(value, dict):
        return {str(k): _round(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_round(v) for v in value]
    return value


def to_json(model: BaseModel) -> str:
    """Deterministic JSON: sorted keys, rounded floats."""
    return json.dumps(_round(model.model_dump(mode='json')), sort_keys=True, indent=2, ensure_ascii=False)


def regularity_report(report: RegularityReport) -> RegularityModel:
    return RegularityModel(
        kind=report.kind.value,
        label=report.label,
        rank=report.rank,
        rank_profile=list(report.rank_profile),
        determinant=render(report.determinant),
        rank_drop_witness=report.rank_drop_witness,
    )


def chain_report(chain: ConstraintChain, model: str) -> ChainModel:
    return ChainModel(
        model=model,
        label=chain.label,
        status=str(chain.status),
        final_level=chain.status.level,
        levels=[
            LevelModel(
                level=level.level,
                constraints=level.rendered(),
                cumulative=[render(c) for c in level.cumulative],
                solved={s.name: render(e) for s, e in sorted(level.solved.items(), key=lambda kv: kv[0].name)},
                witness_points=len(level.witness_points),
            )
            for level in chain.levels
        ],
        free_directions=FreeDirectionsModel(
            components=list(chain.free_directions.components),
            kernel_dimensions=list(chain.free_directions.kernel_dimensions),
            basis=[dict(b) for b in chain.free_directions.basis],
        ),
        solution={c.name: render(e) for c, e in zip(chain.chart.coords, chain.solution)},
        free_parameters=[s.name for s in chain.free_parameters],
        sode_residuals=[render(r) for r in chain.sode_residuals],
    )


def vector_field_report(Z: VectorFieldSpec) -> VectorFieldModel:
    return VectorFieldModel(
        chart=Z.chart.label,
        mode=Z.mode.value,
        components=Z.rendered(),
        free_params=[s.name for s in Z.free_params],
        domain_level=Z.domain.level if Z.domain else None,
        extra_constraints=[render(c) for c in Z.extra_constraints],
        bindings=dict(Z.bindings),
        unique=Z.unique,
    )


def analysis_report(
    model: str,
    seed: int,
    summary: str,
    regularity: RegularityReport,
    chain: ConstraintChain,
    jet_chain: Optional[ConstraintChain] = None,
    Z: Optional[VectorFieldSpec] = None
) -> AnalysisModel:
    return AnalysisModel(
        model=model,
        seed=seed,
        summary=summary,
        regularity=regularity_report(regularity),
        chain=chain_report(chain, model),
        jet_chain=chain_report(jet_chain, model) if jet_chain else None,
        vector_field=vector_field_report(Z) if Z else None,
    )


def trajectory_report(traj: Trajectory, run: RunConfigModel) -> TrajectoryModel:
    summary = drift_report(traj)
    return TrajectoryModel(
        coordinates=traj.chart.names(),
        times=[float(t) for t in traj.times],
        samples=[[float(v) for v in row] for row in traj.states],
        drift=[float(d) for d in traj.drift],
        step=traj.step,
        projection=traj.projection,
        bindings=dict(traj.bindings),
        defaulted_bindings=list(traj.defaulted),
        drift_summary=DriftModel(
            max_residual=summary.max_residual,
            mean_residual=summary.mean_residual,
            max_drift=summary.max_drift,
            monotone=summary.monotone,
            samples=summary.samples,
        ),
        run=run,
    )


def verification_report(report: VerificationReport) -> VerificationModel:
    return VerificationModel(
        model=report.model,
        seed=report.seed,
        regularity=report.regularity,
        chain_status=report.chain_status,
        passed=report.passed,
        checks=[
            CheckModel(name=r.name, status=r.status.value, method=r.method, message=r.message,
                       details=_round(r.details))
            for r in report.results
        ],
    )


def write_json(model: BaseModel, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(to_json(model) + "\n", encoding='utf-8')
    return path


def write_trajectory_csv(traj: Trajectory, path: Path) -> Path:
    """One row per sample: coordinates in chart order, then drift."""
    path.parent.mkdir(parents=True, exist_ok=True)
    drift = traj.drift
    with open(path, 'w', newline='', encoding='utf-8') as f:
        writer = csv.writer(f)
        writer.writerow(traj.header())
        for row, d in zip(traj.states, drift):
            writer.writerow([repr(float(v)) for v in row] + [repr(float(d))])
    return path


def write_drift_log(traj: Trajectory, path: Path) -> Path:
    """NDJSON record per sample: time, max drift and per-constraint residuals."""
    path.parent.mkdir(parents=True, exist_ok=True)
    records: List[Dict[str, Any]] = []
    drift = traj.drift
    for i, t in enumerate(traj.times):
        residuals = {name: float(traj.residuals[i, k]) for k, name in enumerate(traj.constraint_names)}
        records.append(_round({"step": i, "time": float(t), "drift": float(drift[i]), "residuals": residuals}))
    with open(path, 'w', encoding='utf-8') as f:
        ndjson.dump(records, f, sort_keys=True)
        f.write('\n')
    return path


def write_run_config(config: Dict[str, Any], path: Path) -> Path:
    """YAML echo of the effective run configuration."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8') as f:
        yaml.safe_dump(_round(config), f, sort_keys=True, default_flow_style=False, allow_unicode=True, indent=2)
    return path


def export_schemas(directory: Path) -> List[Path]:
    """Write <name>.schema.json for every report model."""
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, model in SCHEMAS.items():
        path = directory / f"{name}.schema.json"
        path.write_text(json.dumps(model.model_json_schema(), sort_keys=True, indent=2) + "\n", encoding='utf-8')
        paths.append(path)
    logger.info("schemas_exported", directory=str(directory), count=len(paths))
    return paths


def slug(name: str) -> str:
    """File-name safe form of a model name."""
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", name).strip("_") or "model"


class ReportWriter:
    """Writes command artifacts under the output directory layout."""

    def __init__(self, output_config: OutputConfig):
        self.output_config = output_config

    def write_analysis(self, report: AnalysisModel) -> Path:
        path = self.output_config.reports_dir / f"{slug(report.model)}_analysis.json"
        return write_json(report, path)

    def write_verification(self, report: VerificationModel) -> Path:
        path = self.output_config.reports_dir / f"{slug(report.model)}_verification.json"
        return write_json(report, path)

    def write_trajectory(self, traj: Trajectory, run: RunConfigModel) -> Dict[str, Path]:
        """CSV, JSON, NDJSON drift log and YAML run config for one trajectory."""
        stem = f"{slug(run.model)}_{slug(run.ic_label)}"
        base = self.output_config.trajectories_dir
        paths = {
            'csv': write_trajectory_csv(traj, base / f"{stem}.csv"),
            'json': write_json(trajectory_report(traj, run), base / f"{stem}.json"),
            'drift': write_drift_log(traj, self.output_config.logs_dir / f"{stem}_drift.ndjson"),
            'config': write_run_config(run.model_dump(mode='json'), base / f"{stem}_run.yaml"),
        }
        logger.info("trajectory_written", model=run.model, files={k: str(v) for k, v in paths.items()})
        return paths
