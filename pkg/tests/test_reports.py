import csv
import json
from pathlib import Path

import ndjson
import pytest
import yaml

from src.generators.reports import (
    ReportWriter, analysis_report, chain_report, export_schemas, slug, to_json, trajectory_report,
    verification_report, vector_field_report,
)
from src.generators.schemas import SCHEMAS, RunConfigModel
from src.geometry.legendre import hessian_report
from src.models.config import OutputConfig
from src.models.vector_field import FieldMode
from src.solvers.dynamics import solve_Z
from src.solvers.integrator import integrate, lift_initial_condition
from src.verification.checks import CheckResult, CheckStatus
from src.verification.suite import VerificationReport

ROOT = Path(__file__).resolve().parent.parent


@pytest.fixture(scope="module")
def oscillator_run(oscillator, chains, config):
    chain = chains["oscillator"]
    Z = solve_Z(oscillator, chain, FieldMode.GRAPH_REFINED, config)
    ic = oscillator.initial_condition("start")
    x0 = lift_initial_condition(oscillator, chain, ic)
    traj = integrate(oscillator, Z, x0, 0.1, 1.0, config=config)
    run = RunConfigModel(model="oscillator", ic_label="start", seed=42, h=0.1, T=1.0,
                         ic={"t": 0.0, "q1": 1.0, "qd1": 0.0}, mode="graph_refined")
    return Z, traj, run


def test_analysis_json_is_deterministic(oscillator, chains, config, oscillator_run):
    Z, _, _ = oscillator_run
    regularity = hessian_report(oscillator, config=config)
    report = analysis_report("oscillator", 42, "Regular", regularity, chains["oscillator"], Z=Z)
    text = to_json(report)
    assert text == to_json(report)
    data = json.loads(text)
    assert list(data) == sorted(data)
    assert data["regularity"]["label"] == "Regular"
    assert data["chain"]["status"] == "Stabilized(2)"
    assert data["vector_field"]["components"]["p1"] == "-q1"
    assert data["jet_chain"] is None


def test_chain_report_lists_levels(singular2, chains):
    report = chain_report(chains["singular2"], "singular2")
    assert [level.level for level in report.levels] == [1, 2, 3, 4]
    assert report.final_level == 4
    assert report.levels[0].constraints == []
    assert set(report.levels[-1].solved) == {"p1", "p2", "qd1", "qd2"}


def test_vector_field_report_marks_free_parameters(degenerate, chains, config):
    Z = solve_Z(degenerate, chains["degenerate"], FieldMode.RAW, config)
    report = vector_field_report(Z)
    assert report.free_params == ["u1"]
    assert not report.unique
    assert report.components["qd1"] == "u1"


def test_floats_are_rounded_and_non_finite_dropped():
    result = CheckResult(name="x", status=CheckStatus.PASS, method="numeric",
                         details={"gap": 0.1 + 0.2, "bad": float("nan")})
    report = VerificationReport(model="m", seed=1, regularity="Regular", chain_status="Stabilized(2)",
                                results=[result])
    data = json.loads(to_json(verification_report(report)))
    details = data["checks"][0]["details"]
    assert details["gap"] == 0.3
    assert details["bad"] is None
    assert data["passed"] is True


def test_trajectory_artifacts(output_dir, oscillator_run):
    _, traj, run = oscillator_run
    writer = ReportWriter(OutputConfig(output_dir))
    paths = writer.write_trajectory(traj, run)

    with open(paths["csv"], newline="", encoding="utf-8") as f:
        rows = list(csv.reader(f))
    assert rows[0] == ["t", "q1", "tau", "p1", "qd1", "drift"]
    assert len(rows) == len(traj) + 1
    assert float(rows[1][1]) == 1.0

    with open(paths["drift"], encoding="utf-8") as f:
        records = ndjson.load(f)
    assert len(records) == len(traj)
    assert records[0]["step"] == 0
    assert set(records[0]["residuals"]) == set(traj.constraint_names)

    with open(paths["config"], encoding="utf-8") as f:
        config = yaml.safe_load(f)
    assert config["mode"] == "graph_refined"
    assert config["h"] == 0.1

    data = json.loads(paths["json"].read_text(encoding="utf-8"))
    assert data["coordinates"] == ["t", "q1", "tau", "p1", "qd1"]
    assert len(data["samples"]) == len(traj)
    assert data["run"]["ic_label"] == "start"
    assert paths["csv"].parent == output_dir / "trajectories"
    assert paths["drift"].parent == output_dir / "logs"


def test_trajectory_model_validates(oscillator_run):
    _, traj, run = oscillator_run
    model = trajectory_report(traj, run)
    assert model.drift_summary.samples == len(traj)
    assert model.step == pytest.approx(0.1)


def test_run_config_rejects_nonpositive_step():
    with pytest.raises(ValueError):
        RunConfigModel(model="m", ic_label="a", seed=1, h=0.0, T=1.0, ic={}, mode="raw")


def test_slug():
    assert slug("two words/and more") == "two_words_and_more"
    assert slug("///") == "model"


def test_export_schemas(tmp_path):
    paths = export_schemas(tmp_path / "schemas")
    assert sorted(p.name for p in paths) == sorted(f"{name}.schema.json" for name in SCHEMAS)
    for path in paths:
        schema = json.loads(path.read_text(encoding="utf-8"))
        assert schema["type"] == "object"


@pytest.mark.parametrize("name", sorted(SCHEMAS))
def test_shipped_schemas_match_models(name):
    shipped = json.loads((ROOT / "schemas" / f"{name}.schema.json").read_text(encoding="utf-8"))
    generated = SCHEMAS[name].model_json_schema()
    assert set(shipped["properties"]) == set(generated["properties"])
    assert sorted(shipped.get("required", [])) == sorted(generated.get("required", []))
