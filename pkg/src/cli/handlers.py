"""
Command handlers.
Each handler runs one subcommand end to end, writes its artifacts and hands a CommandResult to the output manager.
"""

from dataclasses import replace
from typing import Dict, List, Optional

from ..generators.reports import (
    ReportWriter, analysis_report, export_schemas, verification_report,
)
from ..generators.schemas import RunConfigModel
from ..geometry.legendre import RegularityReport, hessian_report
from ..models.chain import ConstraintChain
from ..models.config import OutputConfig
from ..models.system import InitialCondition, SystemSpec
from ..models.vector_field import FieldMode, VectorFieldSpec
from ..parsers.lagrangian_dsl import load_system
from ..solvers.constraints import run_algorithm, run_jet_algorithm
from ..solvers.dynamics import solve_Z
from ..solvers.integrator import drift_report, integrate, lift_initial_condition
from ..utils.errors import InitialConditionError, ModelError, NonStabilizingChainError, VerificationFailure
from ..utils.logging import get_logger
from ..verification.suite import run_suite
from .config import CLIConfig
from .formatters import CommandResult, OutputManager, ResultTable

logger = get_logger(__name__)


def _plural(count: int, word: str) -> str:
    return f"{count} {word}" if count == 1 else f"{count} {word}s"


def analysis_summary(regularity: RegularityReport, chain: ConstraintChain, Z: VectorFieldSpec) -> str:
    """One-line summary printed by analyze."""
    if regularity.is_regular:
        where = "on graph_L" if Z.mode is FieldMode.GRAPH_REFINED else "on the final level"
        state = "unique" if Z.unique else "not unique"
        return f"{regularity.label}; chain stabilized at level {chain.status.level}; Z {state} {where}"
    return f"{regularity.label}; chain levels {len(chain.levels)}; {_plural(len(Z.free_params), 'free parameter')}"


def parse_initial_condition(spec: SystemSpec, value: Optional[str]) -> InitialCondition:
    """
    Resolve --ic: a label from the model, or 't,q1..qn,qd1..qdn'.

    Raises:
        InitialConditionError: No condition given and none in the model, or a malformed tuple
    """
    if value is None:
        ic = spec.initial_condition()
        if ic is None:
            raise InitialConditionError("no initial condition: pass --ic or add an ic block to the model")
        return ic
    ic = spec.initial_condition(value)
    if ic is not None:
        return ic
    try:
        numbers = [float(v) for v in value.split(',') if v.strip()]
    except ValueError:
        raise InitialConditionError(f"'{value}' is neither an ic label of the model nor a list of numbers")
    expected = 2 * spec.n + 1
    if len(numbers) != expected:
        raise InitialConditionError(f"initial condition needs {expected} numbers (t, q, qd), got {len(numbers)}")
    n = spec.n
    return InitialCondition(label="cli", t=numbers[0], q=tuple(numbers[1:n + 1]), qd=tuple(numbers[n + 1:]))


class CommandHandler:
    """Shared model loading and output plumbing."""

    def __init__(self, config: CLIConfig):
        """Initialise handler with configuration."""
        self.config = config
        self.engine = config.engine_config()
        self.output_config = OutputConfig(config.output_dir)
        self.writer = ReportWriter(self.output_config)
        self.output_manager = OutputManager(config.output_mode)

    def load(self) -> SystemSpec:
        """Parse the model file and apply --param overrides."""
        spec = load_system(self.config.model_file)
        unknown = sorted(set(self.config.params) - set(spec.params))
        if unknown:
            raise ModelError(f"unknown parameter(s) {', '.join(unknown)}; declared: {', '.join(spec.params) or 'none'}")
        if self.config.params:
            spec = replace(spec, params={**spec.params, **self.config.params})
        logger.info("model_loaded", model=spec.display_name, n=spec.n, params=dict(spec.params))
        return spec

    def analyze(self, spec: SystemSpec, max_levels: Optional[int] = None):
        regularity = hessian_report(spec, config=self.engine)
        chain = run_algorithm(spec, max_levels, self.engine, regularity)
        return regularity, chain

    def run(self) -> int:
        raise NotImplementedError


class AnalyzeHandler(CommandHandler):
    """Regularity, both constraint chains and the solved vector field."""

    def run(self) -> int:
        spec = self.load()
        regularity, chain = self.analyze(spec, self.config.max_levels)
        if not chain.status.stabilized:
            report = analysis_report(spec.display_name, self.engine.seed, f"{regularity.label}; {chain.status}",
                                     regularity, chain)
            path = self.writer.write_analysis(report)
            raise NonStabilizingChainError(
                f"constraint chain ended with {chain.status} after {len(chain.levels)} levels; report at {path}"
            )

        jet_chain = run_jet_algorithm(spec, self.engine)
        mode = FieldMode.GRAPH_REFINED if regularity.is_regular else FieldMode.RAW
        Z = solve_Z(spec, chain, mode, self.engine, regularity)
        summary = analysis_summary(regularity, chain, Z)
        report = analysis_report(spec.display_name, self.engine.seed, summary, regularity, chain, jet_chain, Z)
        path = self.writer.write_analysis(report)

        self.output_manager.emit(CommandResult(
            command="analyze",
            model=spec.display_name,
            ok=True,
            summary=summary,
            tables=[
                ResultTable("Constraint chain (mixed)", ("level", "new constraints"),
                            [(lvl.level, ", ".join(lvl.rendered()) or "(none)") for lvl in chain.levels]),
                ResultTable("Constraint chain (jet)", ("level", "new constraints"),
                            [(lvl.level, ", ".join(lvl.rendered()) or "(none)") for lvl in jet_chain.levels]),
                ResultTable(f"Z ({Z.mode.value})", ("coordinate", "component"),
                            [(name, text) for name, text in Z.rendered().items()]),
            ],
            details=report.model_dump(mode='json'),
            artifacts={"analysis": str(path)},
        ))
        return 0


class SimulateHandler(CommandHandler):
    """Lift an initial condition and integrate the flow."""

    def run(self) -> int:
        spec = self.load()
        regularity, chain = self.analyze(spec)
        if not chain.status.stabilized:
            raise NonStabilizingChainError(f"cannot simulate: constraint chain ended with {chain.status}")

        if self.config.mode:
            mode = FieldMode(self.config.mode)
        else:
            mode = FieldMode.GRAPH_REFINED if regularity.is_regular else FieldMode.RAW
        Z = solve_Z(spec, chain, mode, self.engine, regularity)

        ic = parse_initial_condition(spec, self.config.ic)
        x0 = lift_initial_condition(spec, chain, ic, config=self.engine)
        traj = integrate(
            spec, Z, x0, self.config.h, self.config.T,
            bindings=self.config.bindings,
            config=self.engine,
            projection=self.config.projection,
            progress=self.config.progress,
        )

        ic_values: Dict[str, float] = {"t": ic.t}
        ic_values.update({f"q{a + 1}": v for a, v in enumerate(ic.q)})
        ic_values.update({f"qd{a + 1}": v for a, v in enumerate(ic.qd)})
        run = RunConfigModel(
            model=spec.display_name,
            ic_label=ic.label,
            seed=self.engine.seed,
            h=self.config.h,
            T=self.config.T,
            ic=ic_values,
            bindings=dict(self.config.bindings),
            params=dict(spec.params),
            projection=self.config.projection,
            mode=Z.mode.value,
        )
        paths = self.writer.write_trajectory(traj, run)

        summary = drift_report(traj)
        final = traj.final()
        self.output_manager.emit(CommandResult(
            command="simulate",
            model=spec.display_name,
            ok=True,
            summary=(f"{spec.display_name}; {len(traj)} samples to t={traj.times[-1]:.6g}; "
                     f"max drift {summary.max_drift:.3g}"),
            tables=[ResultTable("Final state", ("coordinate", "value"),
                                [(name, f"{value:.12g}") for name, value in final.items()])],
            details={"run": run.model_dump(mode='json'), "final": final, "max_drift": summary.max_drift,
                     "defaulted_bindings": list(traj.defaulted)},
            artifacts={k: str(v) for k, v in paths.items()},
        ))
        return 0


class VerifyHandler(CommandHandler):
    """Run the verification suite and write its JSON report."""

    def run(self) -> int:
        spec = self.load()
        report = run_suite(spec, self.engine, self.config.points, self.config.h, self.config.T)
        model = verification_report(report)
        path = self.writer.write_verification(model)

        rows: List[tuple] = [(r.name, r.status.value, r.method, r.message) for r in report.results]
        self.output_manager.emit(CommandResult(
            command="verify",
            model=spec.display_name,
            ok=report.passed,
            summary=report.to_text().splitlines()[0] + ("; passed" if report.passed else "; failed"),
            tables=[ResultTable("Checks", ("check", "status", "method", "message"), rows)],
            details=model.model_dump(mode='json'),
            artifacts={"verification": str(path)},
        ))
        if not report.passed:
            names = ", ".join(r.name for r in report.failures())
            raise VerificationFailure(f"verification failed ({names}); report at {path}", str(path))
        return 0


class SchemasHandler:
    """Export the JSON schemas of every report."""

    def __init__(self, config: CLIConfig):
        self.config = config
        self.output_manager = OutputManager(config.output_mode)

    def run(self) -> int:
        paths = export_schemas(self.config.schema_dir)
        self.output_manager.emit(CommandResult(
            command="schemas",
            model="-",
            ok=True,
            summary=f"{len(paths)} schemas written to {self.config.schema_dir}",
            artifacts={p.name: str(p) for p in paths},
        ))
        return 0


HANDLERS = {
    "analyze": AnalyzeHandler,
    "simulate": SimulateHandler,
    "verify": VerifyHandler,
    "schemas": SchemasHandler,
}
