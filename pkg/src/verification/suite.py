"""
Verification suite.
Runs every check for one model in a fixed order and collects the results.
"""

from dataclasses import dataclass, field
from typing import List, Optional, Sequence

from ..geometry.legendre import hessian_report
from ..models.config import EngineConfig
from ..models.system import InitialCondition, SystemSpec
from ..models.vector_field import FieldMode
from ..solvers.constraints import run_algorithm, run_jet_algorithm
from ..solvers.dynamics import solve_Z
from ..utils.logging import get_logger
from .checks import (
    CheckResult, CheckStatus, check_cosymplectic_L, check_energy_balance, check_equivalence,
    check_field_equations, check_flat_agreement, check_kernel_direction, check_pullback_identity,
    check_rank_relations, check_uniqueness,
)

logger = get_logger(__name__)

CHAIN_DEPENDENT = ("flat_agreement", "field_equations", "uniqueness", "equivalence", "energy_balance")


@dataclass
class VerificationReport:
    """
    Results of the suite for one model.

    Attributes:
        model: Model display name
        seed: Root seed of every random draw
        regularity: Hessian classification label
        chain_status: Termination status of the mixed-space chain
        results: Check results in suite order
    """
    model: str
    seed: int
    regularity: str
    chain_status: str
    results: List[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not any(r.failed for r in self.results)

    def failures(self) -> List[CheckResult]:
        return [r for r in self.results if r.failed]

    def to_text(self) -> str:
        lines = [f"{self.model}: {self.regularity}; chain {self.chain_status}; seed {self.seed}"]
        for r in self.results:
            lines.append(f"  [{r.status.value}] {r.name} ({r.method}) {r.message}".rstrip())
        lines.append("PASSED" if self.passed else f"FAILED ({len(self.failures())} check(s))")
        return "\n".join(lines)


def run_suite(
    spec: SystemSpec,
    config: Optional[EngineConfig] = None,
    points: Optional[int] = None,
    h: float = 1e-3,
    horizon: float = 10.0,
    ics: Optional[Sequence[InitialCondition]] = None
) -> VerificationReport:
    """
    Run all checks for a model.

    Args:
        spec: Parsed model
        config: Engine configuration; config.seed drives every random draw
        points: Sample points for the numeric rank checks
        h: Integration step of the flow checks
        horizon: Integration horizon of the flow checks
        ics: Initial conditions for the flow checks (the model's own by default)

    Returns:
        VerificationReport in deterministic check order

    Raises:
        ConstantRankError: The Hessian rank varies, so no chain can be built
    """
    config = config or EngineConfig()
    regularity = hessian_report(spec, config=config)
    results: List[CheckResult] = [
        check_kernel_direction(spec, config),
        check_rank_relations(spec, points, config=config),
        check_cosymplectic_L(spec, regularity, points, config=config),
        check_pullback_identity(spec, config=config),
    ]

    chain = run_algorithm(spec, config=config, regularity=regularity)
    if not chain.status.stabilized:
        results.append(CheckResult(name="chain", status=CheckStatus.FAIL, method="symbolic",
                                   message=f"constraint chain did not stabilize: {chain.status}"))
        results.extend(CheckResult(name=name, status=CheckStatus.SKIP, method="none",
                                   message="chain not stabilized") for name in CHAIN_DEPENDENT)
    else:
        jet_chain = run_jet_algorithm(spec, config)
        raw = solve_Z(spec, chain, FieldMode.RAW, config, regularity)
        fields = [raw]
        if regularity.is_regular:
            fields.append(solve_Z(spec, chain, FieldMode.GRAPH_REFINED, config, regularity))
        flow_field = fields[-1]
        results.extend([
            check_flat_agreement(spec, chain, config),
            check_field_equations(spec, fields, config),
            check_uniqueness(spec, chain, regularity, config),
            check_equivalence(spec, chain, jet_chain, flow_field, regularity, h, horizon, ics, config),
            check_energy_balance(spec, chain, flow_field, h, horizon, ics, config),
        ])

    report = VerificationReport(
        model=spec.display_name,
        seed=config.seed,
        regularity=regularity.label,
        chain_status=str(chain.status),
        results=results,
    )
    for r in report.failures():
        logger.warning("check_failed", model=report.model, check=r.name, message=r.message)
    logger.info("suite_finished", model=report.model, passed=report.passed)
    return report
