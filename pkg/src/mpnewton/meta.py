"""Precision-ladder meta-strategy and the reinvestment experiment protocol.

The ladder runs the inexact Newton solver at increasing precisions,
warm-starting each level from the previous level's final iterate. A level
that dies in a line-search failure or inner breakdown simply hands its last
iterate to the next, higher precision.

The reinvestment experiment fixes the energy budget at what a pure
double-precision solve to tolerance eps costs, then spends part of the
budget in single precision (to the same eps) and reinvests the savings in
double precision down to eps / f. The experiment succeeds when the hybrid
stays within the budget.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .energymodel import PrecisionLevel, attainable_accuracy
from .errors import TooTightForSingle
from .metering import EnergySample
from .newton import SolverConfig, SolveTrace, Termination, newton_solve
from .precision import WorkingPrecision
from .problems import ProblemInstance


@dataclass(frozen=True)
class LadderLevel:
    precision: WorkingPrecision
    epsilon: float

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("level tolerance must be positive")


@dataclass(frozen=True)
class PrecisionLadder:
    """Ordered precision levels with per-level tolerances.

    Bit widths must strictly increase and tolerances must not increase.
    Explicit tolerances are taken at face value (an unattainable tolerance
    at a low level is how escalation gets exercised); :meth:`from_target`
    builds the safe default schedule eps_l = max(eps, kappa * floor(p_l)).
    """

    levels: tuple[LadderLevel, ...]

    def __post_init__(self):
        if not self.levels:
            raise ValueError("ladder needs at least one level")
        bits = [lv.precision.bits for lv in self.levels]
        if any(b2 <= b1 for b1, b2 in zip(bits, bits[1:])):
            raise ValueError("ladder bit widths must strictly increase")
        tols = [lv.epsilon for lv in self.levels]
        if any(t2 > t1 for t1, t2 in zip(tols, tols[1:])):
            raise ValueError("ladder tolerances must not increase")

    @classmethod
    def from_target(
        cls,
        eps: float,
        precisions: tuple[WorkingPrecision, ...] = (
            WorkingPrecision.BINARY32,
            WorkingPrecision.BINARY64,
        ),
        kappa: float = 4.0,
        delta: float = 0.0,
    ) -> "PrecisionLadder":
        """Schedule each level's tolerance safely above its accuracy floor."""
        levels = tuple(
            LadderLevel(prec, max(eps, kappa * attainable_accuracy(PrecisionLevel(prec.bits, delta))))
            for prec in precisions
        )
        return cls(levels)


def concat_traces(traces: list[SolveTrace]) -> SolveTrace:
    """Merge per-level traces into one, renumbering outer records."""
    if not traces:
        raise ValueError("nothing to concatenate")
    records = []
    for tr in traces:
        for rec in tr.records:
            records.append(replace(rec, k=len(records)))
    last = traces[-1]
    return SolveTrace(
        records=records,
        final_x=last.final_x,
        final_residual=last.final_residual,
        final_fnorm=last.final_fnorm,
        termination=last.termination,
        precision=last.precision,
        total_flops=sum(r.flops for r in records),
        total_loads=sum(r.loads for r in records),
        total_jvp_calls=sum(r.jvp_calls for r in records),
    )


def run_ladder(
    prob: ProblemInstance,
    x0: np.ndarray,
    ladder: PrecisionLadder,
    cfg: SolverConfig,
) -> SolveTrace:
    """Run the solver level by level, warm-starting across precisions.

    Returns the concatenated trace; records carry their own precision, and
    the trace's termination is the final level's outcome.
    """
    x = np.asarray(x0, dtype=np.float64)
    traces = []
    for level in ladder.levels:
        trace = newton_solve(prob, x, replace(cfg, epsilon=level.epsilon), level.precision)
        traces.append(trace)
        x = trace.final_x
    return concat_traces(traces)


class ReinvestStatus(Enum):
    OK = "ok"
    BASELINE_FAILED = "baseline-failed"
    SINGLE_PHASE_FAILED = "single-phase-failed"
    FACTOR_TOO_LARGE = "factor-too-large"


@dataclass
class ReinvestReport:
    """Outcome of one fixed-budget reinvestment experiment."""

    eps: float
    factor: float
    budget_j: float
    baseline_phase: SolveTrace
    baseline_sample: EnergySample
    single_phase: SolveTrace | None = None
    single_sample: EnergySample | None = None
    double_phase: SolveTrace | None = None
    double_sample: EnergySample | None = None
    hybrid_energy_j: float = math.inf
    improvement_factor: float = 0.0
    success: bool = False
    leftover_j: float = -math.inf
    status: ReinvestStatus = ReinvestStatus.OK


def reinvest_experiment(
    prob: ProblemInstance,
    x0: np.ndarray,
    eps: float,
    factor: float,
    meter,
    cfg: SolverConfig | None = None,
    single_floor_delta: float = 0.0,
) -> ReinvestReport:
    """Run the four-step budget experiment.

    1. meter a double-precision baseline to eps (the budget);
    2. run single precision to the same eps;
    3. continue in double precision to eps / factor;
    4. succeed when the hybrid energy stays within the budget.

    A line-search failure in the double continuation marks the factor as
    too large; tolerances below the single-precision accuracy floor are
    rejected up front with :class:`TooTightForSingle`.
    """
    if not factor >= 1:
        raise ValueError("improvement factor must be >= 1")
    floor = attainable_accuracy(PrecisionLevel(32, single_floor_delta))
    if eps < floor:
        raise TooTightForSingle(f"eps={eps:g} is below the single-precision floor {floor:g}")
    cfg = cfg if cfg is not None else SolverConfig(epsilon=eps)

    baseline, baseline_sample = meter.measure(
        lambda: newton_solve(prob, x0, replace(cfg, epsilon=eps), WorkingPrecision.BINARY64)
    )
    report = ReinvestReport(
        eps=eps,
        factor=factor,
        budget_j=baseline_sample.joules,
        baseline_phase=baseline,
        baseline_sample=baseline_sample,
    )
    if baseline.termination is not Termination.TOLERANCE_MET:
        report.status = ReinvestStatus.BASELINE_FAILED
        return report

    single, single_sample = meter.measure(
        lambda: newton_solve(prob, x0, replace(cfg, epsilon=eps), WorkingPrecision.BINARY32)
    )
    report.single_phase = single
    report.single_sample = single_sample
    if single.termination is not Termination.TOLERANCE_MET:
        report.status = ReinvestStatus.SINGLE_PHASE_FAILED
        return report

    warm = single.final_x
    double, double_sample = meter.measure(
        lambda: newton_solve(prob, warm, replace(cfg, epsilon=eps / factor), WorkingPrecision.BINARY64)
    )
    report.double_phase = double
    report.double_sample = double_sample
    report.hybrid_energy_j = single_sample.joules + double_sample.joules
    report.leftover_j = report.budget_j - report.hybrid_energy_j
    if double.termination is not Termination.TOLERANCE_MET:
        report.status = ReinvestStatus.FACTOR_TOO_LARGE
        return report

    report.improvement_factor = eps / double.final_fnorm if double.final_fnorm > 0 else math.inf
    report.success = report.hybrid_energy_j <= report.budget_j
    return report


@dataclass
class SweepEntry:
    factor: float
    report: ReinvestReport | None
    error: str | None = None

    @property
    def double_split(self) -> tuple[int, int] | None:
        """Double-phase (outer, inner) counts, when that phase ran."""
        if self.report is None or self.report.double_phase is None:
            return None
        ph = self.report.double_phase
        return ph.outer_count, ph.inner_count


def gradation_sweep(
    prob: ProblemInstance,
    x0: np.ndarray,
    eps: float,
    factors: list[float],
    meter,
    cfg: SolverConfig | None = None,
) -> list[SweepEntry]:
    """Run the reinvestment experiment once per improvement factor.

    Per-factor failures are recorded in the entry and the sweep continues.
    """
    entries: list[SweepEntry] = []
    for factor in factors:
        try:
            entries.append(SweepEntry(factor, reinvest_experiment(prob, x0, eps, factor, meter, cfg)))
        except Exception as exc:  # noqa: BLE001 - sweep must survive per-factor failures
            entries.append(SweepEntry(factor, None, error=str(exc)))
    return entries
