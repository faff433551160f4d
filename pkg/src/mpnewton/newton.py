"""Outer inexact Newton iteration at a fixed working precision.

Each outer iteration approximately solves J(x_k) s = -F(x_k) with BI-CGSTAB
to a relative residual eta_k, globalizes the step with a backtracking
Armijo search on the residual norm, and then tightens the forcing term via
eta_{k+1} = min(sqrt(||F(x_{k+1})||), 1/2).

Failures (line search, inner breakdown, non-finite arithmetic) terminate
the solve and are reported as the trace's termination status rather than
raised, so a caller can react by escalating precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from functools import partial

import numpy as np

from .errors import LineSearchFailure, NonFiniteInner, NonFiniteResidual
from .krylov import InnerStatus, bicgstab
from .precision import TraceCounters, WorkingPrecision
from .problems import ProblemInstance, jacobian_vector_product, residual


@dataclass(frozen=True)
class SolverConfig:
    """Outer-iteration parameters.

    ``max_inner=None`` means the 2n safeguard cap (the textbook loop has no
    cap; a cap exceeded at low precision is treated like a breakdown).
    """

    epsilon: float
    eta0: float = 0.5
    max_outer: int = 200
    max_inner: int | None = None
    armijo_c: float = 1e-4
    backtrack_factor: float = 0.5
    max_backtracks: int = 40

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if not 0 < self.eta0 < 1:
            raise ValueError("eta0 must lie in (0, 1)")
        if not 0 < self.armijo_c < 1:
            raise ValueError("armijo_c must lie in (0, 1)")
        if not 0 < self.backtrack_factor < 1:
            raise ValueError("backtrack_factor must lie in (0, 1)")
        if self.max_outer < 1 or self.max_backtracks < 0:
            raise ValueError("max_outer must be >= 1 and max_backtracks >= 0")

    def effective_max_inner(self, n: int) -> int:
        return self.max_inner if self.max_inner is not None else 2 * n


class Termination(Enum):
    TOLERANCE_MET = "tolerance-met"
    LINE_SEARCH_FAILURE = "line-search-failure"
    INNER_BREAKDOWN = "inner-breakdown"
    MAX_OUTER_EXCEEDED = "max-outer-exceeded"
    NON_FINITE = "non-finite"


class StepStatus(Enum):
    ACCEPTED = "accepted"
    LINE_SEARCH_FAILURE = "line-search-failure"
    INNER_BREAKDOWN = "inner-breakdown"
    NON_FINITE = "non-finite"


@dataclass(frozen=True)
class OuterRecord:
    """One outer iteration: residual norms, forcing term, step, and costs."""

    k: int
    fnorm_before: float
    fnorm_after: float
    eta_k: float
    inner_iterations: int
    step_length: float
    flops: int
    loads: int
    jvp_calls: int
    status: StepStatus
    precision: WorkingPrecision


@dataclass
class SolveTrace:
    records: list[OuterRecord]
    final_x: np.ndarray
    final_residual: np.ndarray
    final_fnorm: float
    termination: Termination
    precision: WorkingPrecision
    total_flops: int = 0
    total_loads: int = 0
    total_jvp_calls: int = 0

    @property
    def outer_count(self) -> int:
        """Number of accepted outer iterations."""
        return sum(1 for r in self.records if r.status is StepStatus.ACCEPTED)

    @property
    def inner_count(self) -> int:
        return sum(r.inner_iterations for r in self.records if r.status is StepStatus.ACCEPTED)

    def succeeded(self) -> bool:
        return self.termination is Termination.TOLERANCE_MET


@dataclass(frozen=True)
class AcceptedStep:
    """Line-search outcome: the accepted point with its residual, reused by
    the caller so F is never evaluated twice at the same iterate."""

    step_length: float
    x: np.ndarray
    residual: np.ndarray
    fnorm: float


def update_forcing(fnorm_next: float) -> float:
    """Forcing-term update min(sqrt(||F||), 1/2)."""
    if fnorm_next < 0:
        raise ValueError("residual norm cannot be negative")
    return min(math.sqrt(fnorm_next), 0.5)


def armijo_line_search(
    prob: ProblemInstance,
    x: np.ndarray,
    s: np.ndarray,
    fnorm0: float,
    cfg: SolverConfig,
    prec: WorkingPrecision,
    counters: TraceCounters | None = None,
) -> AcceptedStep:
    """Backtrack over delta in {1, beta, beta^2, ...} on the merit ||F||.

    Accepts the first (largest) delta with
    ||F(x + delta s)|| <= (1 - armijo_c * delta) * fnorm0. A trial whose
    residual overflows counts as a failed trial and backtracking continues.
    Raises :class:`LineSearchFailure` when every trial fails, which is the
    canonical symptom of a working precision that is too low.
    """
    if not fnorm0 > 0:
        raise ValueError("fnorm0 must be positive")
    n = prob.n
    delta = 1.0
    for _ in range(cfg.max_backtracks + 1):
        trial = x + delta * s
        if counters is not None:
            counters.tally(flops=2 * n, loads=3 * n)
        try:
            f_trial = residual(prob, trial, prec, counters)
        except NonFiniteResidual:
            delta *= cfg.backtrack_factor
            continue
        fnorm_trial = float(np.linalg.norm(f_trial))
        if counters is not None:
            counters.tally(flops=2 * n, loads=n)
        if math.isfinite(fnorm_trial) and fnorm_trial <= (1.0 - cfg.armijo_c * delta) * fnorm0:
            return AcceptedStep(delta, trial, f_trial, fnorm_trial)
        delta *= cfg.backtrack_factor
    raise LineSearchFailure(
        f"no sufficient decrease after {cfg.max_backtracks} backtracks (||F||={fnorm0:.3e})"
    )


def newton_solve(
    prob: ProblemInstance,
    x0: np.ndarray,
    cfg: SolverConfig,
    prec: WorkingPrecision,
) -> SolveTrace:
    """Run the inexact Newton outer loop until ||F|| <= epsilon or failure.

    The returned trace records one entry per outer iteration (a trailing
    entry with a failure status when the solve dies mid-iteration). The
    cost of forming the initial residual is folded into the first record,
    so trace totals are exactly the sum over records.
    """
    counters = TraceCounters()
    x = prec.cast(x0)
    if x.shape != (prob.n,):
        raise ValueError(f"x0 must have shape ({prob.n},)")
    n = prob.n
    max_inner = cfg.effective_max_inner(n)

    records: list[OuterRecord] = []
    span_start = counters.snapshot()

    def close_record(fnorm_before, fnorm_after, eta_k, inner, delta, status):
        nonlocal span_start
        dflops, dloads, djvp = counters.since(span_start)
        records.append(
            OuterRecord(
                k=len(records),
                fnorm_before=fnorm_before,
                fnorm_after=fnorm_after,
                eta_k=eta_k,
                inner_iterations=inner,
                step_length=delta,
                flops=dflops,
                loads=dloads,
                jvp_calls=djvp,
                status=status,
                precision=prec,
            )
        )
        span_start = counters.snapshot()

    def finish(termination, final_f, fnorm):
        return SolveTrace(
            records=records,
            final_x=x,
            final_residual=final_f,
            final_fnorm=fnorm,
            termination=termination,
            precision=prec,
            total_flops=sum(r.flops for r in records),
            total_loads=sum(r.loads for r in records),
            total_jvp_calls=sum(r.jvp_calls for r in records),
        )

    try:
        f = residual(prob, x, prec, counters)
    except NonFiniteResidual:
        return finish(Termination.NON_FINITE, np.full(n, np.nan, dtype=prec.dtype), math.inf)
    fnorm = float(np.linalg.norm(f))
    counters.tally(flops=2 * n, loads=n)
    if not math.isfinite(fnorm):
        return finish(Termination.NON_FINITE, f, math.inf)

    eta = cfg.eta0
    while fnorm > cfg.epsilon:
        if len(records) >= cfg.max_outer:
            return finish(Termination.MAX_OUTER_EXCEEDED, f, fnorm)

        minus_f = -f
        counters.tally(flops=n, loads=2 * n)
        jvp = partial(jacobian_vector_product, prob, x, prec=prec, counters=counters)
        try:
            inner = bicgstab(jvp, minus_f, fnorm, eta, max_inner, prec, counters)
        except (NonFiniteInner, NonFiniteResidual):
            close_record(fnorm, fnorm, eta, 0, 0.0, StepStatus.NON_FINITE)
            return finish(Termination.NON_FINITE, f, fnorm)

        if not inner.usable:
            close_record(fnorm, fnorm, eta, inner.inner_iterations, 0.0, StepStatus.INNER_BREAKDOWN)
            return finish(Termination.INNER_BREAKDOWN, f, fnorm)

        try:
            step = armijo_line_search(prob, x, inner.direction, fnorm, cfg, prec, counters)
        except LineSearchFailure:
            close_record(fnorm, fnorm, eta, inner.inner_iterations, 0.0, StepStatus.LINE_SEARCH_FAILURE)
            return finish(Termination.LINE_SEARCH_FAILURE, f, fnorm)

        x, f = step.x, step.residual
        close_record(fnorm, step.fnorm, eta, inner.inner_iterations, step.step_length, StepStatus.ACCEPTED)
        fnorm = step.fnorm
        if not math.isfinite(fnorm):
            return finish(Termination.NON_FINITE, f, fnorm)
        eta = update_forcing(fnorm)

    return finish(Termination.TOLERANCE_MET, f, fnorm)
