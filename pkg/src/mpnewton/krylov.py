"""Matrix-free BI-CGSTAB inner solver.

Solves J s = rhs approximately, stopping once the recurrence residual
satisfies ||r_i|| <= eta * ||rhs||. The recurrences follow van der Vorst's
method with the zero-rho failure branch, the ||u|| = 0 early exit (one last
direction update, then exit), and the r = u - omega t update. Exact-zero
tests from the textbook statement are realized as |.| < tiny, where tiny is
the smallest positive normal of the working precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np

from .errors import NonFiniteInner
from .precision import TraceCounters, WorkingPrecision


class InnerStatus(Enum):
    CONVERGED = "converged"
    EARLY_EXIT_ZERO_U = "early-exit-zero-u"
    BREAKDOWN_RHO_ZERO = "breakdown-rho-zero"
    MAX_INNER_EXCEEDED = "max-inner-exceeded"


@dataclass
class InnerResult:
    direction: np.ndarray
    inner_iterations: int
    status: InnerStatus

    @property
    def usable(self) -> bool:
        """Whether the direction is worth handing to the line search."""
        return self.status in (InnerStatus.CONVERGED, InnerStatus.EARLY_EXIT_ZERO_U)


def bicgstab(
    jvp: Callable[[np.ndarray], np.ndarray],
    minus_f: np.ndarray,
    fnorm: float,
    eta: float,
    max_inner: int,
    prec: WorkingPrecision,
    counters: TraceCounters | None = None,
) -> InnerResult:
    """Run BI-CGSTAB on J s = minus_f from the zero initial direction.

    Parameters
    ----------
    jvp : operator computing J @ v at the working precision.
    minus_f : right-hand side (the negated nonlinear residual).
    fnorm : ||minus_f||, reused as the initial recurrence residual norm.
    eta : relative-residual forcing tolerance in [0, 1).
    max_inner : iteration cap; exceeding it reports MAX_INNER_EXCEEDED.

    Every vector operation, dot product, and operator application is
    tallied into ``counters`` when given.
    """
    if not fnorm > 0:
        raise ValueError("fnorm must be positive")
    if max_inner < 1:
        raise ValueError("max_inner must be at least 1")

    dtype = prec.dtype
    tiny = prec.tiny
    n = minus_f.size
    ctr = counters if counters is not None else TraceCounters()

    r = np.array(minus_f, dtype=dtype, copy=True)
    q0 = r.copy()
    s = np.zeros(n, dtype=dtype)
    v = np.zeros(n, dtype=dtype)
    p = np.zeros(n, dtype=dtype)
    one = dtype.type(1.0)
    rho, alpha, omega = one, one, one

    rnorm = fnorm
    threshold = eta * fnorm
    i = 0
    while rnorm > threshold:
        if i >= max_inner:
            return InnerResult(s, i, InnerStatus.MAX_INNER_EXCEEDED)
        i += 1

        rho_next = np.dot(q0, r)
        ctr.tally(flops=2 * n, loads=2 * n)
        if abs(rho_next) < tiny:
            return InnerResult(s, i, InnerStatus.BREAKDOWN_RHO_ZERO)

        beta = (rho_next / rho) * (alpha / omega)
        p = r + beta * (p - omega * v)
        ctr.tally(flops=4 * n, loads=4 * n)

        v = jvp(p)
        ctr.jvp_calls += 1

        qv = np.dot(q0, v)
        ctr.tally(flops=2 * n, loads=2 * n)
        if abs(qv) < tiny:
            # unstated division guard for alpha; same failure class as rho = 0
            return InnerResult(s, i, InnerStatus.BREAKDOWN_RHO_ZERO)
        alpha = rho_next / qv

        u = r - alpha * v
        ctr.tally(flops=2 * n, loads=3 * n)
        unorm = np.linalg.norm(u)
        ctr.tally(flops=2 * n, loads=n)
        if unorm < tiny:
            s = s + alpha * p
            ctr.tally(flops=2 * n, loads=3 * n)
            return InnerResult(s, i, InnerStatus.EARLY_EXIT_ZERO_U)

        t = jvp(u)
        ctr.jvp_calls += 1

        tt = np.dot(t, t)
        ctr.tally(flops=2 * n, loads=n)
        if tt < tiny:
            # omega would divide by ~zero; treat like the rho breakdown
            return InnerResult(s, i, InnerStatus.BREAKDOWN_RHO_ZERO)
        omega = np.dot(t, u) / tt
        ctr.tally(flops=2 * n, loads=2 * n)

        s = s + alpha * p + omega * u
        ctr.tally(flops=4 * n, loads=4 * n)
        r = u - omega * t
        ctr.tally(flops=2 * n, loads=3 * n)
        rnorm = np.linalg.norm(r)
        ctr.tally(flops=2 * n, loads=n)

        if not (math.isfinite(rnorm) and math.isfinite(float(alpha)) and math.isfinite(float(omega))):
            raise NonFiniteInner(f"non-finite recurrence scalar at inner iteration {i}")
        rho = rho_next

    return InnerResult(s, i, InnerStatus.CONVERGED)
