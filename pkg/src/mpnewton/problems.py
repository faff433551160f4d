"""Benchmark nonlinear systems with matrix-free residual and Jacobian products.

Two variable-dimension test systems are provided:

* ``laplace`` -- an affine system from a central-difference discretization,
  F_i(x) = b_i - x_{i-1} + 4 x_i - x_{i+1} with a fixed right-hand side
  (b_1 = 1, interior b_i = -2, b_n = 4). Well conditioned; the Jacobian is
  the constant tridiagonal (-1, 4, -1).

* ``rosenbrock`` -- the first-order optimality conditions of the chained
  Rosenbrock objective sum_i [ a (1 - x_i)^2 + 100 (x_{i+1} - x_i^2)^2 ].
  Nonlinear and ill conditioned; the Jacobian is the (tridiagonal) Hessian
  of the objective.

Both evaluators are generic over the working precision: all intermediates
stay at the requested format, with no accumulate-in-double shortcuts.
Jacobians are never materialized; only their action on a vector is formed,
in O(n) flops per call.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import NonFiniteResidual
from .precision import TraceCounters, WorkingPrecision

# Per-row operation counts used for energy attribution. Boundary rows are
# counted like interior rows so counts are exactly proportional to n.
LAPLACE_RESIDUAL_FLOPS_PER_ROW = 4
LAPLACE_JVP_FLOPS_PER_ROW = 3
ROSENBROCK_RESIDUAL_FLOPS_PER_ROW = 11
ROSENBROCK_JVP_FLOPS_PER_ROW = 11


class ProblemName(Enum):
    LAPLACE = "laplace"
    ROSENBROCK = "rosenbrock"

    @classmethod
    def from_name(cls, name: str) -> "ProblemName":
        try:
            return cls(name.strip().lower())
        except ValueError:
            raise ValueError(f"unknown problem {name!r}") from None


@dataclass(frozen=True)
class ProblemInstance:
    """Immutable description of one benchmark system.

    ``a`` is the conditioning parameter of the chained Rosenbrock system
    (ignored by the affine problem); its standard value is 1.
    """

    name: ProblemName
    n: int
    a: float = 1.0

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("problem dimension must be at least 2")
        if self.name is ProblemName.ROSENBROCK and not self.a > 0:
            raise ValueError("conditioning parameter a must be positive")


def laplace(n: int) -> ProblemInstance:
    return ProblemInstance(ProblemName.LAPLACE, n)


def rosenbrock(n: int, a: float = 1.0) -> ProblemInstance:
    return ProblemInstance(ProblemName.ROSENBROCK, n, a)


def _laplace_rhs(n: int, dtype) -> np.ndarray:
    b = np.full(n, -2.0, dtype=dtype)
    b[0] = 1.0
    b[-1] = 4.0
    return b


def residual(
    prob: ProblemInstance,
    x: np.ndarray,
    prec: WorkingPrecision,
    counters: TraceCounters | None = None,
) -> np.ndarray:
    """Evaluate F(x) componentwise, entirely at the working precision.

    Raises :class:`NonFiniteResidual` if any component overflows or is NaN.
    """
    dtype = prec.dtype
    x = np.asarray(x, dtype=dtype)
    n = prob.n
    if x.shape != (n,):
        raise ValueError(f"expected x of shape ({n},), got {x.shape}")

    if prob.name is ProblemName.LAPLACE:
        out = _laplace_rhs(n, dtype)
        out += 4.0 * x
        out[:-1] -= x[1:]
        out[1:] -= x[:-1]
        flops = LAPLACE_RESIDUAL_FLOPS_PER_ROW * n
    else:
        two_a = 2.0 * prob.a
        sq = x * x
        gap = x[1:] - sq[:-1]  # x_{i+1} - x_i^2
        out = np.empty(n, dtype=dtype)
        out[0] = two_a * (x[0] - 1.0) - 400.0 * x[0] * gap[0]
        out[1:-1] = (
            200.0 * (x[1:-1] - sq[:-2])
            + two_a * (x[1:-1] - 1.0)
            - 400.0 * x[1:-1] * gap[1:]
        )
        out[-1] = 200.0 * (x[-1] - sq[-2])
        flops = ROSENBROCK_RESIDUAL_FLOPS_PER_ROW * n

    if not np.isfinite(out).all():
        raise NonFiniteResidual(f"non-finite residual for {prob.name.value} (n={n})")
    if counters is not None:
        counters.tally(flops=flops, loads=2 * n)
    return out


def jacobian_vector_product(
    prob: ProblemInstance,
    x: np.ndarray,
    v: np.ndarray,
    prec: WorkingPrecision,
    counters: TraceCounters | None = None,
) -> np.ndarray:
    """Apply the analytic tridiagonal Jacobian of F at x to v.

    The three diagonals are formed on the fly from x (constant for the
    affine problem), so storage stays O(n) and no matrix is built.
    """
    dtype = prec.dtype
    x = np.asarray(x, dtype=dtype)
    v = np.asarray(v, dtype=dtype)
    n = prob.n
    if x.shape != (n,) or v.shape != (n,):
        raise ValueError(f"expected vectors of shape ({n},)")

    if prob.name is ProblemName.LAPLACE:
        out = 4.0 * v
        out[:-1] -= v[1:]
        out[1:] -= v[:-1]
        flops = LAPLACE_JVP_FLOPS_PER_ROW * n
    else:
        two_a = 2.0 * prob.a
        sq = x * x
        diag = np.empty(n, dtype=dtype)
        diag[0] = two_a + 1200.0 * sq[0] - 400.0 * x[1]
        diag[1:-1] = 200.0 + two_a + 1200.0 * sq[1:-1] - 400.0 * x[2:]
        diag[-1] = 200.0
        off = -400.0 * x[:-1]  # symmetric sub/super diagonal
        out = diag * v
        out[:-1] += off * v[1:]
        out[1:] += off * v[:-1]
        flops = ROSENBROCK_JVP_FLOPS_PER_ROW * n

    if not np.isfinite(out).all():
        raise NonFiniteResidual(
            f"non-finite Jacobian-vector product for {prob.name.value} (n={n})"
        )
    if counters is not None:
        counters.tally(flops=flops, loads=3 * n)
    return out
