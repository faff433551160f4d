"""Closed-form energy and accuracy models for two-precision hybrid solves.

The per-iteration energy at p bits is

    E(p) = k n E_c p + l n r E_t p^2,

where k n flops and l n stored values per outer iteration, with compute
energy, transfer energy, and cache-miss rate all scaling linearly in p
(E_c(p) = p E_c, E_t(p) = p E_t, r(p) = p r); the transfer term is
therefore quadratic in p but carries the small miss-rate constant.

A precision level's attainable accuracy is 2^-(p-s) with slack
s = 3 lg p - 7 + delta; delta = 0 reproduces machine epsilon for
p = 16, 32, 64, and delta absorbs conditioning. All logarithms are base 2
(the algebra relies on lambda^(b / lg lambda) = 2^b).

Iteration counts in the bounds are real-valued; rounding is applied only
when comparing against discrete solver traces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

LG = math.log2

#: Conditioning slack used in the worked two-precision presets. It makes the
#: slack exponent s equal 3 lg p + 1, i.e. single precision is trusted down
#: to 2^-16 and double down to 2^-45.
PRESET_DELTA = 8.0


@dataclass(frozen=True)
class EnergyModelParams:
    """Coefficients of the per-iteration energy formula.

    ``k`` and ``l`` are flops and storage locations per unknown per outer
    iteration. ``e_c``/``e_t`` are per-bit compute/transfer energies and
    ``r`` the per-bit miss rate; absolute units cancel in every ratio the
    model is used for. ``r = 0`` disables the transfer term (used by the
    proportional-energy preset).
    """

    n: int
    k: float = 40.0
    l: float = 36.0
    e_c: float = 1.0
    e_t: float = 40.0
    r: float = 1e-4

    def __post_init__(self):
        if self.n < 1 or self.k <= 0 or self.l <= 0 or self.e_c <= 0 or self.e_t <= 0:
            raise ValueError("model parameters must be positive")
        if self.r < 0:
            raise ValueError("miss rate cannot be negative")


def proportional_params(n: int = 1) -> EnergyModelParams:
    """Preset with E(p) proportional to p (transfer term switched off)."""
    return EnergyModelParams(n=n, k=1.0, l=1.0, e_c=1.0, e_t=1.0, r=0.0)


@dataclass(frozen=True)
class PrecisionLevel:
    """A bit width p with conditioning slack delta; slack s = 3 lg p - 7 + delta."""

    p: int
    delta: float = 0.0

    def __post_init__(self):
        if self.p < 2:
            raise ValueError("bit width must be at least 2")
        if not self.s < self.p:
            raise ValueError("slack must leave a positive accuracy exponent")

    @property
    def s(self) -> float:
        return 3.0 * LG(self.p) - 7.0 + self.delta

    @property
    def exponent(self) -> float:
        """Attainable-accuracy exponent p - s."""
        return self.p - self.s

    @classmethod
    def with_slack(cls, p: int, s: float) -> "PrecisionLevel":
        """Build a level from an explicit slack value."""
        return cls(p, delta=s - (3.0 * LG(p) - 7.0))

    @classmethod
    def preset(cls, p: int) -> "PrecisionLevel":
        """Worked preset s = 3 lg p + 1 (equivalently delta = 8)."""
        return cls(p, delta=PRESET_DELTA)


class RateKind(Enum):
    LINEAR = "linear"
    QUADRATIC = "quadratic"


@dataclass(frozen=True)
class RatePair:
    """Per-iteration contraction: linear e_{k+1} <= e_k / lam, or quadratic
    e_{k+1} <= e_k^2 / lam, with lam > 1."""

    lam: float
    kind: RateKind = RateKind.LINEAR

    def __post_init__(self):
        if not self.lam > 1:
            raise ValueError("contraction factor must exceed 1")


def iteration_energy(params: EnergyModelParams, p: float) -> float:
    """Energy of one outer iteration at p bits: k n E_c p + l n r E_t p^2."""
    if not p > 0:
        raise ValueError("bit width must be positive")
    return params.k * params.n * params.e_c * p + params.l * params.n * params.r * params.e_t * p * p


def energy_ratio(params: EnergyModelParams, p1: float, p2: float) -> float:
    """E(p1) / E(p2) for the given model parameters."""
    return iteration_energy(params, p1) / iteration_energy(params, p2)


def attainable_accuracy(level: PrecisionLevel) -> float:
    """Accuracy floor 2^-(p-s) below which the level stalls."""
    return 2.0 ** (-level.exponent)


def max_iterations(level: PrecisionLevel, rate: RatePair) -> float:
    """Largest iteration count before the level's floor binds (real-valued)."""
    if rate.kind is RateKind.LINEAR:
        return level.exponent / LG(rate.lam)
    return level.exponent / (2.0 * LG(rate.lam)) + 0.5


def baseline_energy(level2: PrecisionLevel, eps: float, lam: float, params: EnergyModelParams) -> float:
    """Energy of a pure high-precision run to accuracy eps at linear rate lam."""
    if not 0 < eps <= 1:
        raise ValueError("eps must lie in (0, 1]")
    return iteration_energy(params, level2.p) * LG(1.0 / eps) / LG(lam)


def hybrid_k2_bound(k1: float, eps: float, lam: float, energy_ratio: float) -> float:
    """High-precision iterations affordable after k1 cheap ones at equal energy."""
    return LG(1.0 / eps) / LG(lam) - k1 * energy_ratio


def hybrid_accuracy_bound(
    level1: PrecisionLevel,
    level2: PrecisionLevel,
    eps: float,
    energy_ratio: float,
    rate: RatePair,
    k1: float | None = None,
) -> float:
    """Accuracy reachable by k1 cheap + k2 expensive iterations within the
    energy of a pure high-precision run to eps.

    ``k1=None`` uses the largest count the low level supports,
    (p1 - s1) / lg lam, which gives the closed-form bound
    2^-min{p2 - s2, (p1 - s1)(1 - rho) + lg(1/eps)} at the linear rate; the
    quadratic rate subtracts rho * lg lam inside the min.
    """
    lg_lam = LG(rate.lam)
    if k1 is None:
        k1 = level1.exponent / lg_lam
    floor_exp = level2.exponent
    gain_exp = k1 * lg_lam * (1.0 - energy_ratio) + LG(1.0 / eps)
    if rate.kind is RateKind.QUADRATIC:
        gain_exp -= energy_ratio * lg_lam
    return 2.0 ** (-min(floor_exp, gain_exp))


def improvement_factor_bound(
    level1: PrecisionLevel,
    level2: PrecisionLevel,
    eps: float,
    energy_ratio: float,
    rate: RatePair | None = None,
) -> float:
    """Guaranteed ratio eps / (hybrid accuracy) at equal energy:
    2^min{lg eps + p2 - s2, (p1 - s1)(1 - rho)} for the linear rate."""
    a_floor = LG(eps) + level2.exponent
    a_gain = level1.exponent * (1.0 - energy_ratio)
    if rate is not None and rate.kind is RateKind.QUADRATIC:
        a_gain -= energy_ratio * LG(rate.lam)
    return 2.0 ** min(a_floor, a_gain)


def optimal_split(
    level1: PrecisionLevel, level2: PrecisionLevel, eps: float, lam: float
) -> tuple[float, float]:
    """Iteration split (k1, k2) that reaches eps at minimum hybrid energy:
    as much low-precision work as the low level's floor permits, the rest
    at high precision."""
    if not 0 < eps <= 1:
        raise ValueError("eps must lie in (0, 1]")
    lg_lam = LG(lam)
    need = LG(1.0 / eps)
    k1 = min(level1.exponent, need) / lg_lam
    k2 = min(level2.exponent, max(0.0, need - k1 * lg_lam)) / lg_lam
    return k1, k2


def hybrid_energy(
    level1: PrecisionLevel,
    level2: PrecisionLevel,
    eps: float,
    lam: float,
    params: EnergyModelParams,
) -> float:
    """Energy E(p2) (k1 rho + k2) of the optimally split hybrid run to eps."""
    k1, k2 = optimal_split(level1, level2, eps, lam)
    rho = energy_ratio(params, level1.p, level2.p)
    return iteration_energy(params, level2.p) * (k1 * rho + k2)


def energy_accuracy_curve(
    level1: PrecisionLevel,
    level2: PrecisionLevel,
    lam: float,
    params: EnergyModelParams,
    eps_grid: Iterable[float],
) -> list[tuple[float, float]]:
    """Tabulate (eps, hybrid energy) over a grid of accuracy targets."""
    return [(float(e), hybrid_energy(level1, level2, e, lam, params)) for e in eps_grid]


def log_eps_grid(eps_min: float, eps_max: float, points: int) -> Sequence[float]:
    """Geometric grid of accuracy targets from eps_max down to eps_min."""
    if not 0 < eps_min <= eps_max <= 1 or points < 2:
        raise ValueError("need 0 < eps_min <= eps_max <= 1 and points >= 2")
    hi, lo = LG(eps_max), LG(eps_min)
    return [2.0 ** (hi + (lo - hi) * i / (points - 1)) for i in range(points)]
