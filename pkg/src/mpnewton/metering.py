"""Energy attribution for solver runs.

Two backends:

* modeled -- deterministic Joules computed from a trace's operation
  counters via the per-iteration energy formula, using each record's own
  precision. Pure function of the trace and model parameters.

* measured -- wraps a repeatable action, reading a platform energy counter
  before and after each of ``trials`` runs (default 31) and reporting the
  median with the sample standard deviation. Counter wraparound is handled
  modulo the counter's stated range. At most one measurement runs at a
  time process-wide.

The hardware path reads powercap-style ``energy_uj`` files (decimal
integer microjoules, wrapping at the value in the sibling
``max_energy_range_uj``). A stub counter driven by a plain-text file of
newline-separated integers stands in for hardware in tests.
"""

from __future__ import annotations

import os
import statistics
import threading
import time
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .errors import CalibrationFailed, CounterUnavailable, IncompleteTrace
from .energymodel import EnergyModelParams
from .newton import SolveTrace

ENERGY_PATH_ENV = "MPNEWTON_ENERGY_PATH"
DEFAULT_RAPL_PATH = "/sys/class/powercap/intel-rapl:0/energy_uj"
DEFAULT_TRIALS = 31

_measurement_lock = threading.Lock()


class BackendKind(Enum):
    MODELED = "modeled"
    MEASURED = "measured"


@dataclass(frozen=True)
class EnergySample:
    joules: float
    backend: BackendKind
    duration_s: float = 0.0
    sample_count: int = 1
    std_dev: float = 0.0

    def __post_init__(self):
        if self.joules < 0 or self.sample_count < 1:
            raise ValueError("invalid energy sample")


@dataclass(frozen=True)
class CostTable:
    """Per-value costs at a fixed bit width, from the linear-in-p scaling
    E_c(p) = p E_c, E_t(p) = p E_t, r(p) = p r."""

    flop_energy: float
    transfer_energy: float
    miss_rate: float

    @classmethod
    def at_bits(cls, params: EnergyModelParams, p: int) -> "CostTable":
        return cls(flop_energy=p * params.e_c, transfer_energy=p * params.e_t, miss_rate=p * params.r)


def modeled_energy(trace: SolveTrace, params: EnergyModelParams) -> EnergySample:
    """Deterministic energy of a trace: sum over outer records of
    flops * E_c p + loads * r p * E_t p, at each record's precision."""
    joules = 0.0
    for rec in trace.records:
        if rec.flops is None or rec.loads is None:
            raise IncompleteTrace(f"record {rec.k} lacks operation counters")
        costs = CostTable.at_bits(params, rec.precision.bits)
        joules += rec.flops * costs.flop_energy + rec.loads * costs.miss_rate * costs.transfer_energy
    return EnergySample(joules=joules, backend=BackendKind.MODELED)


class EnergyCounter:
    """Monotone (modulo wraparound) cumulative energy counter in microjoules."""

    max_range_uj: int

    def read_uj(self) -> int:
        raise NotImplementedError


class PowercapCounter(EnergyCounter):
    """Package-domain energy counter exposed through the powercap filesystem."""

    def __init__(self, path: str | os.PathLike | None = None):
        raw = path or os.environ.get(ENERGY_PATH_ENV) or DEFAULT_RAPL_PATH
        self.path = Path(raw)
        if not self.path.exists():
            raise CounterUnavailable(f"no energy counter at {self.path}")
        max_path = self.path.parent / "max_energy_range_uj"
        try:
            self.max_range_uj = int(max_path.read_text().strip())
        except (OSError, ValueError):
            self.max_range_uj = 2**60

    def read_uj(self) -> int:
        # PermissionError propagates: the counter exists but is not readable
        return int(self.path.read_text().strip())


class StubCounter(EnergyCounter):
    """Replays a fixed sequence of readings; for tests and calibration demos."""

    def __init__(self, readings_uj: Sequence[int], max_range_uj: int = 2**60):
        self._readings = list(readings_uj)
        self._next = 0
        self.max_range_uj = max_range_uj

    @classmethod
    def from_file(cls, path: str | os.PathLike, max_range_uj: int = 2**60) -> "StubCounter":
        lines = Path(path).read_text().split()
        return cls([int(tok) for tok in lines], max_range_uj)

    def read_uj(self) -> int:
        if self._next >= len(self._readings):
            raise CounterUnavailable("stub counter exhausted")
        value = self._readings[self._next]
        self._next += 1
        return value


def counter_delta_uj(start: int, end: int, max_range_uj: int) -> int:
    """Energy consumed between two readings, unwrapping at most one wrap."""
    return (end - start) % max_range_uj


def measured_energy(
    run: Callable[[], object],
    counter: EnergyCounter,
    trials: int = DEFAULT_TRIALS,
) -> EnergySample:
    """Execute ``run`` ``trials`` times and report the median consumed energy.

    The standard deviation is the sample standard deviation of the trial
    energies (zero for a single trial).
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    joules: list[float] = []
    durations: list[float] = []
    with _measurement_lock:
        for _ in range(trials):
            t0 = time.perf_counter()
            before = counter.read_uj()
            run()
            after = counter.read_uj()
            durations.append(time.perf_counter() - t0)
            joules.append(counter_delta_uj(before, after, counter.max_range_uj) / 1e6)
    std = statistics.stdev(joules) if trials > 1 else 0.0
    return EnergySample(
        joules=statistics.median(joules),
        backend=BackendKind.MEASURED,
        duration_s=statistics.median(durations),
        sample_count=trials,
        std_dev=std,
    )


def calibrate_params(
    observations: Sequence[tuple[SolveTrace, float]],
    miss_rate: float = 1e-4,
) -> EnergyModelParams:
    """Fit (E_c, E_t r) to measured (trace, joules) pairs by least squares.

    Each trace contributes one row flops * p * E_c + loads * p^2 * (E_t r)
    = joules. Only the product E_t r is identifiable, so the returned
    parameters fix ``r`` at ``miss_rate`` and scale E_t accordingly. ``k``
    and ``l`` are averaged from the traces' per-iteration counts.

    Raises :class:`CalibrationFailed` when fewer than two observations are
    given or the design matrix is (numerically) singular, e.g. all
    observations at one precision.
    """
    if len(observations) < 2:
        raise CalibrationFailed("need at least two (trace, joules) observations")
    rows, rhs = [], []
    k_samples, l_samples = [], []
    n = None
    for trace, joules in observations:
        p = trace.precision.bits
        rows.append([trace.total_flops * p, trace.total_loads * p * p])
        rhs.append(float(joules))
        n = len(trace.final_x)
        outers = max(len(trace.records), 1)
        k_samples.append(trace.total_flops / (n * outers))
        l_samples.append(trace.total_loads / (n * outers))
    a = np.array(rows, dtype=float)
    b = np.array(rhs, dtype=float)
    # scale columns so the rank test is meaningful despite p vs p^2 magnitudes
    scale = np.linalg.norm(a, axis=0)
    if np.any(scale == 0):
        raise CalibrationFailed("degenerate observations (zero counters)")
    sing = np.linalg.svd(a / scale, compute_uv=False)
    if sing[-1] < 1e-10 * sing[0]:
        raise CalibrationFailed("observations do not separate compute from transfer cost")
    theta, *_ = np.linalg.lstsq(a, b, rcond=None)
    e_c, et_r = float(theta[0]), float(theta[1])
    if e_c <= 0:
        raise CalibrationFailed("fit produced a non-positive compute energy")
    e_t = max(et_r, 0.0) / miss_rate
    if e_t <= 0:
        # transfer term unobservable; keep a nominal positive value
        e_t = 1e-12
    return EnergyModelParams(
        n=int(n),
        k=float(statistics.mean(k_samples)),
        l=float(statistics.mean(l_samples)),
        e_c=e_c,
        e_t=e_t,
        r=miss_rate,
    )


class ModeledMeter:
    """Runs an action once and prices its trace with the energy model."""

    backend = BackendKind.MODELED

    def __init__(self, params: EnergyModelParams):
        self.params = params

    def measure(self, run: Callable[[], SolveTrace]) -> tuple[SolveTrace, EnergySample]:
        t0 = time.perf_counter()
        trace = run()
        sample = replace(modeled_energy(trace, self.params), duration_s=time.perf_counter() - t0)
        return trace, sample


class MeasuredMeter:
    """Runs an action ``trials`` times around a hardware (or stub) counter."""

    backend = BackendKind.MEASURED

    def __init__(self, counter: EnergyCounter, trials: int = DEFAULT_TRIALS):
        self.counter = counter
        self.trials = trials

    def measure(self, run: Callable[[], SolveTrace]) -> tuple[SolveTrace, EnergySample]:
        results: list[SolveTrace] = []

        def wrapped():
            results.append(run())

        sample = measured_energy(wrapped, self.counter, self.trials)
        return results[-1], sample
