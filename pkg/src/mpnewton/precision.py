"""Working-precision descriptors and per-solve operation counters."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

_NAME_ALIASES = {
    "b32": 32, "binary32": 32, "single": 32, "float32": 32, "32": 32,
    "b64": 64, "binary64": 64, "double": 64, "float64": 64, "64": 64,
}


class WorkingPrecision(Enum):
    """IEEE floating-point format in which all solver vectors live.

    Vector storage and vector arithmetic inside a solve happen at exactly
    this precision; there is no silent widening of stored vectors.
    """

    BINARY32 = 32
    BINARY64 = 64

    @property
    def bits(self) -> int:
        return self.value

    @property
    def dtype(self) -> np.dtype:
        return np.dtype(np.float32 if self is WorkingPrecision.BINARY32 else np.float64)

    @property
    def tiny(self) -> float:
        """Smallest positive normal value of the format."""
        return float(np.finfo(self.dtype).tiny)

    @property
    def machine_epsilon(self) -> float:
        return float(np.finfo(self.dtype).eps)

    def cast(self, x) -> np.ndarray:
        """Bring a vector into this precision.

        Narrowing rounds to nearest (IEEE default); widening is exact.
        Always returns a fresh array so callers may mutate freely.
        """
        return np.array(x, dtype=self.dtype, copy=True)

    @classmethod
    def from_name(cls, name: str) -> "WorkingPrecision":
        try:
            bits = _NAME_ALIASES[name.strip().lower()]
        except KeyError:
            raise ValueError(f"unknown precision {name!r}; use b32 or b64") from None
        return cls(bits)


@dataclass
class TraceCounters:
    """Operation counters for one solve.

    ``flops`` counts floating-point operations, ``loads`` counts vector
    values streamed through the solver kernels (reads plus writes, as if
    each kernel ran as a single fused pass). Counts are precision
    independent. One counter object belongs to exactly one solve, so
    concurrent solves never share mutable state.
    """

    flops: int = 0
    loads: int = 0
    jvp_calls: int = 0

    def tally(self, flops: int = 0, loads: int = 0) -> None:
        self.flops += flops
        self.loads += loads

    def snapshot(self) -> tuple[int, int, int]:
        return (self.flops, self.loads, self.jvp_calls)

    def since(self, snap: tuple[int, int, int]) -> tuple[int, int, int]:
        return (self.flops - snap[0], self.loads - snap[1], self.jvp_calls - snap[2])
