"""Core types shared across modules."""

from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple, Optional


class Verdict(str, Enum):
    """Classification of a supremum estimated from finite evidence."""

    FINITE = "finite"
    DIVERGING = "diverging"
    INCONCLUSIVE = "inconclusive"


class ProbeVerdict(str, Enum):
    """Classification of operator norm estimates under mesh refinement."""

    BOUNDED = "bounded"
    BLOWUP = "blowup"
    INCONCLUSIVE = "inconclusive"


class Provenance(str, Enum):
    """Where a sampled submultiplicative profile came from."""

    PHI0 = "phi0"
    V0 = "v0"
    SYNTHETIC = "synthetic"


class IndexPair(NamedTuple):
    """Lower and upper index of a function."""

    lower: float
    upper: float


# Index tolerance used by every acceptance comparison.
INDEX_TOLERANCE = 0.02

# Two estimates of one index further apart than this are non-converged.
NONCONVERGENCE_TOLERANCE = 0.05


@dataclass(frozen=True)
class GridSpec:
    """Sampling grid for Muckenhoupt-type suprema.

    The t-grid holds the weight anchors, the endpoints of open curves and
    ``t_random`` seeded random nodes. Radii are log-spaced in
    ``[r_min, d_t]``; ``r_min`` defaults to four mesh widths. Each of the
    ``halvings`` refinement steps halves ``r_min`` and the anchor
    exclusion floor ``floor_ratio * r_min`` together.
    """

    t_random: int = 16
    r_count: int = 24
    r_min: Optional[float] = None
    halvings: int = 4
    floor_ratio: float = 1e-3
    finite_tolerance: float = 0.01
    divergence_growth: float = 1.3
    seed: int = 0

    def describe(self) -> str:
        r_min = "auto" if self.r_min is None else f"{self.r_min:.6g}"
        return (
            f"t_random={self.t_random} r_count={self.r_count} r_min={r_min} "
            f"halvings={self.halvings} floor_ratio={self.floor_ratio:g} seed={self.seed}"
        )
