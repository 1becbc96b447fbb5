"""Adaptive particle-count bound and weighted resampling.

The particle count needed to keep the sampled approximation within a
Kullback-Leibler error bound of the discrete posterior is, for k occupied
bins (k >= 2):

    n = ceil( (k-1)/(2*eps) * (1 - 2/(9(k-1)) + sqrt(2/(9(k-1))) * z)^3 )

where z is the upper 1-delta standard-normal quantile (Wilson-Hilferty
approximation of the chi-square quantile).  Bins are a fixed square grid over
world coordinates, 5 meters by default.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .raster import Pose2D

# Acklam's rational approximation of the inverse standard normal CDF.
_A = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
      1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
_B = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
      6.680131188771972e+01, -1.328068155288572e+01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
      -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
      3.754408661907416e+00)
_P_LOW = 0.02425


def inverse_normal_cdf(p: float) -> float:
    """Quantile of the standard normal distribution for p in (0, 1).

    Rational approximation refined with one Halley step against erfc, which
    brings the error to a few ulp.
    """
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must be in (0, 1), got {p}")
    if p < _P_LOW:
        q = math.sqrt(-2.0 * math.log(p))
        x = ((((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5])
             / ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0))
    elif p <= 1.0 - _P_LOW:
        q = p - 0.5
        r = q * q
        x = ((((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q
             / (((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0))
    else:
        q = math.sqrt(-2.0 * math.log(1.0 - p))
        x = -((((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5])
              / ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0))
    # Halley refinement
    e = 0.5 * math.erfc(-x / math.sqrt(2.0)) - p
    u = e * math.sqrt(2.0 * math.pi) * math.exp(x * x / 2.0)
    return x - u / (1.0 + x * u / 2.0)


@lru_cache(maxsize=32)
def _upper_quantile(delta: float) -> float:
    return inverse_normal_cdf(1.0 - delta)


@dataclass(frozen=True)
class KldConfig:
    """Adaptive sampling parameters: error bound, confidence, bin grid, clamps."""

    epsilon: float = 0.05
    delta: float = 0.01
    bin_size: float = 5.0
    n_min: int = 100
    n_max: int = 20000

    def __post_init__(self):
        if not self.epsilon > 0.0:
            raise ValueError("epsilon must be > 0")
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must be in (0, 1)")
        if not self.bin_size > 0.0:
            raise ValueError("bin_size must be > 0")
        if self.n_min < 1 or self.n_max < self.n_min:
            raise ValueError("need 1 <= n_min <= n_max")


def kld_bound(k: int, cfg: KldConfig) -> int:
    """Required particle count for k occupied bins, clamped to [n_min, n_max]."""
    if k < 2:
        raise ValueError(f"bound is defined for k >= 2, got {k}")
    km1 = k - 1
    t = 2.0 / (9.0 * km1)
    n = km1 / (2.0 * cfg.epsilon) * (1.0 - t + math.sqrt(t) * _upper_quantile(cfg.delta)) ** 3
    return min(cfg.n_max, max(cfg.n_min, math.ceil(n)))


class BinGrid:
    """Occupancy grid over world coordinates; k is the occupied-bin count."""

    def __init__(self, bin_size: float = 5.0):
        if not bin_size > 0.0:
            raise ValueError("bin_size must be > 0")
        self.bin_size = bin_size
        self.occupied: set[tuple[int, int]] = set()

    @property
    def k(self) -> int:
        return len(self.occupied)

    def mark(self, x: float, y: float) -> bool:
        """Insert the bin containing (x, y); True if it was previously empty."""
        key = (math.floor(x / self.bin_size), math.floor(y / self.bin_size))
        if key in self.occupied:
            return False
        self.occupied.add(key)
        return True

    def clear(self) -> None:
        self.occupied.clear()


def mark_bin(grid: BinGrid, pose: Pose2D) -> bool:
    """Mark the bin under a pose; True iff the bin was empty."""
    return grid.mark(pose.x, pose.y)


def cumulative_weights(weights: np.ndarray) -> np.ndarray:
    """Cumulative distribution over normalized weights, forced to end at 1."""
    cum = np.cumsum(np.asarray(weights, dtype=np.float64))
    total = cum[-1]
    if not total > 0.0:
        raise ValueError("weights must have positive total mass")
    cum /= total
    cum[-1] = 1.0
    return cum


def sample_indices(cum: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Indices drawn from a cumulative distribution for uniforms u in [0, 1).

    Uses right-bisection so zero-weight entries (flat spots in the cumulative
    array) are never selected.
    """
    idx = np.searchsorted(cum, u, side="right")
    return np.minimum(idx, cum.size - 1)


def weighted_sample(particle_set, rng: np.random.Generator):
    """Draw one particle from a set proportionally to its normalized weight."""
    weights = np.asarray(particle_set.weight, dtype=np.float64)
    if weights.size == 0:
        raise ValueError("cannot sample from an empty particle set")
    cum = cumulative_weights(weights)
    idx = int(sample_indices(cum, np.array([rng.random()]))[0])
    return particle_set.particle(idx)
