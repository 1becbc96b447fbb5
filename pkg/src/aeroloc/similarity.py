"""Pearson correlation between equally sized image patches.

The score is the zero-mean normalized cross-correlation: both patches are
mean-subtracted, and the product sum is divided by the geometric mean of the
two sums of squares.  Patches with no intensity variation have an undefined
score (vanishing denominator) and are reported as such instead of NaN.
"""

from __future__ import annotations

import numpy as np

# Sums of squared deviations below this are treated as zero variance.  Real
# 8-bit-scale signals produce sums >= ~0.25; this only absorbs float residue
# from mean subtraction of constant patches with odd pixel counts.
_VAR_FLOOR = 1e-9


def pearson(a: np.ndarray, b: np.ndarray) -> float | None:
    """Correlation of two patches in [-1, 1], or None if either is constant."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"patch shapes differ: {a.shape} vs {b.shape}")
    if a.size < 2:
        raise ValueError("patches must contain at least 2 pixels")
    da = a - a.mean()
    db = b - b.mean()
    ssa = float((da * da).sum())
    ssb = float((db * db).sum())
    if ssa <= _VAR_FLOOR or ssb <= _VAR_FLOOR:
        return None
    r = float((da * db).sum()) / (np.sqrt(ssa) * np.sqrt(ssb))
    return min(1.0, max(-1.0, r))


def pearson_batch(
    frame: np.ndarray, patches: np.ndarray, valid: np.ndarray | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Correlate one frame against a stack of patches.

    Returns (r, defined); r is clamped to [-1, 1] and zero where undefined.
    `valid` pre-masks patches that should not be scored (e.g. off-map).
    """
    frame = np.asarray(frame, dtype=np.float64)
    patches = np.asarray(patches, dtype=np.float64)
    if patches.ndim != 3 or patches.shape[1:] != frame.shape:
        raise ValueError(
            f"patch stack {patches.shape} does not match frame {frame.shape}"
        )
    df = frame - frame.mean()
    ssf = float((df * df).sum())

    dp = patches - patches.mean(axis=(1, 2), keepdims=True)
    ssp = np.einsum("nij,nij->n", dp, dp)
    num = np.einsum("ij,nij->n", df, dp)

    defined = ssp > _VAR_FLOOR
    if ssf <= _VAR_FLOOR:
        defined = np.zeros_like(defined)
    if valid is not None:
        defined = defined & valid
    den = np.sqrt(np.where(defined, ssp, 1.0) * (ssf if ssf > _VAR_FLOOR else 1.0))
    r = np.where(defined, num / den, 0.0)
    return np.clip(r, -1.0, 1.0), defined
