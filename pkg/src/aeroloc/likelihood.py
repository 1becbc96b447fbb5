"""Similarity-to-likelihood conversion and weight normalization.

Four conversion shapes are supported.  Given a correlation score x in [-1, 1]:

  linear      (x + 1) / 2
  softmax     e^x
  rectifying  piecewise-linear with parameter d in [-1, 1]: d >= 0 sets the
              likelihood at x = 0; d < 0 opens a dead zone on x <= |d|.
              Note the rising branch for d < 0 starts at d**2, a small
              intrinsic step above the dead zone.
  logistic    L(x, v) / L(1, v) with L(x, v) = (1 + e^(-5x))^(-1/v); the
              parameter v > 0 controls the curvature (small v is sharper)

All outputs are non-negative; all but softmax stay within [0, 1].  Likelihoods
become a probability mass by dividing each by the total.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

Kind = Literal["linear", "softmax", "rectifying", "logistic"]

KINDS: tuple[str, ...] = ("linear", "softmax", "rectifying", "logistic")


@dataclass(frozen=True)
class ConversionSpec:
    """Which conversion function to apply, plus its hyper-parameter.

    The parameter is d for rectifying, v for logistic, and ignored for
    linear and softmax.
    """

    kind: str
    param: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown conversion kind {self.kind!r}")
        if self.kind == "logistic" and not self.param > 0.0:
            raise ValueError(f"logistic requires param > 0, got {self.param}")
        if self.kind == "rectifying" and not -1.0 <= self.param <= 1.0:
            raise ValueError(f"rectifying requires param in [-1, 1], got {self.param}")

    def label(self) -> str:
        if self.kind in ("linear", "softmax"):
            return self.kind
        return f"{self.kind}:{self.param:g}"


@dataclass(frozen=True)
class WeightVector:
    """Normalized particle weights.

    `degenerate` is set when every input likelihood was zero and the weights
    fell back to uniform.
    """

    weights: np.ndarray
    degenerate: bool = False


def _rectifying(x: np.ndarray, d: float) -> np.ndarray:
    if d < 0.0:
        a = abs(d)
        return np.where(x <= a, 0.0, (1.0 + a) * (x - a) + d * d)
    return np.where(x <= 0.0, d * (1.0 + x), x * (1.0 - d) + d)


def _log_logistic_raw(x: np.ndarray, v: float) -> np.ndarray:
    # log of (1 + e^(-5x))^(-1/v), computed in log space for small v
    return (-1.0 / v) * np.log1p(np.exp(-5.0 * x))


def convert_array(spec: ConversionSpec, r: np.ndarray) -> np.ndarray:
    """Vectorized conversion of correlation scores to likelihoods."""
    r = np.asarray(r, dtype=np.float64)
    if np.any(r < -1.0) or np.any(r > 1.0):
        raise ValueError("correlation values must lie in [-1, 1]")
    if spec.kind == "linear":
        return (r + 1.0) / 2.0
    if spec.kind == "softmax":
        return np.exp(r)
    if spec.kind == "rectifying":
        return _rectifying(r, spec.param)
    # logistic, normalized so the score 1 maps to likelihood 1
    log_f = _log_logistic_raw(r, spec.param) - _log_logistic_raw(
        np.array(1.0), spec.param
    )
    return np.exp(log_f)


def convert(spec: ConversionSpec, r: float) -> float:
    """Convert one correlation score in [-1, 1] to a non-negative likelihood."""
    return float(convert_array(spec, np.array([r], dtype=np.float64))[0])


def normalize(likelihoods) -> WeightVector:
    """Turn non-negative likelihoods into a probability mass.

    An all-zero input yields uniform weights with the degenerate flag set, so
    callers can keep sampling over featureless terrain.
    """
    s = np.asarray(likelihoods, dtype=np.float64)
    if s.ndim != 1 or s.size == 0:
        raise ValueError("likelihoods must be a non-empty 1-D sequence")
    if np.any(s < 0.0):
        raise ValueError("likelihoods must be non-negative")
    total = float(s.sum())
    if total <= 0.0:
        return WeightVector(np.full(s.size, 1.0 / s.size), degenerate=True)
    return WeightVector(s / total, degenerate=False)
