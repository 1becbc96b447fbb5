"""Planar odometry motion model with sampled Gaussian noise.

A particle pose is advanced by a translation/rotation delta measured since
the last frame.  Both channels are perturbed per particle:

    t_hat = d_tran + sample_normal(eps_tran)
    r_hat = d_rot  + sample_normal(eps_rot)
    x' = x + a1 * t_hat * cos(yaw + a3 * r_hat)
    y' = y + a2 * t_hat * sin(yaw + a3 * r_hat)
    yaw' = yaw + a3 * r_hat        (wrapped to (-pi, pi])

sample_normal(eps) draws eps * N(0, sd=1/3), so +-eps spans three standard
deviations of the injected noise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .raster import Pose2D, wrap_angle, wrap_angle_array

_NOISE_SD = 1.0 / 3.0


@dataclass(frozen=True)
class OdometryDelta:
    """Motion measured since the previous frame: meters traveled, heading change."""

    d_tran: float
    d_rot: float

    def __post_init__(self):
        object.__setattr__(self, "d_tran", float(self.d_tran))
        object.__setattr__(self, "d_rot", float(self.d_rot))
        if self.d_tran < 0.0:
            raise ValueError(f"d_tran must be >= 0, got {self.d_tran}")


@dataclass(frozen=True)
class NoiseConfig:
    """Noise scale coefficients for particle propagation.

    The translational noise bound grows with the measured distance:
    eps_tran(d) = eps_tran_scale * d + eps_tran_min.
    """

    alpha1: float = 1.0
    alpha2: float = 1.0
    alpha3: float = 1.0
    eps_tran_scale: float = 0.05
    eps_tran_min: float = 0.1
    eps_rot: float = 0.02

    def __post_init__(self):
        for name in ("alpha1", "alpha2", "alpha3", "eps_tran_scale", "eps_tran_min", "eps_rot"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be >= 0")

    def eps_tran(self, d_tran: float) -> float:
        return self.eps_tran_scale * d_tran + self.eps_tran_min


def sample_normal(eps: float, rng: np.random.Generator) -> float:
    """Draw eps-scaled Gaussian noise; exactly 0 when eps is 0.

    Always consumes one draw from the generator so noise streams stay aligned
    when an eps is toggled to zero.
    """
    if eps < 0.0:
        raise ValueError(f"eps must be >= 0, got {eps}")
    return eps * rng.normal(0.0, _NOISE_SD)


def propagate(
    pose: Pose2D, odo: OdometryDelta, noise: NoiseConfig, rng: np.random.Generator
) -> Pose2D:
    """Advance one pose by a noisy odometry delta."""
    t_hat = odo.d_tran + sample_normal(noise.eps_tran(odo.d_tran), rng)
    r_hat = odo.d_rot + sample_normal(noise.eps_rot, rng)
    heading = pose.yaw + noise.alpha3 * r_hat
    return Pose2D(
        x=pose.x + noise.alpha1 * t_hat * math.cos(heading),
        y=pose.y + noise.alpha2 * t_hat * math.sin(heading),
        yaw=wrap_angle(heading),
    )


def propagate_batch(
    x: np.ndarray,
    y: np.ndarray,
    yaw: np.ndarray,
    odo: OdometryDelta,
    noise: NoiseConfig,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized propagate for particle arrays; one tran and one rot draw each."""
    n = x.shape[0]
    t_hat = odo.d_tran + noise.eps_tran(odo.d_tran) * rng.normal(0.0, _NOISE_SD, size=n)
    r_hat = odo.d_rot + noise.eps_rot * rng.normal(0.0, _NOISE_SD, size=n)
    heading = yaw + noise.alpha3 * r_hat
    nx = x + noise.alpha1 * t_hat * np.cos(heading)
    ny = y + noise.alpha2 * t_hat * np.sin(heading)
    return nx, ny, wrap_angle_array(heading)
