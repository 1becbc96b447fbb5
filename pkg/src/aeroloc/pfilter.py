"""Particle filter loop: resample, propagate, score against the map, adapt count.

Each iteration draws particles from the previous set by weight, advances them
with the odometry delta, correlates the map patch under each hypothesis with
the camera frame, and converts the correlation to a likelihood.  Sampling
stops once the drawn count reaches the KLD bound for the occupied-bin count
(subject to the n_min/n_max clamps).  Weights are normalized at the end of
the iteration and drive the next iteration's sampling.

Evaluation is batched: selection and propagation draws come from a single
generator stream, similarities for a whole batch are computed vectorized, and
bin/bound bookkeeping is applied sequentially afterwards.  The stop condition
is therefore satisfied within at most one batch of overshoot.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .errors import ConfigurationError
from .kld import BinGrid, KldConfig, cumulative_weights, kld_bound, sample_indices
from .likelihood import ConversionSpec, convert_array, normalize
from .motion import NoiseConfig, OdometryDelta, propagate_batch
from .raster import CameraModel, Pose2D, RasterMap, extract_patches, wrap_angle
from .report import FrameRow, RunReport, euclidean_error
from .similarity import pearson_batch

if TYPE_CHECKING:
    from .sim import FlightLog


@dataclass(frozen=True)
class Particle:
    """One pose hypothesis with its raw likelihood and normalized weight."""

    pose: Pose2D
    likelihood: float
    weight: float


class ParticleSet:
    """Particles stored as parallel arrays; weights sum to 1 after an iteration."""

    def __init__(self, x, y, yaw, likelihood, weight, generation: int = 0,
                 degenerate: bool = False):
        self.x = np.asarray(x, dtype=np.float64)
        self.y = np.asarray(y, dtype=np.float64)
        self.yaw = np.asarray(yaw, dtype=np.float64)
        self.likelihood = np.asarray(likelihood, dtype=np.float64)
        self.weight = np.asarray(weight, dtype=np.float64)
        self.generation = generation
        self.degenerate = degenerate
        if not (self.x.shape == self.y.shape == self.yaw.shape
                == self.likelihood.shape == self.weight.shape):
            raise ValueError("particle arrays must have identical shapes")
        if self.x.size == 0:
            raise ValueError("particle set must be non-empty")

    def __len__(self) -> int:
        return self.x.size

    def particle(self, i: int) -> Particle:
        return Particle(
            pose=Pose2D(float(self.x[i]), float(self.y[i]), float(self.yaw[i])),
            likelihood=float(self.likelihood[i]),
            weight=float(self.weight[i]),
        )


@dataclass(frozen=True)
class PoseEstimate:
    """Weighted-mean pose plus the iteration's cost and dispersion counters."""

    pose: Pose2D
    n_evaluated: int
    k_bins: int
    degenerate: bool


@dataclass(frozen=True)
class FilterConfig:
    """Loop knobs that are not part of the KLD or noise models."""

    batch_size: int = 64
    eps_rot_init: float = 0.05
    # Replicates the plain (non-circular) weighted heading sum when True.
    strict_heading_sum: bool = False

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.eps_rot_init < 0.0:
            raise ValueError("eps_rot_init must be >= 0")


def init_particles(
    start: Pose2D,
    radius: float,
    n0: int,
    rng: np.random.Generator,
    eps_rot_init: float = 0.05,
) -> ParticleSet:
    """Uniform disc of hypotheses around the start pose, all with likelihood 1."""
    if not radius > 0.0:
        raise ValueError("radius must be > 0")
    if n0 < 1:
        raise ValueError("n0 must be >= 1")
    r = radius * np.sqrt(rng.random(n0))
    phi = rng.random(n0) * math.tau
    g = rng.normal(0.0, 1.0 / 3.0, size=n0)
    return ParticleSet(
        x=start.x + r * np.cos(phi),
        y=start.y + r * np.sin(phi),
        yaw=np.full(n0, start.yaw) + eps_rot_init * g,
        likelihood=np.ones(n0),
        weight=np.full(n0, 1.0 / n0),
        generation=0,
    )


def estimate_pose(pset: ParticleSet, strict_heading_sum: bool = False) -> Pose2D:
    """Weighted-mean pose of a normalized set.

    The heading uses a circular mean by default; the plain weighted sum of
    angles (which breaks across the +-pi wrap) is available for replication.
    """
    w = pset.weight
    x = float(np.dot(w, pset.x))
    y = float(np.dot(w, pset.y))
    if strict_heading_sum:
        yaw = wrap_angle(float(np.dot(w, pset.yaw)))
    else:
        yaw = math.atan2(
            float(np.dot(w, np.sin(pset.yaw))), float(np.dot(w, np.cos(pset.yaw)))
        )
    return Pose2D(x, y, yaw)


def step(
    prev: ParticleSet,
    frame: np.ndarray,
    odo: OdometryDelta,
    grid: RasterMap,
    conversion: ConversionSpec,
    cam: CameraModel,
    altitude: float,
    kld_cfg: KldConfig,
    noise_cfg: NoiseConfig,
    fcfg: FilterConfig,
    rng: np.random.Generator,
) -> tuple[ParticleSet, PoseEstimate]:
    """Run one filter iteration and return the new set plus the pose estimate."""
    frame = np.asarray(frame, dtype=np.float64)
    if frame.shape != (cam.patch_px, cam.patch_px):
        raise ValueError(
            f"frame shape {frame.shape} does not match patch size {cam.patch_px}"
        )

    cum = cumulative_weights(prev.weight)
    bins = BinGrid(kld_cfg.bin_size)
    xs, ys, yaws, scores = [], [], [], []

    n = 0
    k = 0
    stop = False
    while not stop and n < kld_cfg.n_max:
        b = min(fcfg.batch_size, kld_cfg.n_max - n)
        picks = sample_indices(cum, rng.random(b))
        bx, by, byaw = propagate_batch(
            prev.x[picks], prev.y[picks], prev.yaw[picks], odo, noise_cfg, rng
        )
        patches, valid = extract_patches(grid, bx, by, byaw, altitude, cam)
        r, defined = pearson_batch(frame, patches, valid)
        s = np.zeros(b)
        if defined.any():
            s[defined] = convert_array(conversion, r[defined])

        xs.append(bx)
        ys.append(by)
        yaws.append(byaw)
        scores.append(s)

        # Sequential bookkeeping; the whole evaluated batch is kept even if
        # the bound is reached mid-batch.  The bound only moves when k does.
        bound_val = -1
        for j in range(b):
            if bins.mark(float(bx[j]), float(by[j])):
                k += 1
                bound_val = -1
            n += 1
            if not stop and n >= kld_cfg.n_min:
                if bound_val < 0:
                    bound_val = kld_bound(max(k, 2), kld_cfg)
                if n >= bound_val:
                    stop = True

    x = np.concatenate(xs)
    y = np.concatenate(ys)
    yaw = np.concatenate(yaws)
    s = np.concatenate(scores)

    wv = normalize(s)
    new_set = ParticleSet(
        x=x, y=y, yaw=yaw, likelihood=s, weight=wv.weights,
        generation=prev.generation + 1, degenerate=wv.degenerate,
    )
    pose = estimate_pose(new_set, fcfg.strict_heading_sum)
    return new_set, PoseEstimate(
        pose=pose, n_evaluated=n, k_bins=k, degenerate=wv.degenerate
    )


class ParticleFilter:
    """Stateful wrapper running the per-frame iteration against one map."""

    def __init__(
        self,
        grid: RasterMap,
        cam: CameraModel,
        conversion: ConversionSpec,
        kld_cfg: KldConfig | None = None,
        noise_cfg: NoiseConfig | None = None,
        fcfg: FilterConfig | None = None,
        rng: np.random.Generator | None = None,
    ):
        self.grid = grid
        self.cam = cam
        self.conversion = conversion
        self.kld_cfg = kld_cfg or KldConfig()
        self.noise_cfg = noise_cfg or NoiseConfig()
        self.fcfg = fcfg or FilterConfig()
        self.rng = rng or np.random.default_rng()
        self.pset: ParticleSet | None = None

    def init(self, start: Pose2D, radius: float, n0: int) -> ParticleSet:
        self.pset = init_particles(
            start, radius, n0, self.rng, self.fcfg.eps_rot_init
        )
        return self.pset

    def step(self, frame: np.ndarray, odo: OdometryDelta, altitude: float) -> PoseEstimate:
        if self.pset is None:
            raise RuntimeError("call init() before step()")
        self.pset, estimate = step(
            self.pset, frame, odo, self.grid, self.conversion, self.cam,
            altitude, self.kld_cfg, self.noise_cfg, self.fcfg, self.rng,
        )
        return estimate


def run_flight(
    flight: "FlightLog",
    grid: RasterMap,
    conversion: ConversionSpec,
    cam: CameraModel,
    kld_cfg: KldConfig,
    noise_cfg: NoiseConfig,
    fcfg: FilterConfig,
    init_radius: float,
    n_init: int,
    seed: int,
    meta: dict[str, str] | None = None,
) -> RunReport:
    """Localize every frame of a flight; deterministic for a fixed seed.

    Frame 0 is processed with a zero odometry delta so the initial cloud is
    immediately conditioned on imagery.
    """
    if len(flight.poses) < 1:
        raise ValueError("flight must contain at least one frame")
    if flight.frames is None or flight.odometry is None:
        raise ValueError("flight needs frames and odometry attached")
    for pose in (flight.poses[0], flight.poses[-1]):
        if not grid.contains(pose.x, pose.y):
            raise ConfigurationError(
                f"flight pose ({pose.x:.1f}, {pose.y:.1f}) lies outside the map; "
                "map and flight are not georeferenced together"
            )

    rng = np.random.default_rng([seed, 2])
    pf = ParticleFilter(grid, cam, conversion, kld_cfg, noise_cfg, fcfg, rng)
    pf.init(flight.poses[0], init_radius, n_init)

    rows = []
    for i, gt in enumerate(flight.poses):
        odo = OdometryDelta(0.0, 0.0) if i == 0 else flight.odometry[i - 1]
        est = pf.step(np.asarray(flight.frames[i]), odo, float(flight.altitude[i]))
        rows.append(FrameRow(
            frame=i,
            t_sec=float(flight.t_sec[i]),
            gt_x=gt.x, gt_y=gt.y, gt_yaw=gt.yaw,
            est_x=est.pose.x, est_y=est.pose.y, est_yaw=est.pose.yaw,
            error_m=euclidean_error(gt.x, gt.y, est.pose.x, est.pose.y),
            n_evaluated=est.n_evaluated,
            k_bins=est.k_bins,
            degenerate=est.degenerate,
        ))

    report_meta = {"seed": str(seed), "conversion": conversion.label()}
    if meta:
        report_meta.update(meta)
    return RunReport(rows=rows, meta=report_meta)
