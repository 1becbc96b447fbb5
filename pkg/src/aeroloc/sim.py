"""Synthetic worlds, scripted flights, rendered frames, and noisy odometry.

Everything here is a pure function of its spec and seed, so regenerating any
artifact yields bit-identical output.  A flight dataset on disk is a
directory:

    frames/NNNNNN.png   camera patches, 8-bit grayscale
    truth.csv           frame, t_sec, x_m, y_m, yaw_rad, altitude_m
    odometry.csv        frame, d_tran_m, d_rot_rad   (frame i: motion i-1 -> i)
    meta.txt            fov_deg, patch_px, frame_rate_hz, map

CSV files are UTF-8 with a header row and '.' decimal separator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image
from scipy.ndimage import gaussian_filter

from .mapio import read_kv, write_kv
from .motion import OdometryDelta
from .raster import CameraModel, Pose2D, RasterMap, extract_patch, wrap_angle

TERRAIN_KINDS = ("fractal", "urban_blocks")
FLIGHT_SHAPES = ("line", "circle", "rectangle")


@dataclass(frozen=True)
class WorldSpec:
    """Recipe for a procedural terrain raster."""

    seed: int
    size_px: int = 1024
    gsd: float = 2.0
    terrain_kind: str = "fractal"
    octaves: int = 5
    roughness: float = 0.55

    def __post_init__(self):
        if self.size_px < 256:
            raise ValueError("size_px must be >= 256")
        if self.terrain_kind not in TERRAIN_KINDS:
            raise ValueError(f"unknown terrain kind {self.terrain_kind!r}")
        if not self.gsd > 0.0:
            raise ValueError("gsd must be > 0")
        if self.octaves < 1:
            raise ValueError("octaves must be >= 1")
        if not 0.0 < self.roughness < 1.0:
            raise ValueError("roughness must be in (0, 1)")


def _smoothstep(t: np.ndarray) -> np.ndarray:
    return t * t * (3.0 - 2.0 * t)


def _value_noise(size: int, wavelength: int, rng: np.random.Generator) -> np.ndarray:
    """One octave of lattice value noise, smoothly interpolated to full size."""
    cells = size // wavelength + 2
    lattice = rng.random((cells, cells))
    pos = np.arange(size) / wavelength
    i = pos.astype(np.int64)
    t = _smoothstep(pos - i)

    v00 = lattice[np.ix_(i, i)]
    v10 = lattice[np.ix_(i, i + 1)]
    v01 = lattice[np.ix_(i + 1, i)]
    v11 = lattice[np.ix_(i + 1, i + 1)]
    ty = t[:, None]
    tx = t[None, :]
    top = v00 + tx * (v10 - v00)
    bot = v01 + tx * (v11 - v01)
    return top + ty * (bot - top)


def _fractal_terrain(spec: WorldSpec, salt: int) -> np.ndarray:
    total = np.zeros((spec.size_px, spec.size_px))
    amplitude = 1.0
    wavelength = max(8, spec.size_px // 4)
    for octave in range(spec.octaves):
        rng = np.random.default_rng([spec.seed, salt, octave])
        total += amplitude * _value_noise(spec.size_px, wavelength, rng)
        amplitude *= spec.roughness
        wavelength = max(2, wavelength // 2)
    return total


def _urban_blocks(spec: WorldSpec, salt: int) -> np.ndarray:
    """Axis-aligned city blocks with dark streets between them."""
    rng = np.random.default_rng([spec.seed, salt, 101])
    size = spec.size_px
    street = 5

    def cuts() -> list[int]:
        edges = [0]
        while edges[-1] < size:
            edges.append(edges[-1] + int(rng.integers(18, 49)) + street)
        return edges

    img = np.full((size, size), 25.0)  # street intensity
    rows = cuts()
    cols = cuts()
    for r0, r1 in zip(rows[:-1], rows[1:]):
        for c0, c1 in zip(cols[:-1], cols[1:]):
            shade = float(rng.integers(60, 256))
            img[r0:min(r1 - street, size), c0:min(c1 - street, size)] = shade
    return img


def _has_constant_tile(pixels: np.ndarray, tile: int = 64) -> bool:
    size = pixels.shape[0]
    starts = list(range(0, size - tile + 1, tile))
    if starts[-1] != size - tile:
        starts.append(size - tile)
    for r in starts:
        for c in starts:
            block = pixels[r:r + tile, c:c + tile]
            if block.min() == block.max():
                return True
    return False


def generate_world(spec: WorldSpec) -> RasterMap:
    """Deterministic procedural terrain with full 0-255 dynamic range."""
    for attempt in range(8):
        if spec.terrain_kind == "fractal":
            raw = _fractal_terrain(spec, attempt)
        else:
            raw = _urban_blocks(spec, attempt)
        lo, hi = raw.min(), raw.max()
        if hi <= lo:
            continue
        pixels = np.floor((raw - lo) / (hi - lo) * 255.0 + 0.5).astype(np.uint8)
        if not _has_constant_tile(pixels):
            return RasterMap(pixels=pixels, gsd=spec.gsd, origin=(0.0, 0.0))
    raise RuntimeError("could not generate a non-degenerate world; adjust the spec")


@dataclass(frozen=True)
class FlightPlan:
    """Scripted constant-speed trajectory with heading tangent to the path."""

    shape: str
    altitude: float
    speed: float
    frame_rate: float
    start: Pose2D
    length: float | None = None  # line
    radius: float | None = None  # circle
    side_a: float | None = None  # rectangle
    side_b: float | None = None

    def __post_init__(self):
        if self.shape not in FLIGHT_SHAPES:
            raise ValueError(f"unknown flight shape {self.shape!r}")
        if self.altitude <= 0 or self.speed <= 0 or self.frame_rate <= 0:
            raise ValueError("altitude, speed, and frame_rate must be positive")
        needs = {"line": ("length",), "circle": ("radius",), "rectangle": ("side_a", "side_b")}
        for name in needs[self.shape]:
            value = getattr(self, name)
            if value is None or value <= 0:
                raise ValueError(f"{self.shape} flight needs positive {name}")


@dataclass
class FlightLog:
    """Per-frame ground truth, optionally with odometry and camera frames."""

    poses: list[Pose2D]
    t_sec: np.ndarray
    altitude: np.ndarray
    odometry: list[OdometryDelta] | None = None
    frames: object = None  # sequence of (patch_px, patch_px) arrays

    def __len__(self) -> int:
        return len(self.poses)


def _line_points(plan: FlightPlan, step: float):
    n = int(math.floor(plan.length / step + 1e-9)) + 1
    c, s = math.cos(plan.start.yaw), math.sin(plan.start.yaw)
    return [
        Pose2D(plan.start.x + i * step * c, plan.start.y + i * step * s, plan.start.yaw)
        for i in range(n)
    ]


def _circle_points(plan: FlightPlan, step: float):
    # counterclockwise lap; center sits left of the initial heading
    dphi = step / plan.radius
    n = int(math.ceil(math.tau / dphi)) + 1
    cx = plan.start.x + plan.radius * math.cos(plan.start.yaw + math.pi / 2)
    cy = plan.start.y + plan.radius * math.sin(plan.start.yaw + math.pi / 2)
    phi0 = math.atan2(plan.start.y - cy, plan.start.x - cx)
    out = []
    for i in range(n):
        phi = phi0 + i * dphi
        out.append(Pose2D(
            cx + plan.radius * math.cos(phi),
            cy + plan.radius * math.sin(phi),
            phi + math.pi / 2,
        ))
    return out


def _rectangle_points(plan: FlightPlan, step: float):
    sides = (plan.side_a, plan.side_b, plan.side_a, plan.side_b)
    out = []
    pos = (plan.start.x, plan.start.y)
    heading = plan.start.yaw
    leftover = 0.0
    for side in sides:
        c, s = math.cos(heading), math.sin(heading)
        d = leftover
        while d <= side + 1e-9:
            out.append(Pose2D(pos[0] + d * c, pos[1] + d * s, heading))
            d += step
        leftover = d - side
        pos = (pos[0] + side * c, pos[1] + side * s)
        heading = wrap_angle(heading + math.pi / 2)
    return out


def generate_flight(
    plan: FlightPlan, grid: RasterMap, cam: CameraModel | None = None
) -> FlightLog:
    """Ground-truth trajectory sampled at the plan's frame rate.

    Raises if any pose comes closer to the map border than one camera
    footprint.
    """
    cam = cam or CameraModel()
    step = plan.speed / plan.frame_rate
    if plan.shape == "line":
        poses = _line_points(plan, step)
    elif plan.shape == "circle":
        poses = _circle_points(plan, step)
    else:
        poses = _rectangle_points(plan, step)

    margin = cam.footprint_side(plan.altitude)
    ox, oy = grid.origin
    ex, ey = grid.extent_m
    for p in poses:
        if not (ox + margin <= p.x < ox + ex - margin
                and oy + margin <= p.y < oy + ey - margin):
            raise ValueError(
                f"flight pose ({p.x:.1f}, {p.y:.1f}) is within one footprint"
                f" ({margin:.1f} m) of the map border"
            )

    n = len(poses)
    return FlightLog(
        poses=poses,
        t_sec=np.arange(n) / plan.frame_rate,
        altitude=np.full(n, float(plan.altitude)),
    )


def render_frame(
    grid: RasterMap,
    truth_pose: Pose2D,
    altitude: float,
    cam: CameraModel,
    sensor_noise_sigma: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """Camera view at the true pose: the map patch plus additive pixel noise."""
    patch = extract_patch(grid, truth_pose, altitude, cam)
    if patch is None:
        raise ValueError("camera footprint leaves the map at the requested pose")
    if sensor_noise_sigma == 0.0:
        return patch
    noisy = patch + rng.normal(0.0, sensor_noise_sigma, size=patch.shape)
    return np.clip(noisy, 0.0, 255.0)


class RenderedFrames:
    """Lazy per-frame rendering with a deterministic per-frame noise stream."""

    def __init__(self, grid: RasterMap, flight: FlightLog, cam: CameraModel,
                 sensor_noise_sigma: float, seed: int):
        self.grid = grid
        self.flight = flight
        self.cam = cam
        self.sigma = sensor_noise_sigma
        self.seed = seed

    def __len__(self) -> int:
        return len(self.flight)

    def __getitem__(self, i: int) -> np.ndarray:
        rng = np.random.default_rng([self.seed, i])
        return render_frame(
            self.grid, self.flight.poses[i], float(self.flight.altitude[i]),
            self.cam, self.sigma, rng,
        )


@dataclass(frozen=True)
class AgeSpec:
    """Controlled map degradation standing in for imagery captured years apart."""

    level: float
    seed: int
    occlusion_fraction: float = 0.0
    brightness_shift: float = 0.0
    contrast_scale: float = 1.0
    blur_sigma: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.level <= 1.0:
            raise ValueError("level must be in [0, 1]")
        if not 0.0 <= self.occlusion_fraction < 1.0:
            raise ValueError("occlusion_fraction must be in [0, 1)")

    @classmethod
    def from_level(cls, level: float, seed: int) -> "AgeSpec":
        """Default component scaling: everything grows linearly with level."""
        return cls(
            level=level,
            seed=seed,
            occlusion_fraction=0.45 * level,
            brightness_shift=25.0 * level,
            contrast_scale=1.0 - 0.3 * level,
            blur_sigma=2.0 * level,
        )

    @property
    def is_identity(self) -> bool:
        return (self.occlusion_fraction == 0.0 and self.brightness_shift == 0.0
                and self.contrast_scale == 1.0 and self.blur_sigma == 0.0)


def age_map(grid: RasterMap, age: AgeSpec) -> RasterMap:
    """Deterministically degrade a map: occluding rectangles, photometric
    drift, blur.  An identity spec returns a bit-identical raster."""
    if age.is_identity:
        return RasterMap(pixels=grid.pixels.copy(), gsd=grid.gsd, origin=grid.origin)

    rng = np.random.default_rng([age.seed, 7])
    img = grid.pixels.astype(np.float64)
    h, w = img.shape

    if age.occlusion_fraction > 0.0:
        covered = np.zeros(img.shape, dtype=bool)
        target = age.occlusion_fraction * img.size
        lo, hi = max(8, min(h, w) // 24), max(16, min(h, w) // 8)
        while covered.sum() < target:
            rh = int(rng.integers(lo, hi + 1))
            rw = int(rng.integers(lo, hi + 1))
            r0 = int(rng.integers(0, h - rh + 1))
            c0 = int(rng.integers(0, w - rw + 1))
            region = img[r0:r0 + rh, c0:c0 + rw]
            region[:] = np.floor(region.mean() + 0.5)
            covered[r0:r0 + rh, c0:c0 + rw] = True

    img = (img - 128.0) * age.contrast_scale + 128.0 + age.brightness_shift
    if age.blur_sigma > 0.0:
        img = gaussian_filter(img, sigma=age.blur_sigma, mode="reflect")
    pixels = np.clip(np.floor(img + 0.5), 0, 255).astype(np.uint8)
    return RasterMap(pixels=pixels, gsd=grid.gsd, origin=grid.origin)


def synth_odometry(
    flight: FlightLog,
    drift: float,
    sigma_tran: float,
    sigma_rot: float,
    rng: np.random.Generator,
) -> list[OdometryDelta]:
    """Odometry deltas for a flight: exact inverse of dead reckoning, then
    corrupted by a scale error on distance and Gaussian noise on both channels.

    With drift 0 and zero sigmas, integrating the deltas reproduces the
    ground-truth positions exactly.
    """
    if len(flight) < 2:
        raise ValueError("need at least 2 poses to derive odometry")
    deltas = []
    heading = flight.poses[0].yaw
    for a, b in zip(flight.poses[:-1], flight.poses[1:]):
        dx, dy = b.x - a.x, b.y - a.y
        d_tran = math.hypot(dx, dy)
        chord = math.atan2(dy, dx) if d_tran > 0.0 else heading
        d_rot = wrap_angle(chord - heading)
        heading = chord

        noisy_tran = d_tran * (1.0 + drift) + sigma_tran * rng.normal()
        noisy_rot = d_rot + sigma_rot * rng.normal()
        deltas.append(OdometryDelta(max(0.0, noisy_tran), noisy_rot))
    return deltas


def dead_reckoning(start: Pose2D, odometry: list[OdometryDelta]) -> list[Pose2D]:
    """Integrate odometry deltas from the start pose (noiseless motion model)."""
    poses = [start]
    for delta in odometry:
        prev = poses[-1]
        heading = prev.yaw + delta.d_rot
        poses.append(Pose2D(
            prev.x + delta.d_tran * math.cos(heading),
            prev.y + delta.d_tran * math.sin(heading),
            heading,
        ))
    return poses


def save_flight(
    flight: FlightLog,
    out_dir: str | Path,
    cam: CameraModel,
    frame_rate: float,
    map_ref: str,
) -> None:
    """Write a flight dataset directory (frames, truth, odometry, meta)."""
    if flight.frames is None or flight.odometry is None:
        raise ValueError("flight needs frames and odometry attached")
    out = Path(out_dir)
    (out / "frames").mkdir(parents=True, exist_ok=True)

    lines = ["frame,t_sec,x_m,y_m,yaw_rad,altitude_m\n"]
    for i, p in enumerate(flight.poses):
        lines.append(
            f"{i},{float(flight.t_sec[i])!r},{p.x!r},{p.y!r},{p.yaw!r},"
            f"{float(flight.altitude[i])!r}\n"
        )
    (out / "truth.csv").write_text("".join(lines), encoding="utf-8")

    lines = ["frame,d_tran_m,d_rot_rad\n"]
    for i, d in enumerate(flight.odometry, start=1):
        lines.append(f"{i},{float(d.d_tran)!r},{float(d.d_rot)!r}\n")
    (out / "odometry.csv").write_text("".join(lines), encoding="utf-8")

    write_kv(out / "meta.txt", {
        "fov_deg": repr(cam.fov_deg),
        "patch_px": str(cam.patch_px),
        "frame_rate_hz": repr(frame_rate),
        "map": map_ref,
    })

    for i in range(len(flight)):
        frame = np.asarray(flight.frames[i])
        img = np.clip(np.floor(frame + 0.5), 0, 255).astype(np.uint8)
        Image.fromarray(img, mode="L").save(out / "frames" / f"{i:06d}.png")


def load_flight(flight_dir: str | Path) -> tuple[FlightLog, CameraModel, float, str]:
    """Read a flight dataset directory.

    Returns (flight, camera, frame_rate_hz, map_ref); frames come back as
    uint8 arrays.
    """
    d = Path(flight_dir)
    meta = read_kv(d / "meta.txt")
    cam = CameraModel(fov_deg=float(meta["fov_deg"]), patch_px=int(meta["patch_px"]))
    frame_rate = float(meta["frame_rate_hz"])

    poses, t_sec, altitude = [], [], []
    truth_lines = (d / "truth.csv").read_text(encoding="utf-8").splitlines()
    for line in truth_lines[1:]:
        f = line.split(",")
        poses.append(Pose2D(float(f[2]), float(f[3]), float(f[4])))
        t_sec.append(float(f[1]))
        altitude.append(float(f[5]))

    odometry = []
    odo_lines = (d / "odometry.csv").read_text(encoding="utf-8").splitlines()
    for line in odo_lines[1:]:
        f = line.split(",")
        odometry.append(OdometryDelta(float(f[1]), float(f[2])))

    frames = [
        np.asarray(Image.open(d / "frames" / f"{i:06d}.png"), dtype=np.uint8)
        for i in range(len(poses))
    ]
    flight = FlightLog(
        poses=poses,
        t_sec=np.asarray(t_sec),
        altitude=np.asarray(altitude),
        odometry=odometry,
        frames=frames,
    )
    return flight, cam, frame_rate, meta["map"]
