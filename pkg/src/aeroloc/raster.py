"""Raster map geometry: world/pixel mapping and pose-aligned patch extraction.

The map is a single-channel 8-bit raster with a uniform ground sample
distance (meters per pixel).  Pixel (0, 0) sits at the map origin; pixel
indices grow with world x (east) and world y (north):

    index = floor((point - origin) / gsd)

Pixel centers are at origin + (index + 0.5) * gsd.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


def wrap_angle(theta: float) -> float:
    """Normalize an angle to (-pi, pi]."""
    w = math.fmod(theta + math.pi, math.tau)
    if w <= 0.0:
        w += math.tau
    return w - math.pi


def wrap_angle_array(theta: np.ndarray) -> np.ndarray:
    """Vectorized wrap_angle."""
    w = np.mod(np.asarray(theta, dtype=np.float64) + np.pi, math.tau)
    w = np.where(w <= 0.0, w + math.tau, w)
    return w - np.pi


@dataclass(frozen=True)
class Pose2D:
    """Planar pose: east/north position in meters, heading in radians.

    The heading is normalized to (-pi, pi] at construction, so poses built
    from arbitrary angle arithmetic always satisfy the invariant.
    """

    x: float
    y: float
    yaw: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "y", float(self.y))
        object.__setattr__(self, "yaw", wrap_angle(float(self.yaw)))


@dataclass(frozen=True)
class CameraModel:
    """Downward-looking camera: horizontal field of view and patch resolution."""

    fov_deg: float = 50.0
    patch_px: int = 64

    def __post_init__(self):
        if not 0.0 < self.fov_deg < 180.0:
            raise ValueError(f"fov_deg must be in (0, 180), got {self.fov_deg}")
        if self.patch_px < 2:
            raise ValueError(f"patch_px must be >= 2, got {self.patch_px}")

    def footprint_side(self, altitude: float) -> float:
        """Side length in meters of the square ground footprint at the given altitude."""
        if altitude <= 0.0:
            raise ValueError(f"altitude must be positive, got {altitude}")
        return 2.0 * altitude * math.tan(math.radians(self.fov_deg) / 2.0)


@dataclass(frozen=True)
class RasterMap:
    """Georeferenced single-channel raster."""

    pixels: np.ndarray  # (height_px, width_px) uint8, row index follows world y
    gsd: float  # meters per pixel
    origin: tuple[float, float] = (0.0, 0.0)  # world coords of pixel (0, 0) corner
    _flat: np.ndarray = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 2:
            raise ValueError(f"pixels must be 2-D, got shape {px.shape}")
        if px.shape[0] < 1 or px.shape[1] < 1:
            raise ValueError("raster must be at least 1x1")
        if px.dtype != np.uint8:
            raise ValueError(f"pixels must be uint8, got {px.dtype}")
        if not self.gsd > 0.0:
            raise ValueError(f"gsd must be positive, got {self.gsd}")
        object.__setattr__(self, "pixels", px)
        # Edge-padded float32 copy shared by all patch extractions: the +1
        # row/column lets bilinear sampling fetch x0+1/y0+1 without clamping.
        h, w = px.shape
        padded = np.empty((h + 1, w + 1), dtype=np.float32)
        padded[:h, :w] = px
        padded[h, :w] = px[h - 1]
        padded[:, w] = padded[:, w - 1]
        object.__setattr__(self, "_flat", padded.reshape(-1))

    @property
    def width_px(self) -> int:
        return self.pixels.shape[1]

    @property
    def height_px(self) -> int:
        return self.pixels.shape[0]

    @property
    def extent_m(self) -> tuple[float, float]:
        """(width, height) of the mapped area in meters."""
        return (self.width_px * self.gsd, self.height_px * self.gsd)

    def contains(self, x: float, y: float) -> bool:
        """True if the world point lies in the half-open mapped area."""
        ox, oy = self.origin
        ex, ey = self.extent_m
        return ox <= x < ox + ex and oy <= y < oy + ey


def world_to_pixel(grid: RasterMap, point: tuple[float, float]) -> tuple[int, int] | None:
    """Map a world point (meters) to its (ix, iy) pixel index, or None if outside."""
    ix = math.floor((point[0] - grid.origin[0]) / grid.gsd)
    iy = math.floor((point[1] - grid.origin[1]) / grid.gsd)
    if 0 <= ix < grid.width_px and 0 <= iy < grid.height_px:
        return (ix, iy)
    return None


def pixel_to_world(grid: RasterMap, index: tuple[int, int]) -> tuple[float, float]:
    """World coordinates (meters) of a pixel center."""
    return (
        grid.origin[0] + (index[0] + 0.5) * grid.gsd,
        grid.origin[1] + (index[1] + 0.5) * grid.gsd,
    )


def to_grayscale(color: np.ndarray) -> np.ndarray:
    """Convert an (H, W, 3) 8-bit image to single-channel luma.

    Uses the BT.601 weights with round-half-up, clamped to [0, 255].
    """
    arr = np.asarray(color)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError(f"expected an (H, W, 3) image, got shape {arr.shape}")
    luma = (
        0.299 * arr[:, :, 0].astype(np.float64)
        + 0.587 * arr[:, :, 1]
        + 0.114 * arr[:, :, 2]
    )
    return np.clip(np.floor(luma + 0.5), 0, 255).astype(np.uint8)


def _footprint_corners(x, y, yaw, half_side):
    """Corner coordinates (4, 2, n) of the rotated square footprint."""
    c, s = np.cos(yaw), np.sin(yaw)
    corners = []
    for sx in (-half_side, half_side):
        for sy in (-half_side, half_side):
            corners.append((x + c * sx - s * sy, y + s * sx + c * sy))
    return corners


def extract_patches(
    grid: RasterMap,
    x: np.ndarray,
    y: np.ndarray,
    yaw: np.ndarray,
    altitude: float,
    cam: CameraModel,
) -> tuple[np.ndarray, np.ndarray]:
    """Extract pose-aligned map patches for a batch of poses.

    Returns (patches, valid): patches is (n, patch_px, patch_px) float64 sampled
    with bilinear interpolation; valid marks poses whose footprint corners all
    fall inside the map extent.  Rows of invalid poses are zero.
    """
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    y = np.atleast_1d(np.asarray(y, dtype=np.float64))
    yaw = np.atleast_1d(np.asarray(yaw, dtype=np.float64))
    n = x.shape[0]
    p = cam.patch_px
    side = cam.footprint_side(altitude)
    half = side / 2.0

    ox, oy = grid.origin
    ex, ey = grid.extent_m
    valid = np.ones(n, dtype=bool)
    for cx, cy in _footprint_corners(x, y, yaw, half):
        valid &= (cx >= ox) & (cx < ox + ex) & (cy >= oy) & (cy < oy + ey)

    # Sample grid in the footprint frame: pixel centers, row index along +y.
    # Interpolation runs in float32 against the padded raster; sub-pixel
    # positions stay accurate to ~1e-5 px at map scales of a few kilometers.
    step = side / p
    offs = ((np.arange(p) + 0.5) * step - half).astype(np.float32)
    dx = offs[None, :]
    dy = offs[:, None]

    c = np.cos(yaw).astype(np.float32)[:, None, None]
    s = np.sin(yaw).astype(np.float32)[:, None, None]
    wx = x.astype(np.float32)[:, None, None] + c * dx - s * dy
    wy = y.astype(np.float32)[:, None, None] + s * dx + c * dy

    inv_gsd = np.float32(1.0 / grid.gsd)
    fx = (wx - np.float32(ox)) * inv_gsd - np.float32(0.5)
    fy = (wy - np.float32(oy)) * inv_gsd - np.float32(0.5)
    x0 = np.floor(fx)
    y0 = np.floor(fy)
    tx = fx - x0
    ty = fy - y0

    stride = grid.width_px + 1  # padded row length
    ix = np.clip(x0.astype(np.int32), 0, grid.width_px - 1)
    iy = np.clip(y0.astype(np.int32), 0, grid.height_px - 1)
    base = iy * np.int32(stride) + ix

    flat = grid._flat
    v00 = flat[base]
    v10 = flat[base + 1]
    v01 = flat[base + stride]
    v11 = flat[base + stride + 1]
    top = v00 + tx * (v10 - v00)
    bot = v01 + tx * (v11 - v01)
    patches = (top + ty * (bot - top)).astype(np.float64)
    patches[~valid] = 0.0
    return patches, valid


def extract_patch(
    grid: RasterMap, pose: Pose2D, altitude: float, cam: CameraModel
) -> np.ndarray | None:
    """Extract the map patch under the camera footprint at the given pose.

    Returns a (patch_px, patch_px) float64 array, or None when any footprint
    corner falls outside the map extent.
    """
    patches, valid = extract_patches(
        grid,
        np.array([pose.x]),
        np.array([pose.y]),
        np.array([pose.yaw]),
        altitude,
        cam,
    )
    if not valid[0]:
        return None
    return patches[0]
