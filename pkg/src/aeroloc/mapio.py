"""Map raster file I/O.

A map on disk is an 8-bit grayscale or RGB PNG (or a binary P5 PGM) plus a
sidecar UTF-8 text file `<raster>.meta` with one `key=value` per line:

    gsd_m_per_px=2.0
    origin_x_m=0.0
    origin_y_m=0.0

RGB rasters are converted to grayscale on load.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image

from .raster import RasterMap, to_grayscale


def read_kv(path: Path) -> dict[str, str]:
    """Parse a key=value text file; blank lines and '#' comments are skipped."""
    out: dict[str, str] = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"{path}: malformed line {line!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def write_kv(path: Path, entries: dict[str, str]) -> None:
    text = "".join(f"{k}={v}\n" for k, v in entries.items())
    Path(path).write_text(text, encoding="utf-8")


def meta_path(raster_path: Path) -> Path:
    return Path(str(raster_path) + ".meta")


def load_map(path: str | Path) -> RasterMap:
    """Load a raster and its sidecar metadata into a RasterMap."""
    path = Path(path)
    img = Image.open(path)
    if img.mode == "RGB":
        pixels = to_grayscale(np.asarray(img, dtype=np.uint8))
    elif img.mode == "L":
        pixels = np.asarray(img, dtype=np.uint8)
    else:
        raise ValueError(f"{path}: unsupported image mode {img.mode!r} (need L or RGB)")

    meta = read_kv(meta_path(path))
    if "gsd_m_per_px" not in meta:
        raise ValueError(f"{meta_path(path)}: missing required key gsd_m_per_px")
    gsd = float(meta["gsd_m_per_px"])
    origin = (float(meta.get("origin_x_m", 0.0)), float(meta.get("origin_y_m", 0.0)))
    return RasterMap(pixels=pixels, gsd=gsd, origin=origin)


def save_map(grid: RasterMap, path: str | Path) -> None:
    """Write a RasterMap as PNG or PGM (by extension) with its sidecar metadata."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(grid.pixels, mode="L").save(path)
    write_kv(
        meta_path(path),
        {
            "gsd_m_per_px": repr(grid.gsd),
            "origin_x_m": repr(grid.origin[0]),
            "origin_y_m": repr(grid.origin[1]),
        },
    )
