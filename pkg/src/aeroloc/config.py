"""Run configuration: one JSON document drives every CLI command.

All sections are optional and fall back to desk-scale defaults.  Paths inside
the document are resolved relative to the config file's directory.  See
README.md for the full schema.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigurationError
from .kld import KldConfig
from .likelihood import ConversionSpec
from .motion import NoiseConfig
from .pfilter import FilterConfig
from .raster import CameraModel, Pose2D
from .sim import WorldSpec

DEFAULT_CONVERSIONS = [
    {"kind": "linear"},
    {"kind": "softmax"},
    {"kind": "rectifying", "param": 0.2},
    {"kind": "rectifying", "param": 0.1},
    {"kind": "rectifying", "param": 0.0},
    {"kind": "rectifying", "param": -0.1},
    {"kind": "rectifying", "param": -0.2},
    {"kind": "logistic", "param": 0.7},
    {"kind": "logistic", "param": 0.4},
    {"kind": "logistic", "param": 0.2},
    {"kind": "logistic", "param": 0.1},
    {"kind": "logistic", "param": 0.05},
]


@dataclass(frozen=True)
class FlightSpec:
    """Geometry of the simulated flight before it is anchored to a map."""

    shape: str = "line"
    altitude_m: float = 200.0
    speed_mps: float = 25.0
    frame_rate_hz: float = 5.0
    length_m: float = 600.0
    radius_m: float = 150.0
    side_a_m: float = 300.0
    side_b_m: float = 200.0
    start: tuple[float, float, float] | None = None  # x, y, yaw; None = centered


@dataclass(frozen=True)
class OdometrySpec:
    drift: float = 0.02
    sigma_tran_m: float = 0.05
    sigma_rot_rad: float = 0.004


@dataclass(frozen=True)
class SweepSpec:
    terrains: tuple[str, ...] = ("fractal", "urban_blocks")
    shapes: tuple[str, ...] = ("line",)
    altitudes: tuple[float, ...] = (200.0,)
    conversions: tuple[ConversionSpec, ...] = ()
    repetitions: int = 10


@dataclass(frozen=True)
class RobustnessSpec:
    age_levels: tuple[float, ...] = (0.0, 0.25, 0.5)
    conversions: tuple[ConversionSpec, ...] = ()
    repetitions: int = 10


@dataclass
class Config:
    seed: int = 42
    world: WorldSpec = field(default_factory=lambda: WorldSpec(seed=1))
    map_path: Path | None = None
    flight: FlightSpec = field(default_factory=FlightSpec)
    flight_dir: Path | None = None
    cam: CameraModel = field(default_factory=CameraModel)
    conversion: ConversionSpec = field(
        default_factory=lambda: ConversionSpec("logistic", 0.2)
    )
    kld: KldConfig = field(default_factory=lambda: KldConfig(n_max=4000))
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    fcfg: FilterConfig = field(default_factory=FilterConfig)
    n_init: int = 1200
    init_radius_m: float = 120.0
    odometry: OdometrySpec = field(default_factory=OdometrySpec)
    sensor_sigma: float = 2.0
    sweep: SweepSpec = field(default_factory=SweepSpec)
    robustness: RobustnessSpec = field(default_factory=RobustnessSpec)
    base_dir: Path = field(default_factory=Path.cwd)


def _section(doc: dict, name: str) -> dict:
    value = doc.get(name, {})
    if not isinstance(value, dict):
        raise ConfigurationError(f"config section {name!r} must be an object")
    return value


def _conversions(entries, fallback) -> tuple[ConversionSpec, ...]:
    if entries is None:
        entries = fallback
    out = []
    for e in entries:
        try:
            out.append(ConversionSpec(kind=e["kind"], param=float(e.get("param", 0.0))))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigurationError(f"bad conversion entry {e!r}: {exc}") from exc
    return tuple(out)


def parse_config(doc: dict, base_dir: Path) -> Config:
    """Build a typed Config from a parsed JSON document."""
    try:
        cfg = Config(base_dir=base_dir)
        cfg.seed = int(doc.get("seed", cfg.seed))

        w = _section(doc, "world")
        cfg.world = WorldSpec(
            seed=int(w.get("seed", cfg.seed)),
            size_px=int(w.get("size_px", 1024)),
            gsd=float(w.get("gsd", 2.0)),
            terrain_kind=w.get("terrain_kind", "fractal"),
            octaves=int(w.get("octaves", 5)),
            roughness=float(w.get("roughness", 0.55)),
        )
        if "map" in doc:
            cfg.map_path = (base_dir / doc["map"]).resolve()

        f = _section(doc, "flight")
        start = f.get("start")
        cfg.flight = FlightSpec(
            shape=f.get("shape", "line"),
            altitude_m=float(f.get("altitude_m", 200.0)),
            speed_mps=float(f.get("speed_mps", 25.0)),
            frame_rate_hz=float(f.get("frame_rate_hz", 5.0)),
            length_m=float(f.get("length_m", 600.0)),
            radius_m=float(f.get("radius_m", 150.0)),
            side_a_m=float(f.get("side_a_m", 300.0)),
            side_b_m=float(f.get("side_b_m", 200.0)),
            start=tuple(float(v) for v in start) if start is not None else None,
        )
        if "flight_dir" in doc:
            cfg.flight_dir = (base_dir / doc["flight_dir"]).resolve()

        c = _section(doc, "camera")
        cfg.cam = CameraModel(
            fov_deg=float(c.get("fov_deg", 50.0)),
            patch_px=int(c.get("patch_px", 64)),
        )

        o = _section(doc, "odometry")
        cfg.odometry = OdometrySpec(
            drift=float(o.get("drift", 0.02)),
            sigma_tran_m=float(o.get("sigma_tran_m", 0.05)),
            sigma_rot_rad=float(o.get("sigma_rot_rad", 0.004)),
        )
        cfg.sensor_sigma = float(_section(doc, "sensor").get("noise_sigma", 2.0))

        p = _section(doc, "filter")
        cfg.conversion = ConversionSpec(
            kind=p.get("conversion", "logistic"),
            param=float(p.get("conversion_param", 0.2)),
        )
        cfg.kld = KldConfig(
            epsilon=float(p.get("kld_epsilon", 0.05)),
            delta=float(p.get("kld_delta", 0.01)),
            bin_size=float(p.get("bin_size_m", 5.0)),
            n_min=int(p.get("n_min", 100)),
            n_max=int(p.get("n_max", 4000)),
        )
        cfg.noise = NoiseConfig(
            alpha1=float(p.get("alpha1", 1.0)),
            alpha2=float(p.get("alpha2", 1.0)),
            alpha3=float(p.get("alpha3", 1.0)),
            eps_tran_scale=float(p.get("eps_tran_scale", 0.05)),
            eps_tran_min=float(p.get("eps_tran_min", 0.1)),
            eps_rot=float(p.get("eps_rot", 0.02)),
        )
        cfg.fcfg = FilterConfig(
            batch_size=int(p.get("batch_size", 64)),
            eps_rot_init=float(p.get("eps_rot_init", 0.05)),
            strict_heading_sum=bool(p.get("strict_heading_sum", False)),
        )
        cfg.n_init = int(p.get("n_init", 1200))
        cfg.init_radius_m = float(p.get("init_radius_m", 120.0))

        s = _section(doc, "sweep")
        cfg.sweep = SweepSpec(
            terrains=tuple(s.get("terrains", ("fractal", "urban_blocks"))),
            shapes=tuple(s.get("shapes", ("line",))),
            altitudes=tuple(float(a) for a in s.get("altitudes", (200.0,))),
            conversions=_conversions(s.get("conversions"), DEFAULT_CONVERSIONS),
            repetitions=int(s.get("repetitions", 10)),
        )
        r = _section(doc, "robustness")
        cfg.robustness = RobustnessSpec(
            age_levels=tuple(float(v) for v in r.get("age_levels", (0.0, 0.25, 0.5))),
            conversions=_conversions(
                r.get("conversions"),
                [
                    {"kind": "logistic", "param": 0.7},
                    {"kind": "logistic", "param": 0.4},
                    {"kind": "logistic", "param": 0.2},
                    {"kind": "logistic", "param": 0.05},
                    {"kind": "rectifying", "param": 0.2},
                    {"kind": "rectifying", "param": 0.1},
                    {"kind": "rectifying", "param": 0.0},
                ],
            ),
            repetitions=int(r.get("repetitions", 10)),
        )
    except ConfigurationError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigurationError(f"invalid configuration: {exc}") from exc
    return cfg


def load_config(path: str | Path | None) -> Config:
    """Load a JSON config file; None yields the all-defaults configuration."""
    if path is None:
        return Config(base_dir=Path.cwd())
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"config file not found: {path}")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigurationError(f"{path}: top-level JSON value must be an object")
    return parse_config(doc, path.parent.resolve())
