"""Benchmark harness: seeded runs, conversion sweeps, ranking, robustness.

Every run derives its random seeds from the base seed and the cell identity
(scenario, conversion, repetition), never from grid position, so adding a
scenario or conversion leaves existing cells bit-identical.  Odometry and
sensor noise seeds deliberately omit the conversion, so all conversions in a
cell see the same flight realization and comparisons are paired.
"""

from __future__ import annotations

import hashlib
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .config import Config, FlightSpec, OdometrySpec
from .errors import ConfigurationError
from .kld import KldConfig
from .likelihood import ConversionSpec
from .motion import NoiseConfig
from .pfilter import FilterConfig, run_flight
from .raster import CameraModel, Pose2D, RasterMap
from .report import RunReport, euclidean_error
from .sim import (
    AgeSpec,
    FlightLog,
    FlightPlan,
    RenderedFrames,
    WorldSpec,
    age_map,
    dead_reckoning,
    generate_flight,
    generate_world,
    synth_odometry,
)

_TERRAIN_LETTER = {"fractal": "F", "urban_blocks": "U"}
_SHAPE_LETTER = {"line": "L", "circle": "C", "rectangle": "R"}


def scenario_name(terrain: str, shape: str, altitude: float) -> str:
    return f"{_TERRAIN_LETTER[terrain]}{_SHAPE_LETTER[shape]}-{altitude:g}"


def derive_seed(*tokens) -> int:
    """Stable 63-bit seed from arbitrary tokens (independent of hash salting)."""
    text = "/".join(str(t) for t in tokens)
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") >> 1


def anchor_plan(spec: FlightSpec, grid_extent: tuple[float, float],
                origin: tuple[float, float]) -> FlightPlan:
    """Place a flight geometry on a map; default start centers the path."""
    if spec.start is not None:
        start = Pose2D(*spec.start)
    else:
        cx = origin[0] + grid_extent[0] / 2.0
        cy = origin[1] + grid_extent[1] / 2.0
        if spec.shape == "line":
            start = Pose2D(cx - spec.length_m / 2.0, cy, 0.0)
        elif spec.shape == "circle":
            start = Pose2D(cx, cy - spec.radius_m, 0.0)
        else:
            start = Pose2D(cx - spec.side_a_m / 2.0, cy - spec.side_b_m / 2.0, 0.0)
    return FlightPlan(
        shape=spec.shape,
        altitude=spec.altitude_m,
        speed=spec.speed_mps,
        frame_rate=spec.frame_rate_hz,
        start=start,
        length=spec.length_m if spec.shape == "line" else None,
        radius=spec.radius_m if spec.shape == "circle" else None,
        side_a=spec.side_a_m if spec.shape == "rectangle" else None,
        side_b=spec.side_b_m if spec.shape == "rectangle" else None,
    )


@dataclass(frozen=True)
class RunTask:
    """Everything one benchmark run needs; picklable for the worker pool."""

    scenario: str
    world: WorldSpec
    plan: FlightPlan
    cam: CameraModel
    conversion: ConversionSpec
    kld: KldConfig
    noise: NoiseConfig
    fcfg: FilterConfig
    n_init: int
    init_radius: float
    odometry: OdometrySpec
    sensor_sigma: float
    rep: int
    age_level: float
    age_seed: int
    odo_seed: int
    sensor_seed: int
    filter_seed: int


@dataclass(frozen=True)
class SweepRow:
    scenario: str
    terrain: str
    shape: str
    altitude: float
    conversion: str
    param: float
    age_level: float
    rep: int
    seed: int
    frames: int
    mean_error_m: float
    mean_evaluations: float
    dr_mean_error_m: float

    @property
    def label(self) -> str:
        if self.conversion in ("linear", "softmax"):
            return self.conversion
        return f"{self.conversion}:{self.param:g}"

    @property
    def failed(self) -> bool:
        return math.isnan(self.mean_error_m)


# Per-process caches: worlds and aged worlds are pure functions of their keys.
_WORLDS: dict[WorldSpec, RasterMap] = {}
_AGED: dict[tuple[WorldSpec, float, int], RasterMap] = {}


def get_world(spec: WorldSpec) -> RasterMap:
    if spec not in _WORLDS:
        _WORLDS[spec] = generate_world(spec)
    return _WORLDS[spec]


def _matching_map(world_spec: WorldSpec, level: float, age_seed: int) -> RasterMap:
    base = get_world(world_spec)
    if level == 0.0:
        return base
    key = (world_spec, level, age_seed)
    if key not in _AGED:
        _AGED[key] = age_map(base, AgeSpec.from_level(level, age_seed))
    return _AGED[key]


def prepare_flight(task: RunTask) -> tuple[RasterMap, FlightLog]:
    """World + flight + odometry + frames for a task (frames use the clean map)."""
    world = get_world(task.world)
    flight = generate_flight(task.plan, world, task.cam)
    flight.odometry = synth_odometry(
        flight,
        task.odometry.drift,
        task.odometry.sigma_tran_m,
        task.odometry.sigma_rot_rad,
        np.random.default_rng([task.odo_seed]),
    )
    flight.frames = RenderedFrames(
        world, flight, task.cam, task.sensor_sigma, task.sensor_seed
    )
    return world, flight


def dr_mean_error(flight: FlightLog) -> float:
    """Mean error of the plain dead-reckoning (integrated odometry) trajectory."""
    dr = dead_reckoning(flight.poses[0], flight.odometry)
    errors = [
        euclidean_error(gt.x, gt.y, p.x, p.y) for gt, p in zip(flight.poses, dr)
    ]
    return sum(errors) / len(errors)


def execute_task(task: RunTask) -> SweepRow:
    """Run one benchmark cell repetition; failures yield a NaN row."""
    try:
        _, flight = prepare_flight(task)
        match = _matching_map(task.world, task.age_level, task.age_seed)
        report = run_flight(
            flight, match, task.conversion, task.cam, task.kld, task.noise,
            task.fcfg, task.init_radius, task.n_init, task.filter_seed,
            meta={"scenario": task.scenario, "age_level": f"{task.age_level:g}"},
        )
        return SweepRow(
            scenario=task.scenario,
            terrain=task.world.terrain_kind,
            shape=task.plan.shape,
            altitude=task.plan.altitude,
            conversion=task.conversion.kind,
            param=task.conversion.param,
            age_level=task.age_level,
            rep=task.rep,
            seed=task.filter_seed,
            frames=len(report.rows),
            mean_error_m=report.mean_error_m,
            mean_evaluations=report.mean_evaluations,
            dr_mean_error_m=dr_mean_error(flight),
        )
    except ConfigurationError:
        raise
    except Exception:
        return SweepRow(
            scenario=task.scenario, terrain=task.world.terrain_kind,
            shape=task.plan.shape, altitude=task.plan.altitude,
            conversion=task.conversion.kind, param=task.conversion.param,
            age_level=task.age_level, rep=task.rep, seed=task.filter_seed,
            frames=0, mean_error_m=float("nan"),
            mean_evaluations=float("nan"), dr_mean_error_m=float("nan"),
        )


def make_task(
    cfg: Config,
    terrain: str,
    shape: str,
    altitude: float,
    conversion: ConversionSpec,
    rep: int,
    age_level: float = 0.0,
) -> RunTask:
    name = scenario_name(terrain, shape, altitude)
    world = replace(
        cfg.world, terrain_kind=terrain, seed=derive_seed(cfg.seed, "world", terrain)
    )
    flight_spec = replace(cfg.flight, shape=shape, altitude_m=altitude)
    extent = (world.size_px * world.gsd, world.size_px * world.gsd)
    plan = anchor_plan(flight_spec, extent, (0.0, 0.0))
    label = conversion.label()
    return RunTask(
        scenario=name,
        world=world,
        plan=plan,
        cam=cfg.cam,
        conversion=conversion,
        kld=cfg.kld,
        noise=cfg.noise,
        fcfg=cfg.fcfg,
        n_init=cfg.n_init,
        init_radius=cfg.init_radius_m,
        odometry=cfg.odometry,
        sensor_sigma=cfg.sensor_sigma,
        rep=rep,
        age_level=age_level,
        age_seed=derive_seed(cfg.seed, name, "age", f"{age_level:g}"),
        odo_seed=derive_seed(cfg.seed, name, "odo", rep),
        sensor_seed=derive_seed(cfg.seed, name, "sensor", rep),
        filter_seed=derive_seed(cfg.seed, name, label, "filter", rep),
    )


def run_tasks(tasks: list[RunTask], jobs: int = 1) -> list[SweepRow]:
    """Execute tasks, preserving order; jobs > 1 fans out to processes."""
    if jobs <= 1 or len(tasks) <= 1:
        return [execute_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(execute_task, tasks, chunksize=4))


@dataclass
class SweepResult:
    rows: list[SweepRow]
    meta: dict[str, str] = field(default_factory=dict)

    def labels(self) -> list[str]:
        seen = []
        for r in self.rows:
            if r.label not in seen:
                seen.append(r.label)
        return seen

    def scenarios(self) -> list[str]:
        seen = []
        for r in self.rows:
            if r.scenario not in seen:
                seen.append(r.scenario)
        return seen


@dataclass(frozen=True)
class CellStats:
    mean_error_m: float
    mean_evaluations: float
    n_runs: int
    valid: bool


def cell_stats(rows: list[SweepRow]) -> CellStats:
    good = [r for r in rows if not r.failed]
    if not good:
        return CellStats(float("nan"), float("nan"), len(rows), valid=False)
    return CellStats(
        mean_error_m=sum(r.mean_error_m for r in good) / len(good),
        mean_evaluations=sum(r.mean_evaluations for r in good) / len(good),
        n_runs=len(rows),
        valid=True,
    )


def cells(result: SweepResult) -> dict[tuple[str, str, float], CellStats]:
    """Aggregate runs per (scenario, conversion label, age level)."""
    grouped: dict[tuple[str, str, float], list[SweepRow]] = {}
    for r in result.rows:
        grouped.setdefault((r.scenario, r.label, r.age_level), []).append(r)
    return {key: cell_stats(rows) for key, rows in grouped.items()}


def run_sweep(cfg: Config, jobs: int = 1) -> SweepResult:
    """The accuracy/speed experiment grid: scenarios x conversions x reps."""
    if not cfg.sweep.conversions:
        raise ConfigurationError("sweep needs at least one conversion")
    tasks = []
    for terrain in cfg.sweep.terrains:
        for shape in cfg.sweep.shapes:
            for altitude in cfg.sweep.altitudes:
                for conv in cfg.sweep.conversions:
                    for rep in range(cfg.sweep.repetitions):
                        tasks.append(make_task(cfg, terrain, shape, altitude, conv, rep))
    rows = run_tasks(tasks, jobs)
    return SweepResult(rows=rows, meta={
        "base_seed": str(cfg.seed),
        "repetitions": str(cfg.sweep.repetitions),
    })


def run_robustness(cfg: Config, jobs: int = 1) -> SweepResult:
    """Accuracy against ever-older matching maps; frames stay from level 0."""
    spec = cfg.robustness
    if not spec.conversions:
        raise ConfigurationError("robustness needs at least one conversion")
    terrain = cfg.sweep.terrains[0]
    shape = cfg.sweep.shapes[0]
    altitude = cfg.sweep.altitudes[0]
    tasks = []
    for level in spec.age_levels:
        for conv in spec.conversions:
            for rep in range(spec.repetitions):
                tasks.append(
                    make_task(cfg, terrain, shape, altitude, conv, rep, age_level=level)
                )
    rows = run_tasks(tasks, jobs)
    return SweepResult(rows=rows, meta={
        "base_seed": str(cfg.seed),
        "repetitions": str(spec.repetitions),
    })


# ---------------------------------------------------------------------------
# Ranking and comparison

@dataclass(frozen=True)
class RankRow:
    conversion: str
    param: float
    label: str
    score: float
    rank: float


def _positions_with_ties(values: list[float]) -> list[float]:
    """Rank positions 1..m for ascending values; exact ties share the mean."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    pos = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        shared = (i + j) / 2.0 + 1.0
        for t in range(i, j + 1):
            pos[order[t]] = shared
        i = j + 1
    return pos


def rank_configs(result: SweepResult, age_level: float = 0.0) -> list[RankRow]:
    """Score conversions across scenarios: rank points per scenario, summed;
    the lowest total is the most accurate configuration."""
    stats = cells(result)
    labels = result.labels()
    scenarios = result.scenarios()
    if len(labels) < 2 or len(scenarios) < 1:
        raise ValueError("ranking needs >= 2 configurations and >= 1 scenario")

    totals = {label: 0.0 for label in labels}
    for scen in scenarios:
        means = []
        for label in labels:
            st = stats.get((scen, label, age_level))
            if st is None or not st.valid:
                raise ValueError(f"no valid runs for {label} on {scen}")
            means.append(st.mean_error_m)
        for label, points in zip(labels, _positions_with_ties(means)):
            totals[label] += points

    by_label = {r.label: r for r in result.rows}
    ordered = sorted(labels, key=lambda lb: totals[lb])
    ranks = _positions_with_ties([totals[lb] for lb in ordered])
    out = []
    for label, rank in zip(ordered, ranks):
        row = by_label[label]
        out.append(RankRow(
            conversion=row.conversion, param=row.param, label=label,
            score=totals[label], rank=rank,
        ))
    return out


@dataclass(frozen=True)
class CompareResult:
    """Improvement of run A over baseline B, in the paper's reporting style."""

    delta_accuracy_pct: float | None  # (err_b - err_a) / err_a * 100
    speedup: float | None  # evaluations_b / evaluations_a


def compare_summaries(
    mean_error_a: float, mean_evals_a: float,
    mean_error_b: float, mean_evals_b: float,
) -> CompareResult:
    delta = None
    if mean_error_a > 0.0:
        delta = (mean_error_b - mean_error_a) / mean_error_a * 100.0
    speedup = None
    if mean_evals_a > 0.0:
        speedup = mean_evals_b / mean_evals_a
    return CompareResult(delta_accuracy_pct=delta, speedup=speedup)


def compare_reports(a: RunReport, b: RunReport) -> CompareResult:
    return compare_summaries(
        a.mean_error_m, a.mean_evaluations, b.mean_error_m, b.mean_evaluations
    )


# ---------------------------------------------------------------------------
# CSV emission (same "# key=value" preamble format as run reports)

_SWEEP_COLUMNS = (
    "scenario", "terrain", "shape", "altitude", "conversion", "param",
    "age_level", "rep", "seed", "frames", "mean_error_m", "mean_evaluations",
    "dr_mean_error_m",
)


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(float(value))
    return str(value)


def write_sweep_csv(result: SweepResult, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    out = [f"# {k}={result.meta[k]}\n" for k in sorted(result.meta)]
    out.append(",".join(_SWEEP_COLUMNS) + "\n")
    for r in result.rows:
        out.append(",".join(_fmt(getattr(r, c)) for c in _SWEEP_COLUMNS) + "\n")
    path.write_text("".join(out), encoding="utf-8")


def read_sweep_csv(path: str | Path) -> SweepResult:
    meta: dict[str, str] = {}
    rows: list[SweepRow] = []
    body = False
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line:
            continue
        if line.startswith("#"):
            key, value = line[1:].strip().split("=", 1)
            meta[key] = value
            continue
        if not body:
            if tuple(line.split(",")) != _SWEEP_COLUMNS:
                raise ValueError(f"{path}: unexpected sweep header {line!r}")
            body = True
            continue
        f = line.split(",")
        rows.append(SweepRow(
            scenario=f[0], terrain=f[1], shape=f[2], altitude=float(f[3]),
            conversion=f[4], param=float(f[5]), age_level=float(f[6]),
            rep=int(f[7]), seed=int(f[8]), frames=int(f[9]),
            mean_error_m=float(f[10]), mean_evaluations=float(f[11]),
            dr_mean_error_m=float(f[12]),
        ))
    if not body:
        raise ValueError(f"{path}: no header row found")
    return SweepResult(rows=rows, meta=meta)


def write_rank_csv(ranking: list[RankRow], path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    out = ["function,param,score,rank\n"]
    for r in ranking:
        out.append(f"{r.conversion},{r.param!r},{r.score!r},{r.rank!r}\n")
    path.write_text("".join(out), encoding="utf-8")


def write_robustness_csv(result: SweepResult, path: str | Path) -> None:
    """Aggregated curve data: mean accuracy per (age level, conversion)."""
    stats = cells(result)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    out = [f"# {k}={result.meta[k]}\n" for k in sorted(result.meta)]
    out.append("age_level,conversion,param,mean_error_m,mean_evaluations,n_runs\n")
    keys = sorted(stats.keys(), key=lambda k: (k[2], k[1]))
    by_label = {r.label: r for r in result.rows}
    for scen, label, level in keys:
        st = stats[(scen, label, level)]
        row = by_label[label]
        out.append(
            f"{level!r},{row.conversion},{row.param!r},"
            f"{st.mean_error_m!r},{st.mean_evaluations!r},{st.n_runs}\n"
        )
    path.write_text("".join(out), encoding="utf-8")
