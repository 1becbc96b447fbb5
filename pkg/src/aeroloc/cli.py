"""Command-line harness.

Subcommands: gen-world, gen-flight, run, sweep, rank, compare, robustness,
report.  Exit codes: 0 success, 1 runtime failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import bench, mapio, svgplot
from .bench import make_task, prepare_flight
from .config import Config, load_config
from .errors import ConfigurationError
from .pfilter import run_flight
from .report import read_report_csv, write_report_csv
from .sim import load_flight, save_flight


def _apply_overrides(cfg: Config, args) -> Config:
    if args.seed is not None:
        cfg.seed = args.seed
    return cfg


def _say(args, message: str) -> None:
    if not args.quiet:
        print(message)


def _single_task(cfg: Config) -> bench.RunTask:
    """The one-run task described by the config's world/flight/filter sections."""
    return make_task(
        cfg,
        terrain=cfg.world.terrain_kind,
        shape=cfg.flight.shape,
        altitude=cfg.flight.altitude_m,
        conversion=cfg.conversion,
        rep=0,
    )


def cmd_gen_world(cfg: Config, args) -> int:
    task = _single_task(cfg)
    world = bench.get_world(task.world)
    out = Path(args.out) / "map.png"
    mapio.save_map(world, out)
    _say(args, f"wrote {out} ({world.width_px}x{world.height_px}px, "
               f"gsd {world.gsd} m/px)")
    return 0


def cmd_gen_flight(cfg: Config, args) -> int:
    task = _single_task(cfg)
    world, flight = prepare_flight(task)
    out = Path(args.out)
    map_path = out / "map.png"
    if not map_path.exists():
        mapio.save_map(world, map_path)
    flight_dir = out / "flight"
    save_flight(flight, flight_dir, task.cam, task.plan.frame_rate, "../map.png")
    _say(args, f"wrote {flight_dir} ({len(flight)} frames)")
    return 0


def _load_run_inputs(cfg: Config, task: bench.RunTask):
    """Flight + matching map, from disk when the config points at files."""
    if cfg.flight_dir is not None:
        flight, cam, _, map_ref = load_flight(cfg.flight_dir)
        if cfg.map_path is not None:
            grid = mapio.load_map(cfg.map_path)
        else:
            grid = mapio.load_map((cfg.flight_dir / map_ref).resolve())
        return flight, grid, cam
    _, flight = prepare_flight(task)
    grid = mapio.load_map(cfg.map_path) if cfg.map_path else bench.get_world(task.world)
    return flight, grid, task.cam


def cmd_run(cfg: Config, args) -> int:
    task = _single_task(cfg)
    try:
        flight, grid, cam = _load_run_inputs(cfg, task)
    except FileNotFoundError as exc:
        raise ConfigurationError(f"missing input: {exc}") from exc
    report = run_flight(
        flight, grid, task.conversion, cam, task.kld, task.noise, task.fcfg,
        task.init_radius, task.n_init, task.filter_seed,
        meta={"scenario": task.scenario, "base_seed": str(cfg.seed)},
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_report_csv(report, out / "report.csv")

    lines = report.summary_lines()
    if flight.odometry is not None:
        lines.append(f"dead_reckoning_error_m={bench.dr_mean_error(flight)!r}")
    (out / "summary.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    _say(args, f"mean error {report.mean_error_m:.2f} m over {len(report.rows)} "
               f"frames; wrote {out / 'report.csv'}")
    return 0


def cmd_sweep(cfg: Config, args) -> int:
    result = bench.run_sweep(cfg, jobs=args.jobs)
    out = Path(args.out)
    path = out / "sweep.csv"
    bench.write_sweep_csv(result, path)
    _say(args, f"wrote {path} ({len(result.rows)} runs)")
    return 0


def cmd_rank(cfg: Config, args) -> int:
    result = bench.read_sweep_csv(args.sweep_csv)
    ranking = bench.rank_configs(result)
    path = Path(args.out) / "ranking.csv"
    bench.write_rank_csv(ranking, path)
    if not args.quiet:
        print(f"{'function':<14} {'param':>6} {'score':>7} {'rank':>5}")
        for r in ranking:
            print(f"{r.conversion:<14} {r.param:>6g} {r.score:>7g} {r.rank:>5g}")
    _say(args, f"wrote {path}")
    return 0


def cmd_compare(cfg: Config, args) -> int:
    rep_a = read_report_csv(args.report_a)
    rep_b = read_report_csv(args.report_b)
    res = bench.compare_reports(rep_a, rep_b)
    if res.delta_accuracy_pct is None:
        print("accuracy improvement: invalid (zero baseline mean)")
    else:
        print(f"accuracy improvement: {res.delta_accuracy_pct:+.1f}%")
    if res.speedup is None:
        print("speedup: invalid (zero evaluation count)")
    else:
        print(f"speedup: {res.speedup:.2f}x")
    return 0


def cmd_robustness(cfg: Config, args) -> int:
    result = bench.run_robustness(cfg, jobs=args.jobs)
    out = Path(args.out)
    bench.write_sweep_csv(result, out / "robustness_runs.csv")
    bench.write_robustness_csv(result, out / "robustness.csv")
    _say(args, f"wrote {out / 'robustness.csv'} ({len(result.rows)} runs)")
    return 0


def cmd_report(cfg: Config, args) -> int:
    result = bench.read_sweep_csv(args.runs_csv)
    stats = bench.cells(result)
    out = Path(args.out)

    levels = sorted({r.age_level for r in result.rows})
    scenarios = result.scenarios()
    if len(levels) > 1:
        # robustness curves: error vs age level, one line per conversion
        series: dict[str, list[tuple[float, float]]] = {}
        for (scen, label, level), st in stats.items():
            if st.valid:
                series.setdefault(label, []).append((level, st.mean_error_m))
        path = out / "robustness.svg"
        svgplot.write_line_chart(
            path, "Localization error vs map age", "map age level",
            "mean error (m)", series,
        )
    else:
        # sweep summary: error per scenario, one line per conversion
        series = {}
        for (scen, label, _level), st in stats.items():
            if st.valid:
                series.setdefault(label, []).append(
                    (float(scenarios.index(scen)), st.mean_error_m)
                )
        path = out / "sweep.svg"
        svgplot.write_line_chart(
            path, "Localization error by scenario", "scenario index",
            "mean error (m)", series,
        )
    _say(args, f"wrote {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aeroloc",
        description="Map-relative particle filter localization benchmark",
    )
    parser.add_argument("--config", type=Path, default=None, help="JSON config file")
    parser.add_argument("--seed", type=int, default=None, help="override base seed")
    parser.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    parser.add_argument("--jobs", type=int, default=1, help="parallel worker count")
    parser.add_argument("--quiet", action="store_true", help="suppress progress output")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("gen-world", help="generate the procedural map raster")
    sub.add_parser("gen-flight", help="generate a flight dataset directory")
    sub.add_parser("run", help="run one localization flight")
    sub.add_parser("sweep", help="run the conversion-function sweep")
    p = sub.add_parser("rank", help="rank conversions from a sweep CSV")
    p.add_argument("sweep_csv", type=Path)
    p = sub.add_parser("compare", help="compare two run reports (A vs baseline B)")
    p.add_argument("report_a", type=Path)
    p.add_argument("report_b", type=Path)
    sub.add_parser("robustness", help="run the aged-map robustness experiment")
    p = sub.add_parser("report", help="render SVG charts from a runs CSV")
    p.add_argument("runs_csv", type=Path)
    return parser


_COMMANDS = {
    "gen-world": cmd_gen_world,
    "gen-flight": cmd_gen_flight,
    "run": cmd_run,
    "sweep": cmd_sweep,
    "rank": cmd_rank,
    "compare": cmd_compare,
    "robustness": cmd_robustness,
    "report": cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _apply_overrides(load_config(args.config), args)
        return _COMMANDS[args.command](cfg, args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"missing input: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
