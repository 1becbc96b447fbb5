"""Per-flight run reports: one row per frame plus summary statistics.

Reports serialize to CSV with `# key=value` metadata lines (seed, conversion,
and friends) ahead of the header row, so any emitted file carries everything
needed to reproduce the run.  Floats are written with repr for exact
round-tripping.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path


@dataclass(frozen=True)
class FrameRow:
    frame: int
    t_sec: float
    gt_x: float
    gt_y: float
    gt_yaw: float
    est_x: float
    est_y: float
    est_yaw: float
    error_m: float
    n_evaluated: int
    k_bins: int
    degenerate: bool


_COLUMNS = (
    "frame", "t_sec", "gt_x", "gt_y", "gt_yaw", "est_x", "est_y", "est_yaw",
    "error_m", "n_evaluated", "k_bins", "degenerate",
)


@dataclass
class RunReport:
    """Full per-frame record of one localization run."""

    rows: list[FrameRow]
    meta: dict[str, str] = field(default_factory=dict)

    @property
    def mean_error_m(self) -> float:
        """Arithmetic mean of per-frame Euclidean errors."""
        return sum(r.error_m for r in self.rows) / len(self.rows)

    @property
    def mean_evaluations(self) -> float:
        """Mean number of particle evaluations per iteration."""
        return sum(r.n_evaluated for r in self.rows) / len(self.rows)

    def summary_lines(self) -> list[str]:
        lines = [
            f"frames={len(self.rows)}",
            f"mean_error_m={self.mean_error_m!r}",
            f"mean_evaluations={self.mean_evaluations!r}",
        ]
        lines += [f"{k}={v}" for k, v in sorted(self.meta.items())]
        return lines


def euclidean_error(gt_x: float, gt_y: float, est_x: float, est_y: float) -> float:
    return math.hypot(est_x - gt_x, est_y - gt_y)


def _format(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(float(value))  # plain-float repr even for numpy scalars
    return str(value)


def write_report_csv(report: RunReport, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    out = []
    for key in sorted(report.meta):
        out.append(f"# {key}={report.meta[key]}\n")
    out.append(",".join(_COLUMNS) + "\n")
    for r in report.rows:
        out.append(",".join(_format(getattr(r, c)) for c in _COLUMNS) + "\n")
    path.write_text("".join(out), encoding="utf-8")


def read_report_csv(path: str | Path) -> RunReport:
    meta: dict[str, str] = {}
    rows: list[FrameRow] = []
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    body_started = False
    for line in lines:
        if not line:
            continue
        if line.startswith("#"):
            if body_started:
                raise ValueError(f"{path}: metadata after header")
            key, value = line[1:].strip().split("=", 1)
            meta[key] = value
            continue
        if not body_started:
            if tuple(line.split(",")) != _COLUMNS:
                raise ValueError(f"{path}: unexpected header {line!r}")
            body_started = True
            continue
        f = line.split(",")
        rows.append(FrameRow(
            frame=int(f[0]), t_sec=float(f[1]),
            gt_x=float(f[2]), gt_y=float(f[3]), gt_yaw=float(f[4]),
            est_x=float(f[5]), est_y=float(f[6]), est_yaw=float(f[7]),
            error_m=float(f[8]), n_evaluated=int(f[9]), k_bins=int(f[10]),
            degenerate=f[11] == "1",
        ))
    if not body_started:
        raise ValueError(f"{path}: no header row found")
    return RunReport(rows=rows, meta=meta)
