"""Self-describing experiment reports and trajectory files.

A CSV report opens with ``# key=<json>`` lines (config echo, version,
duration) followed by the header row and the data rows. The JSON form holds
the same content as ``{"meta": {...}, "columns": [...], "rows": [...]}``.
Only the metadata varies between reruns of one config.
"""

import csv
import datetime
import io
import json
import logging
import math
import subprocess
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from walkops import __version__
from walkops.decomp import Decomposition
from walkops.env import OrientationEnvironment
from walkops.errors import ConfigError
from walkops.walk import Move, Trajectory

FORMATS = ("csv", "json")
TRAJECTORY_COLUMNS = ("step", "x", "y", "move")
DECOMPOSITION_COLUMNS = ("index", "psi", "xi_tilde")
ANALYZE_COLUMNS = ("input", "value", "abs_err_estimate")
ESTIMATE_COLUMNS = ("quantity", "n", "estimate", "stderr", "censored_fraction")
VERIFY_COLUMNS = ("check", "passed", "detail")


@dataclass(frozen=True)
class ExperimentConfig:
    subcommand: str
    lattice: str
    seed: int
    format: str = "csv"
    out: Optional[str] = None
    params: Dict[str, Any] = field(default_factory=dict)
    settings: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.format not in FORMATS:
            raise ConfigError(f"format must be one of {FORMATS}, got {self.format!r}")
        if not 0 <= self.seed < 1 << 64:
            raise ConfigError(f"seed must be an unsigned 64-bit int, got {self.seed}")

    def as_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, raw: Dict[str, Any]) -> "ExperimentConfig":
        try:
            return cls(**raw)
        except TypeError as e:
            raise ConfigError(f"not a walkops config echo: {e}") from e


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    columns: Tuple[str, ...]
    rows: List[Tuple[Any, ...]] = field(default_factory=list)
    extra: Dict[str, Any] = field(default_factory=dict)
    version: str = ""
    started: str = ""
    duration_s: float = 0.0

    def meta(self) -> Dict[str, Any]:
        return {
            "config": self.config.as_dict(),
            "version": self.version,
            "started": self.started,
            "duration_s": self.duration_s,
            **self.extra,
        }


def artifact_version() -> str:
    """``git describe`` of the checkout, or the package version outside git."""
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty", "--tags"],
            cwd=Path(__file__).resolve().parent,
            capture_output=True,
            text=True,
            timeout=5,
            check=True,
        )
        described = out.stdout.strip()
        if described:
            return described
    except (OSError, subprocess.SubprocessError) as e:
        logging.debug("git describe unavailable: %s", e)
    return f"walkops-{__version__}"


class Stopwatch:
    def __init__(self) -> None:
        self.started = datetime.datetime.now(datetime.timezone.utc).isoformat()
        self._t0 = time.time()

    def stamp(self, report: ExperimentReport) -> ExperimentReport:
        report.started = self.started
        report.duration_s = round(time.time() - self._t0, 6)
        report.version = artifact_version()
        return report


def _cell(value: Any) -> Any:
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating, float)):
        return float(value)
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    return value


def _json_cell(value: Any) -> Any:
    value = _cell(value)
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def render_csv(report: ExperimentReport) -> str:
    buf = io.StringIO()
    for key, value in report.meta().items():
        buf.write(f"# {key}={json.dumps(value, sort_keys=True, default=str)}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(report.columns)
    for row in report.rows:
        writer.writerow([_cell(v) for v in row])
    return buf.getvalue()


def render_json(report: ExperimentReport) -> str:
    payload = {
        "meta": report.meta(),
        "columns": list(report.columns),
        "rows": [[_json_cell(v) for v in row] for row in report.rows],
    }
    return json.dumps(payload, indent=2, sort_keys=True, default=str) + "\n"


def write_report(report: ExperimentReport, path: Optional[str]) -> str:
    text = render_json(report) if report.config.format == "json" else render_csv(report)
    if path:
        target = Path(path).expanduser()
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(text, encoding="utf-8")
    return text


def data_lines(text: str) -> List[str]:
    """The header and data rows of a CSV report, metadata stripped."""
    return [line for line in text.splitlines() if not line.startswith("#")]


def read_config_echo(path: str) -> ExperimentConfig:
    text = Path(path).expanduser().read_text(encoding="utf-8")
    if text.lstrip().startswith("{"):
        return ExperimentConfig.from_dict(json.loads(text)["meta"]["config"])
    for line in text.splitlines():
        if line.startswith("# config="):
            return ExperimentConfig.from_dict(json.loads(line[len("# config=") :]))
    raise ConfigError(f"no config echo in {path}")


# =========================
# Trajectories
# =========================


def trajectory_rows(trajectory: Trajectory) -> List[Tuple[Any, ...]]:
    start = trajectory.start
    rows: List[Tuple[Any, ...]] = [(0, start.x, start.y, "")]
    for k in range(len(trajectory)):
        rows.append(
            (
                k + 1,
                int(trajectory.xs[k + 1]),
                int(trajectory.ys[k + 1]),
                Move(int(trajectory.moves[k])).name.lower(),
            )
        )
    return rows


def _move_from_delta(dx: int, dy: int) -> Move:
    if dy == 1 and dx == 0:
        return Move.UP
    if dy == -1 and dx == 0:
        return Move.DOWN
    if dy == 0 and abs(dx) == 1:
        return Move.HORIZONTAL
    raise ConfigError(f"not a lattice step: dx={dx}, dy={dy}")


def read_trajectory_csv(path: str, env: OrientationEnvironment) -> Trajectory:
    """Rebuild a walk from a trajectory CSV (``move`` column or positions)."""
    lines = data_lines(Path(path).expanduser().read_text(encoding="utf-8"))
    reader = csv.DictReader(lines)
    if reader.fieldnames is None or not {"step", "x", "y"} <= set(reader.fieldnames):
        raise ConfigError(f"{path} lacks the step,x,y columns")
    moves: List[int] = []
    prev: Optional[Tuple[int, int]] = None
    for row in reader:
        pos = (int(row["x"]), int(row["y"]))
        tag = (row.get("move") or "").strip()
        if prev is not None:
            if tag:
                moves.append(int(Move[tag.upper()]))
            else:
                moves.append(int(_move_from_delta(pos[0] - prev[0], pos[1] - prev[1])))
        prev = pos
    trajectory = Trajectory.from_moves(moves, env)
    if prev is not None and (int(trajectory.xs[-1]), int(trajectory.ys[-1])) != prev:
        raise ConfigError(f"{path} does not match lattice {env.describe()}")
    return trajectory


def decomposition_rows(decomposition: Decomposition) -> List[Tuple[Any, ...]]:
    return [
        (k + 1, int(psi), int(xi))
        for k, (psi, xi) in enumerate(zip(decomposition.psi, decomposition.xi_tilde))
    ]


def rows_of(records: Sequence[Any]) -> List[Tuple[Any, ...]]:
    """Estimate rows (dataclasses with the estimate columns) as tuples."""
    return [tuple(getattr(r, c) for c in ESTIMATE_COLUMNS) for r in records]
