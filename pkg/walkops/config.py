"""Run settings and their resolution from flags, environment and config file.

CONFIG (JSON) structure example:
{
  "walkops": {
    "threads": 4,
    "block_size": 256,
    "step_cap": 10000000,
    "record_cap": 100000000,
    "resample_env": false,
    "log_level": "INFO",
    "p": 0.6666666666666666,
    "rel_tol": 1e-8
  }
}

Each setting resolves as: command-line flag, then ``WALKOPS_<NAME>`` in the
process environment (``.env`` files are loaded first), then the config file,
then the default below.
"""

import json
import os
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Any, Dict, Mapping, Optional

from walkops.errors import ConfigError

CONFIG_SECTION = "walkops"

DEFAULTS: Dict[str, Any] = {
    "threads": 1,
    "block_size": 256,
    "step_cap": 10**7,
    "record_cap": 10**8,
    "resample_env": False,
    "log_level": "WARNING",
    "p": 2.0 / 3.0,
    "rel_tol": 1e-8,
}


def _is_truthy(value: Optional[str]) -> bool:
    return str(value or "").strip().lower() in {"1", "true", "yes", "on"}


@dataclass(frozen=True)
class RunSettings:
    threads: int = 1
    block_size: int = 256
    step_cap: int = 10**7
    record_cap: int = 10**8
    resample_env: bool = False

    def __post_init__(self) -> None:
        if self.threads < 1:
            raise ConfigError(f"threads must be >= 1, got {self.threads}")
        if self.block_size < 1:
            raise ConfigError(f"block_size must be >= 1, got {self.block_size}")
        if self.step_cap < 1 or self.record_cap < 1:
            raise ConfigError("step and record caps must be >= 1")

    def as_dict(self) -> Dict[str, Any]:
        return asdict(self)


def load_config_file(path: Optional[str]) -> Dict[str, Any]:
    if not path:
        return {}
    cfg_path = Path(path).expanduser()
    if not cfg_path.exists():
        raise ConfigError(f"config file not found: {cfg_path}")
    try:
        raw = json.loads(cfg_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ConfigError(f"failed to parse config JSON: {e}") from e
    section = raw.get(CONFIG_SECTION) if isinstance(raw, dict) else None
    if not isinstance(section, dict):
        raise ConfigError(f"config needs a '{CONFIG_SECTION}' object")
    unknown = sorted(set(section) - set(DEFAULTS))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    return section


def resolve(
    name: str,
    flag: Any,
    file_values: Mapping[str, Any],
    environ: Optional[Mapping[str, str]] = None,
) -> Any:
    """One setting: flag, then WALKOPS_<NAME>, then config file, then default."""
    if flag is not None:
        return flag
    env = os.environ if environ is None else environ
    default = DEFAULTS[name]
    raw = env.get(f"WALKOPS_{name.upper()}")
    if raw is not None and raw.strip():
        try:
            if isinstance(default, bool):
                return _is_truthy(raw)
            return type(default)(raw)
        except ValueError as e:
            raise ConfigError(f"WALKOPS_{name.upper()}={raw!r}: {e}") from e
    if name in file_values:
        return file_values[name]
    return default


def resolve_settings(
    flags: Mapping[str, Any],
    file_values: Mapping[str, Any],
    environ: Optional[Mapping[str, str]] = None,
) -> RunSettings:
    values = {
        f.name: resolve(f.name, flags.get(f.name), file_values, environ)
        for f in fields(RunSettings)
    }
    return RunSettings(**values)
