import hashlib
import json
import os
import re
from dataclasses import asdict, dataclass, field
from typing import Optional, Tuple

import numpy as np
import yaml
from dotenv import load_dotenv

DEFAULT_CONFIG_PATH = "defaults.yaml"
COMMANDS = ("verify", "analyze", "sweep", "optimize", "local-noise")
PARAM_SOURCES = ("published", "refined")
LOCAL_MODES = ("systematic", "random")

# Fields that change how a run executes but not what it computes
_UNHASHED_FIELDS = ("workers", "output_path")


class ConfigError(Exception):
    """Exception raised for invalid run configuration."""

    pass


_PLACEHOLDER = re.compile(r"\$\{([^}]+)\}")


def replace_env_vars(value):
    """Substitute ${CNOT_...} style placeholders in a config string; unset names stay as written."""
    if not isinstance(value, str):
        return value
    return _PLACEHOLDER.sub(lambda m: os.environ.get(m.group(1), m.group(0)), value)


def process_dict_env_vars(section: dict) -> dict:
    """Apply replace_env_vars in place to every string of a config section, nested lists included."""
    for key, value in section.items():
        if isinstance(value, dict):
            process_dict_env_vars(value)
        elif isinstance(value, list):
            section[key] = [replace_env_vars(v) for v in value]
        else:
            section[key] = replace_env_vars(value)
    return section


def load_config(path: Optional[str] = DEFAULT_CONFIG_PATH) -> dict:
    """
    Load YAML configuration from the given path and overlay with environment variables.
    Environment variables take precedence over YAML config. With path=None only the
    environment is read.
    """
    # Load environment variables from .env file
    load_dotenv()

    # Load base configuration from YAML (JSON files parse too)
    config = None
    if path is not None:
        with open(path, "r") as f:
            config = yaml.safe_load(f)

    if not config:
        config = {}
    if not isinstance(config, dict):
        raise ConfigError(f"Configuration in '{path}' must be a mapping")

    # Initialize sections if they don't exist
    config.setdefault("run", {})
    config.setdefault("scenario", {})
    config.setdefault("sweep", {})
    config.setdefault("local_noise", {})
    for section in ("run", "scenario", "sweep", "local_noise"):
        if config[section] is None:
            config[section] = {}

    process_dict_env_vars(config)

    # Override with environment variables
    if os.getenv("CNOT_SAMPLES"):
        config["run"]["samples"] = os.getenv("CNOT_SAMPLES")
    if os.getenv("CNOT_SEED"):
        config["run"]["seed"] = os.getenv("CNOT_SEED")
    if os.getenv("CNOT_WORKERS"):
        config["run"]["workers"] = os.getenv("CNOT_WORKERS")
    if os.getenv("CNOT_OUTPUT_DIR"):
        config["run"]["output_dir"] = os.getenv("CNOT_OUTPUT_DIR")
    if os.getenv("CNOT_PARAMS"):
        config["run"]["params"] = os.getenv("CNOT_PARAMS")

    return config


def parse_grid(value, name: str = "grid") -> Tuple[float, ...]:
    """
    Parse a grid given as a list, a comma-separated string or {start, stop, points}.

    A mapping expands to log-spaced points between start and stop inclusive.

    Raises:
        ConfigError: On malformed or non-positive values
    """
    if value is None:
        return ()
    try:
        if isinstance(value, dict):
            start, stop = float(value["start"]), float(value["stop"])
            points = int(value.get("points", 20))
            if start <= 0 or stop <= 0 or points < 1:
                raise ConfigError(f"{name}: start, stop and points must be positive")
            values = np.geomspace(start, stop, points)
        elif isinstance(value, str):
            values = [float(v) for v in value.split(",") if v.strip()]
        elif isinstance(value, (list, tuple)):
            values = [float(v) for v in value]
        else:
            values = [float(value)]
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigError(f"Invalid {name} {value!r}: {e}") from e
    grid = tuple(float(v) for v in values)
    if any(not v >= 0 for v in grid):
        raise ConfigError(f"{name} values must be non-negative, got {grid}")
    return grid


@dataclass(frozen=True)
class RunConfig:
    """Everything a run needs; reproducible from this record and its seed."""

    command: str
    sequence_ids: Tuple[str, ...] = ()
    scenario: dict = field(default_factory=dict)
    sigma_grid: Tuple[float, ...] = ()
    scale_grid: Tuple[float, ...] = ()
    modes: Tuple[str, ...] = ("systematic",)
    n_samples: int = 2000
    seed: int = 0
    output_path: Optional[str] = None
    workers: int = 1
    params: str = "refined"

    def to_dict(self) -> dict:
        data = asdict(self)
        for key in ("sequence_ids", "sigma_grid", "scale_grid", "modes"):
            data[key] = list(data[key])
        return data

    def config_hash(self) -> str:
        """SHA-256 of the canonical JSON form, ignoring workers and output path."""
        data = {k: v for k, v in self.to_dict().items() if k not in _UNHASHED_FIELDS}
        canonical = json.dumps(data, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _int(value, name: str, minimum: int) -> int:
    try:
        number = int(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{name} must be an integer, got {value!r}") from None
    if number < minimum:
        raise ConfigError(f"{name} must be at least {minimum}, got {number}")
    return number


def _as_list(value) -> list:
    if value is None:
        return []
    if isinstance(value, str):
        return [v.strip() for v in value.split(",") if v.strip()]
    return list(value)


def load_run_config(path: Optional[str] = None, overrides: Optional[dict] = None) -> RunConfig:
    """
    Merge a config file, the environment and CLI overrides into a validated RunConfig.

    Args:
        path: YAML/JSON config file; defaults.yaml is used when it exists and path is None
        overrides: CLI values keyed like RunConfig fields; None values are ignored

    Returns:
        RunConfig

    Raises:
        ConfigError: On any invalid value, including unknown sequence ids
    """
    from composite_cnot import catalog
    from composite_cnot.error_analysis import AnalysisError
    from composite_cnot.noise_sim import NoiseModelError, scenario_from_config
    from composite_cnot.su4_algebra import AlgebraError

    if path is None and os.path.exists(DEFAULT_CONFIG_PATH):
        path = DEFAULT_CONFIG_PATH
    try:
        config = load_config(path)
    except FileNotFoundError as e:
        raise ConfigError(f"Config file not found: {path}") from e
    except yaml.YAMLError as e:
        raise ConfigError(f"Cannot parse '{path}': {e}") from e

    run = config["run"]
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}

    command = overrides.get("command", run.get("command", "sweep"))
    if command not in COMMANDS:
        raise ConfigError(f"Unknown command '{command}', expected one of {COMMANDS}")

    sequence_ids = tuple(_as_list(overrides.get("sequence_ids", run.get("sequences"))))
    known = catalog.known_sequences()
    unknown = [s for s in sequence_ids if s not in known]
    if unknown:
        raise ConfigError(
            f"Unknown sequence(s) {', '.join(unknown)}. Known sequences: {', '.join(known)}"
        )

    scenario = dict(config["scenario"] or {})
    if "scenario_type" in overrides:
        scenario["type"] = overrides["scenario_type"]
    scenario.setdefault("type", "ising")
    try:
        scenario_from_config(scenario)
    except (NoiseModelError, AnalysisError, AlgebraError) as e:
        raise ConfigError(f"Invalid scenario {scenario}: {e}") from e

    local = config["local_noise"] or {}
    sigma_default = config["sweep"].get("sigma")
    if command == "local-noise":
        sigma_default = local.get("sigma", sigma_default)
    sigma_grid = parse_grid(overrides.get("sigma_grid", sigma_default), "sigma grid")
    scale_grid = parse_grid(overrides.get("scale_grid", local.get("scale")), "scale grid")
    if command in ("sweep", "local-noise") and not sigma_grid:
        raise ConfigError("Empty sigma grid")
    if command == "local-noise" and not scale_grid:
        raise ConfigError("Empty scale grid")

    modes = tuple(_as_list(overrides.get("modes", local.get("modes", ["systematic"]))))
    bad_modes = [m for m in modes if m not in LOCAL_MODES]
    if bad_modes:
        raise ConfigError(f"Unknown local noise mode(s) {bad_modes}, expected {LOCAL_MODES}")

    params = str(overrides.get("params", run.get("params", "refined")))
    if params not in PARAM_SOURCES:
        raise ConfigError(f"params must be one of {PARAM_SOURCES}, got '{params}'")

    output_path = overrides.get("output_path", run.get("output"))
    output_dir = run.get("output_dir")
    if output_path and output_path != "-" and output_dir and not os.path.isabs(output_path):
        output_path = os.path.join(output_dir, output_path)

    return RunConfig(
        command=command,
        sequence_ids=sequence_ids,
        scenario=scenario,
        sigma_grid=sigma_grid,
        scale_grid=scale_grid,
        modes=modes or ("systematic",),
        n_samples=_int(overrides.get("n_samples", run.get("samples", 2000)), "samples", 1),
        seed=_int(overrides.get("seed", run.get("seed", 0)), "seed", 0),
        output_path=output_path,
        workers=_int(overrides.get("workers", run.get("workers", 1)), "workers", 1),
        params=params,
    )
