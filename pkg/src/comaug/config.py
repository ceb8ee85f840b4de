"""One plain-text run configuration for every module.

INI-style file with fixed sections; unknown sections or keys are
rejected so typos never silently fall back to defaults.  All defaults
match the reference training recipe: momentum 0.001, shape -5, tipping
epoch 30 of 30, pacing 0.5, curve width 0.2, class thresholds 15/10/10.

    [run]       seed, epochs, workers
    [loss]      alpha, beta, height, tipping_epoch
    [sampling]  pacing, sigma, mode
    [composer]  vehicle_threshold, pedestrian_threshold, cyclist_threshold,
                max_attempts, random_yaw
    [harness]   class, objects_per_group, distance_count_skew,
                occupancy_count_skew, frame_size, points_per_voxel_near,
                background_points, noise
    [clustering] rules_file (optional path; empty means built-in defaults)
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field, fields as dc_fields


class ConfigError(Exception):
    """Malformed or contradictory run configuration."""


@dataclass
class RunConfig:
    seed: int = 0
    epochs: int = 30
    workers: int = 1
    alpha: float = 0.001
    beta: float = -5.0
    height: float = 1.0
    tipping_epoch: float = 30.0
    pacing: float = 0.5
    sigma: float = 0.2
    mode: str = "curriculum"
    vehicle_threshold: int = 15
    pedestrian_threshold: int = 10
    cyclist_threshold: int = 10
    max_attempts: int = 10
    random_yaw: bool = False
    class_name: str = "vehicle"
    objects_per_group: int = 1
    distance_count_skew: int = 2
    occupancy_count_skew: int = 3
    frame_size: int = 5
    points_per_voxel_near: int = 6
    background_points: int = 30
    noise: float = 0.05
    rules_file: str = ""


_SCHEMA = {
    "run": {"seed": int, "epochs": int, "workers": int},
    "loss": {"alpha": float, "beta": float, "height": float, "tipping_epoch": float},
    "sampling": {"pacing": float, "sigma": float, "mode": str},
    "composer": {
        "vehicle_threshold": int,
        "pedestrian_threshold": int,
        "cyclist_threshold": int,
        "max_attempts": int,
        "random_yaw": bool,
    },
    "harness": {
        "class": str,
        "objects_per_group": int,
        "distance_count_skew": int,
        "occupancy_count_skew": int,
        "frame_size": int,
        "points_per_voxel_near": int,
        "background_points": int,
        "noise": float,
    },
    "clustering": {"rules_file": str},
}

# config key -> RunConfig attribute where the two differ
_ALIASES = {"class": "class_name"}


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


def load_run_config(path) -> RunConfig:
    cp = configparser.ConfigParser()
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except configparser.Error as e:
        raise ConfigError(f"cannot parse {path}: {e}") from e
    cfg = RunConfig()
    for section in cp.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown config section [{section}]")
        for key, raw in cp[section].items():
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")
            kind = _SCHEMA[section][key]
            attr = _ALIASES.get(key, key)
            try:
                value = _parse_bool(raw) if kind is bool else kind(raw)
            except (ValueError, ConfigError) as e:
                raise ConfigError(f"bad value for [{section}] {key}: {raw!r}") from e
            setattr(cfg, attr, value)
    validate_run_config(cfg)
    return cfg


def dump_run_config(cfg: RunConfig) -> str:
    """Canonical text form; load(dump(cfg)) reproduces cfg exactly."""
    cp = configparser.ConfigParser()
    for section, keys in _SCHEMA.items():
        cp[section] = {}
        for key, kind in keys.items():
            value = getattr(cfg, _ALIASES.get(key, key))
            if kind is bool:
                text = "true" if value else "false"
            elif kind is float:
                text = repr(float(value))
            else:
                text = str(value)
            cp[section][key] = text
    out = io.StringIO()
    cp.write(out)
    return out.getvalue()


def validate_run_config(cfg: RunConfig) -> None:
    if cfg.epochs < 1:
        raise ConfigError(f"epochs must be >= 1: {cfg.epochs}")
    if cfg.workers < 1:
        raise ConfigError(f"workers must be >= 1: {cfg.workers}")
    if not 0.0 < cfg.alpha <= 1.0:
        raise ConfigError(f"alpha must be in (0, 1]: {cfg.alpha}")
    if not 0.0 <= cfg.tipping_epoch <= cfg.epochs:
        raise ConfigError(f"tipping_epoch outside [0, epochs]: {cfg.tipping_epoch}")
    if cfg.sigma <= 0 or cfg.pacing <= 0:
        raise ConfigError("pacing and sigma must be positive")
    if cfg.mode not in ("curriculum", "anti_curriculum", "uniform"):
        raise ConfigError(f"unknown mode: {cfg.mode}")
    if cfg.class_name not in ("vehicle", "pedestrian", "cyclist"):
        raise ConfigError(f"unknown class: {cfg.class_name}")
    if cfg.noise < 0:
        raise ConfigError(f"noise must be >= 0: {cfg.noise}")
    for f in dc_fields(RunConfig):
        if f.name.endswith("_threshold") and getattr(cfg, f.name) < 0:
            raise ConfigError(f"{f.name} must be >= 0")


def override_from_args(cfg: RunConfig, args, names) -> RunConfig:
    """Apply non-None CLI argument values over file/config defaults."""
    for cli_name, attr in names.items():
        value = getattr(args, cli_name, None)
        if value is not None:
            setattr(cfg, attr, value)
    validate_run_config(cfg)
    return cfg
