"""Experiment configuration: one TOML file with ``[model]``, ``[layout]``,
``[sensor]``, ``[train]`` and ``[protocol]`` tables. Unknown keys are rejected
with the table path in the message."""

from __future__ import annotations

import sys
from dataclasses import dataclass, field, fields
from importlib import resources
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .geometry import ShoulderModel
from .mapping import TrainConfig
from .motion import MotionKind, TrajectorySpec
from .sensor import SensorEmulation
from .tendon import TendonLayout, layout_from_dict


class ConfigError(ValueError):
    pass


SECTIONS = ("model", "layout", "sensor", "train", "protocol")
_PROTOCOL_KEYS = {"reps", "frame_rate_hz", "sweep_duration_s", "blend_fraction", "cutoff_hz", "seed"}


@dataclass(frozen=True)
class ExperimentConfig:
    model: ShoulderModel
    layout: TendonLayout
    sensor: SensorEmulation = field(default_factory=SensorEmulation)
    train: TrainConfig = field(default_factory=TrainConfig)
    protocol_seed: int = 0
    protocol_overrides: dict = field(default_factory=dict)


def _check_keys(table: dict, allowed, where: str, source: str):
    unknown = sorted(set(table) - set(allowed))
    if unknown:
        raise ConfigError(f"{source}: [{where}] unknown key(s) {', '.join(unknown)}")


def _dataclass_from(cls, table: dict, where: str, source: str, rename=None):
    rename = rename or {}
    allowed = {rename.get(f.name, f.name) for f in fields(cls)}
    _check_keys(table, allowed, where, source)
    inverse = {v: k for k, v in rename.items()}
    kwargs = {inverse.get(k, k): v for k, v in table.items()}
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{source}: [{where}] {exc}") from exc


def parse_config(data: dict, source: str = "<config>") -> ExperimentConfig:
    _check_keys(data, SECTIONS, "top level", source)
    model = _dataclass_from(ShoulderModel, data.get("model", {}), "model", source, {"center": "center_mm"})
    if "layout" not in data:
        raise ConfigError(f"{source}: missing [layout] table")
    try:
        layout = layout_from_dict(data["layout"], model)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"{source}: [layout] {exc}") from exc
    sensor = _dataclass_from(SensorEmulation, data.get("sensor", {}), "sensor", source)
    train = _dataclass_from(TrainConfig, data.get("train", {}), "train", source)

    protocol = dict(data.get("protocol", {}))
    seed = protocol.pop("seed", 0)
    kinds = {k.value for k in MotionKind}
    _check_keys(protocol, kinds, "protocol", source)
    overrides = {}
    for kind, table in protocol.items():
        _check_keys(table, _PROTOCOL_KEYS, f"protocol.{kind}", source)
        try:
            TrajectorySpec(kind, **table)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{source}: [protocol.{kind}] {exc}") from exc
        overrides[kind] = dict(table)
    return ExperimentConfig(model, layout, sensor, train, int(seed), overrides)


def load_config_text(text: str, source: str = "<config>") -> ExperimentConfig:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{source}: {exc}") from exc
    return parse_config(data, source)


def load_config(path=None) -> ExperimentConfig:
    """Load a config file; ``None`` gives the bundled defaults."""
    if path is None:
        return load_config_text(default_config_text(), "default_config.toml")
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    return load_config_text(path.read_text(), str(path))


def default_config_text() -> str:
    return resources.files("tendonsense").joinpath("data/default_config.toml").read_text()
