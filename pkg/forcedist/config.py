from __future__ import annotations

import json
import tomllib
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Iterable

from platformdirs import user_config_dir

from .domain import AxisTriple
from .errors import ConfigurationError
from .fitting import FitConfig
from .flowfeat.dis import FlowConfig
from .labeling.mesh import BinGrid, Rect
from .learning.training import TrainConfig
from .log import logger
from .seeds import stage_seed
from .storage import config_hash

APP_NAME = "forcedist"
SUPPORTED_TOP_LEVEL = ("seed", "paths", "material", "grid", "flow", "train", "fit", "synth")


@dataclass(frozen=True)
class PathsSettings:
    data_dir: str = "."
    out_dir: str = "out"


@dataclass(frozen=True)
class MaterialSettings:
    reference: str = "ecoflex_gel"
    phi: float = 0.0196


@dataclass(frozen=True)
class GridSettings:
    rows: int = 4
    cols: int = 4
    extent_mm: float = 32.0

    def grid(self) -> BinGrid:
        return BinGrid(Rect.square(self.extent_mm), self.rows, self.cols)


@dataclass(frozen=True)
class FlowSettings:
    region_rows: int = 8
    region_cols: int = 8
    levels: int = 4
    patch: int = 8
    stride: int = 4
    iterations: int = 12
    min_update_px: float = 0.01
    variance_floor: float = 1e-4

    def flow_config(self) -> FlowConfig:
        return FlowConfig(
            levels=self.levels,
            patch=self.patch,
            stride=self.stride,
            iterations=self.iterations,
            min_update_px=self.min_update_px,
            variance_floor=self.variance_floor,
        )


@dataclass(frozen=True)
class TrainSettings:
    hidden: tuple[int, ...] = (128, 96, 64)
    learning_rate: float = 1e-3
    batch_size: int = 50
    dropout: float = 0.1
    epochs: int = 200
    test_fraction: float = 0.2
    standardize: bool = True
    log_every: int = 10


@dataclass(frozen=True)
class FitSettings:
    order: int = 2
    starts: int = 32
    max_iters: int = 2000
    tol: float = 1e-10
    polish_rounds: int = 5


@dataclass(frozen=True)
class SynthSettings:
    mesh_spacing_mm: float = 0.5
    spacing_mm: float = 1.5
    margin_mm: float = 4.0
    depths_mm: tuple[float, ...] = (0.5, 1.0, 1.5, 2.0)
    indenter_radius_mm: float = 5.0
    stiffness: float = 1.7 / 2.0**1.5
    friction: float = 0.45
    frame_px: int = 128
    particles: int = 900
    particle_radius_px: float = 2.0
    gain_px_per_mm: float = 2.0
    ft_resolution_n: tuple[float, float, float] = (0.03, 0.03, 0.06)

    @property
    def ft_resolution(self) -> AxisTriple:
        return AxisTriple.of(self.ft_resolution_n)


@dataclass(frozen=True)
class PipelineConfig:
    seed: int = 0
    paths: PathsSettings = field(default_factory=PathsSettings)
    material: MaterialSettings = field(default_factory=MaterialSettings)
    grid: GridSettings = field(default_factory=GridSettings)
    flow: FlowSettings = field(default_factory=FlowSettings)
    train: TrainSettings = field(default_factory=TrainSettings)
    fit: FitSettings = field(default_factory=FitSettings)
    synth: SynthSettings = field(default_factory=SynthSettings)

    @classmethod
    def published(cls, seed: int = 0) -> "PipelineConfig":
        """20x20 bins of 1.6 mm, 40x40 regions on 400 px frames, the published network."""
        return cls(
            seed=seed,
            grid=GridSettings(rows=20, cols=20, extent_mm=32.0),
            flow=FlowSettings(region_rows=40, region_cols=40),
            train=TrainSettings(
                hidden=(800, 600, 400),
                learning_rate=1e-4,
                batch_size=400,
                dropout=0.1,
                standardize=False,
            ),
            synth=SynthSettings(spacing_mm=0.55, frame_px=400, particles=9000),
        )

    def bin_grid(self) -> BinGrid:
        return self.grid.grid()

    def fit_config(self, threads: int = 1) -> FitConfig:
        return FitConfig(
            starts=self.fit.starts,
            seed=stage_seed(self.seed, "fit"),
            max_iters=self.fit.max_iters,
            tol=self.fit.tol,
            threads=threads,
            polish_rounds=self.fit.polish_rounds,
        )

    def train_config(self) -> TrainConfig:
        train = self.train
        return TrainConfig(
            hidden=train.hidden,
            learning_rate=train.learning_rate,
            batch_size=train.batch_size,
            dropout=train.dropout,
            epochs=train.epochs,
            seed=self.seed,
            test_fraction=train.test_fraction,
            standardize=train.standardize,
            log_every=train.log_every,
        )

    def to_data(self) -> dict[str, Any]:
        data: dict[str, Any] = {"seed": self.seed}
        for section in SUPPORTED_TOP_LEVEL[1:]:
            values = getattr(self, section)
            data[section] = {
                item.name: _plain(getattr(values, item.name)) for item in fields(values)
            }
        return data

    def hash(self) -> str:
        return config_hash(self.to_data())


SECTION_TYPES: dict[str, type] = {
    "paths": PathsSettings,
    "material": MaterialSettings,
    "grid": GridSettings,
    "flow": FlowSettings,
    "train": TrainSettings,
    "fit": FitSettings,
    "synth": SynthSettings,
}

DEFAULT_CONFIG_TOML = """seed = 0

[paths]
data_dir = "."
out_dir = "out"

[material]
reference = "ecoflex_gel"
phi = 0.0196

[grid]
rows = 4
cols = 4
extent_mm = 32.0

[flow]
region_rows = 8
region_cols = 8
levels = 4
patch = 8
stride = 4

[train]
hidden = [128, 96, 64]
learning_rate = 1e-3
batch_size = 50
dropout = 0.1
epochs = 200
standardize = true

[fit]
order = 2
starts = 32

[synth]
spacing_mm = 1.5
depths_mm = [0.5, 1.0, 1.5, 2.0]
frame_px = 128
"""


def get_config_dir() -> Path:
    path = Path(user_config_dir(APP_NAME))
    path.mkdir(parents=True, exist_ok=True)
    return path


def get_config_path() -> Path:
    return get_config_dir() / "config.toml"


def create_default_config(path: Path | None = None) -> None:
    config_path = path or get_config_path()
    config_path.parent.mkdir(parents=True, exist_ok=True)
    config_path.write_text(DEFAULT_CONFIG_TOML, encoding="utf-8")
    logger.info(f"created default config file at {config_path}")


def load_config(path: Path | None = None, overrides: Iterable[str] = ()) -> PipelineConfig:
    config_path = path or get_config_path()
    if not config_path.exists():
        if path is not None:
            raise ConfigurationError(f"config file not found: {config_path}")
        create_default_config(config_path)
        data: dict[str, Any] = {}
    else:
        try:
            data = tomllib.loads(config_path.read_text(encoding="utf-8"))
        except tomllib.TOMLDecodeError as exc:
            raise ConfigurationError(f"invalid TOML in {config_path}: {exc}") from exc
    for text in overrides:
        data = deep_merge(data, parse_override(text))
    return config_from_data(data)


def config_from_data(data: dict[str, Any]) -> PipelineConfig:
    if not isinstance(data, dict):
        raise ConfigurationError("config must be a table")
    unknown = sorted(set(data) - set(SUPPORTED_TOP_LEVEL))
    if unknown:
        expected = ", ".join(f"[{name}]" for name in SUPPORTED_TOP_LEVEL)
        actual = ", ".join(f"[{name}]" for name in unknown)
        raise ConfigurationError(f"unknown config table {actual}; supported tables: {expected}")
    seed = data.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        raise ConfigurationError("config field [seed] must be a non-negative integer")
    sections = {name: _read_section(name, kind, data.get(name)) for name, kind in SECTION_TYPES.items()}
    config = PipelineConfig(seed=seed, **sections)
    _validate(config)
    return config


def parse_override(text: str) -> dict[str, Any]:
    try:
        value = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"override is not valid JSON: {text}") from exc
    if not isinstance(value, dict):
        raise ConfigurationError(f"override must be a JSON object: {text}")
    return value


def deep_merge(base: dict[str, Any], update: dict[str, Any]) -> dict[str, Any]:
    merged = dict(base)
    for key, value in update.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def with_seed(config: PipelineConfig, seed: int | None) -> PipelineConfig:
    if seed is None:
        return config
    if seed < 0:
        raise ConfigurationError("seed must be a non-negative integer")
    return replace(config, seed=seed)


def _read_section(name: str, kind: type, data: Any) -> Any:
    if data is None:
        return kind()
    if not isinstance(data, dict):
        raise ConfigurationError(f"config field [{name}] must be a table")
    known = {item.name: item for item in fields(kind)}
    unknown = sorted(set(data) - set(known))
    if unknown:
        raise ConfigurationError(
            f"config field [{name}] has unknown key(s): {', '.join(unknown)}; "
            f"supported keys: {', '.join(known)}"
        )
    defaults = kind()
    values = {}
    for key, value in data.items():
        values[key] = _coerce(f"{name}.{key}", getattr(defaults, key), value)
    return kind(**values)


def _coerce(label: str, default: Any, value: Any) -> Any:
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigurationError(f"config field [{label}] must be true or false")
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigurationError(f"config field [{label}] must be an integer")
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigurationError(f"config field [{label}] must be a number")
        return float(value)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigurationError(f"config field [{label}] must be a string")
        return value
    if isinstance(default, tuple):
        if not isinstance(value, list) or len(value) == 0:
            raise ConfigurationError(f"config field [{label}] must be a non-empty list")
        return tuple(_coerce(label, default[0], item) for item in value)
    return value


def _validate(config: PipelineConfig) -> None:
    if config.fit.order not in (1, 2, 3):
        raise ConfigurationError(f"config field [fit.order] must be 1, 2 or 3, got {config.fit.order}")
    if len(config.synth.ft_resolution_n) != 3:
        raise ConfigurationError("config field [synth.ft_resolution_n] needs three values")
    if not Path(config.paths.data_dir).is_dir():
        raise ConfigurationError(
            f"config field [paths.data_dir] is not a directory: {config.paths.data_dir}"
        )
    config.bin_grid()
    config.flow.flow_config()
    config.train_config()
    config.fit_config()


def _plain(value: Any) -> Any:
    return list(value) if isinstance(value, tuple) else value
