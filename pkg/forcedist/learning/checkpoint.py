"""Versioned binary checkpoints with a JSON sidecar, and inference."""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

from ..domain import SCHEMA_VERSION
from ..errors import InputError, SchemaError
from ..storage import read_json, write_bytes_atomic, write_json
from .mlp import MlpParameters, Mode, forward
from .training import Standardizer, TrainConfig

CHECKPOINT_MAGIC = b"MLP1"
CHECKPOINT_VERSION = 1
_HEADER = struct.Struct("<4sII")
_SIZE = struct.Struct("<I")
SIDECAR_SUFFIX = ".json"
_SIDECAR_FIELDS = ("schema_version", "kind", "checkpoint", "sizes", "m", "n", "train", "standardizer")


@dataclass(frozen=True, eq=False)
class TrainedModel:
    params: MlpParameters
    standardizer: Standardizer
    config: TrainConfig
    m: int
    n: int
    extra: dict[str, Any] | None = None

    def __post_init__(self) -> None:
        sizes = self.params.sizes
        if sizes[0] != 2 * self.m or sizes[-1] != 3 * self.n:
            raise SchemaError(
                f"network sizes {sizes} do not match {2 * self.m} features and {3 * self.n} labels"
            )


def encode_parameters(params: MlpParameters) -> bytes:
    """Magic, version, layer count, sizes, then each layer's weights and biases."""
    sizes = params.sizes
    chunks = [_HEADER.pack(CHECKPOINT_MAGIC, CHECKPOINT_VERSION, len(sizes))]
    chunks.extend(_SIZE.pack(size) for size in sizes)
    for array in params.arrays:
        chunks.append(np.ascontiguousarray(array, dtype="<f8").tobytes())
    return b"".join(chunks)


def decode_parameters(payload: bytes) -> MlpParameters:
    if len(payload) < _HEADER.size:
        raise SchemaError("checkpoint is truncated")
    magic, version, count = _HEADER.unpack_from(payload)
    if magic != CHECKPOINT_MAGIC or version != CHECKPOINT_VERSION:
        raise SchemaError(f"not a version {CHECKPOINT_VERSION} MLP checkpoint")
    offset = _HEADER.size
    sizes = []
    for _ in range(count):
        sizes.append(_SIZE.unpack_from(payload, offset)[0])
        offset += _SIZE.size
    arrays = []
    for fan_in, fan_out in zip(sizes, sizes[1:]):
        for shape in ((fan_in, fan_out), (fan_out,)):
            length = int(np.prod(shape))
            end = offset + 8 * length
            if end > len(payload):
                raise SchemaError("checkpoint is truncated")
            arrays.append(np.frombuffer(payload, dtype="<f8", count=length, offset=offset).reshape(shape))
            offset = end
    if offset != len(payload):
        raise SchemaError("checkpoint has trailing bytes")
    return MlpParameters.from_arrays(arrays)


def sidecar_path(path: Path) -> Path:
    path = Path(path)
    return path.with_name(path.name + SIDECAR_SUFFIX)


def save_model(model: TrainedModel, path: Path) -> tuple[Path, Path]:
    path = write_bytes_atomic(path, encode_parameters(model.params))
    sidecar = {
        "schema_version": SCHEMA_VERSION,
        "kind": "mlp-checkpoint",
        "checkpoint": path.name,
        "sizes": list(model.params.sizes),
        "m": model.m,
        "n": model.n,
        "train": model.config.to_data(),
        "standardizer": model.standardizer.to_data(),
        **(model.extra or {}),
    }
    return path, write_json(sidecar_path(path), sidecar)


def load_model(path: Path) -> TrainedModel:
    path = Path(path)
    if not path.is_file():
        raise InputError(f"checkpoint not found: {path}")
    side = sidecar_path(path)
    if not side.is_file():
        raise InputError(f"checkpoint sidecar not found: {side}")
    params = decode_parameters(path.read_bytes())
    data = read_json(side)
    if data.get("schema_version") != SCHEMA_VERSION:
        raise SchemaError(f"unsupported checkpoint schema version: {data.get('schema_version')}")
    try:
        return TrainedModel(
            params=params,
            standardizer=Standardizer.from_data(data["standardizer"]),
            config=TrainConfig.from_data(data["train"]),
            m=int(data["m"]),
            n=int(data["n"]),
            extra={key: value for key, value in data.items() if key not in _SIDECAR_FIELDS},
        )
    except KeyError as exc:
        raise SchemaError(f"checkpoint sidecar lacks field [{exc.args[0]}]") from exc


def predict(model: TrainedModel, features: np.ndarray) -> np.ndarray:
    """Eval-mode force distribution(s), 3n axis-interleaved components in Newtons."""
    x = np.asarray(features, dtype=float)
    if x.shape[-1] != 2 * model.m:
        raise InputError(f"model expects {2 * model.m} features, got {x.shape[-1]}")
    return forward(model.params, model.standardizer.apply(x), Mode.EVAL)
