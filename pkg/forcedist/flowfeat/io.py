"""Flow dumps and feature CSV files."""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from ..errors import CsvFormatError, InputError
from ..storage import csv_float, csv_int, format_float, read_csv_rows, write_bytes_atomic, write_csv
from .dis import FlowField
from .pooling import FeatureVector

FLOW_MAGIC = b"FLOW"
FLOW_VERSION = 1
FLOW_HEADER = struct.Struct("<4sIII")
FEATURE_COLUMNS = ("region_index", "magnitude_px", "direction_rad")


def write_flow(flow: FlowField, path: Path) -> Path:
    """Header (magic, width, height, version) then interleaved float32 u, v."""
    header = FLOW_HEADER.pack(FLOW_MAGIC, flow.width, flow.height, FLOW_VERSION)
    body = np.stack([flow.u, flow.v], axis=-1).astype("<f4").tobytes()
    return write_bytes_atomic(path, header + body)


def read_flow(path: Path) -> FlowField:
    payload = Path(path).read_bytes()
    if len(payload) < FLOW_HEADER.size:
        raise InputError(f"flow file too short: {path}")
    magic, width, height, version = FLOW_HEADER.unpack_from(payload)
    if magic != FLOW_MAGIC or version != FLOW_VERSION:
        raise InputError(f"not a version {FLOW_VERSION} flow file: {path}")
    data = np.frombuffer(payload, dtype="<f4", offset=FLOW_HEADER.size)
    if data.size != 2 * width * height:
        raise InputError(f"flow file holds {data.size} values, expected {2 * width * height}")
    pairs = data.astype(float).reshape(height, width, 2)
    return FlowField(pairs[:, :, 0], pairs[:, :, 1])


def write_features_csv(features: FeatureVector, path: Path) -> Path:
    rows = (
        (str(index), format_float(magnitude), format_float(direction))
        for index, (magnitude, direction) in enumerate(
            zip(features.magnitudes.tolist(), features.directions.tolist())
        )
    )
    return write_csv(path, FEATURE_COLUMNS, rows)


def read_features_csv(path: Path) -> FeatureVector:
    values: list[float] = []
    for expected, (number, row) in enumerate(read_csv_rows(path, FEATURE_COLUMNS)):
        index = csv_int(path, number, row, "region_index")
        if index != expected:
            raise CsvFormatError(
                path, f"region index {index} out of order, expected {expected}", row=number
            )
        values.append(csv_float(path, number, row, "magnitude_px"))
        values.append(csv_float(path, number, row, "direction_rad"))
    if not values:
        raise CsvFormatError(path, "feature file has no regions")
    return FeatureVector(np.array(values))
