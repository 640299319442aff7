"""CSV and manifest IO for meshes, nodal forces, sensor readings and labels."""

from __future__ import annotations

from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from ..domain import SCHEMA_VERSION, AxisTriple
from ..errors import CsvFormatError, ForcedistError, SchemaError
from ..storage import (
    csv_float,
    csv_int,
    format_float,
    read_csv_rows,
    read_json,
    write_csv,
    write_json,
)
from .agreement import FtReading
from .binning import ForceDistributionLabel, IndentationMeta, NodalForceField
from .mesh import BinGrid, Rect, SurfaceMesh

MESH_COLUMNS = ("node_id", "x_mm", "y_mm")
FORCE_COLUMNS = ("indentation_id", "node_id", "fx_n", "fy_n", "fz_n")
METADATA_COLUMNS = ("indentation_id", "center_x_mm", "center_y_mm", "depth_mm")
FT_COLUMNS = ("indentation_id", "fx_n", "fy_n", "fz_n")
LABEL_COLUMNS = ("indentation_id", "bin_index", "fx_n", "fy_n", "fz_n")
LABEL_KIND = "force-distribution-labels"


def read_mesh_csv(path: Path, extent: Rect) -> SurfaceMesh:
    rows = read_csv_rows(path, MESH_COLUMNS)
    node_ids = tuple(row["node_id"] for _, row in rows)
    xy = [
        (csv_float(path, number, row, "x_mm"), csv_float(path, number, row, "y_mm"))
        for number, row in rows
    ]
    try:
        return SurfaceMesh(node_ids=node_ids, xy=np.array(xy, dtype=float), extent=extent)
    except ForcedistError as exc:
        raise CsvFormatError(path, str(exc)) from exc


def write_mesh_csv(mesh: SurfaceMesh, path: Path) -> Path:
    rows = (
        (node_id, format_float(x), format_float(y))
        for node_id, (x, y) in zip(mesh.node_ids, mesh.xy.tolist())
    )
    return write_csv(path, MESH_COLUMNS, rows)


def read_metadata_csv(path: Path) -> dict[str, IndentationMeta]:
    metadata: dict[str, IndentationMeta] = {}
    for number, row in read_csv_rows(path, METADATA_COLUMNS):
        key = row["indentation_id"]
        if key in metadata:
            raise CsvFormatError(path, f"duplicate indentation id [{key}]", row=number)
        metadata[key] = IndentationMeta(
            indentation_id=key,
            center_x_mm=csv_float(path, number, row, "center_x_mm"),
            center_y_mm=csv_float(path, number, row, "center_y_mm"),
            depth_mm=csv_float(path, number, row, "depth_mm"),
        )
    return metadata


def write_metadata_csv(metadata: Iterable[IndentationMeta], path: Path) -> Path:
    rows = (
        (
            meta.indentation_id,
            format_float(meta.center_x_mm),
            format_float(meta.center_y_mm),
            format_float(meta.depth_mm),
        )
        for meta in metadata
    )
    return write_csv(path, METADATA_COLUMNS, rows)


def read_forces_csv(
    path: Path, metadata: dict[str, IndentationMeta] | None = None
) -> list[NodalForceField]:
    """Read long-format nodal forces, one field per indentation id, sorted by id."""
    grouped: dict[str, tuple[list[str], list[tuple[float, float, float]]]] = {}
    for number, row in read_csv_rows(path, FORCE_COLUMNS):
        node_ids, forces = grouped.setdefault(row["indentation_id"], ([], []))
        node_ids.append(row["node_id"])
        forces.append(
            (
                csv_float(path, number, row, "fx_n"),
                csv_float(path, number, row, "fy_n"),
                csv_float(path, number, row, "fz_n"),
            )
        )
    fields = []
    for key in sorted(grouped):
        node_ids, forces = grouped[key]
        meta = metadata.get(key) if metadata is not None else None
        try:
            fields.append(NodalForceField(key, tuple(node_ids), np.array(forces), meta))
        except SchemaError as exc:
            raise CsvFormatError(path, str(exc)) from exc
    return fields


def write_forces_csv(fields: Iterable[NodalForceField], path: Path) -> Path:
    def rows() -> Iterable[tuple[str, ...]]:
        for field in fields:
            for node_id, force in zip(field.node_ids, field.forces.tolist()):
                if any(force):
                    yield (field.indentation_id, node_id, *(format_float(f) for f in force))

    return write_csv(path, FORCE_COLUMNS, rows())


def read_ft_csv(path: Path, resolution: AxisTriple) -> list[FtReading]:
    readings = []
    for number, row in read_csv_rows(path, FT_COLUMNS):
        total = AxisTriple(
            csv_float(path, number, row, "fx_n"),
            csv_float(path, number, row, "fy_n"),
            csv_float(path, number, row, "fz_n"),
        )
        readings.append(FtReading(row["indentation_id"], total, resolution))
    return readings


def write_ft_csv(readings: Iterable[FtReading], path: Path) -> Path:
    rows = (
        (reading.indentation_id, *(format_float(v) for v in reading.total.as_tuple()))
        for reading in readings
    )
    return write_csv(path, FT_COLUMNS, rows)


def write_labels(
    labels: Sequence[ForceDistributionLabel], grid: BinGrid, csv_path: Path, manifest_path: Path
) -> tuple[Path, Path]:
    """Write non-zero bins to CSV and the grid geometry to a JSON manifest."""

    def rows() -> Iterable[tuple[str, ...]]:
        for label in labels:
            for index, force in enumerate(label.values.tolist()):
                if any(force):
                    yield (label.indentation_id, str(index), *(format_float(f) for f in force))

    write_csv(csv_path, LABEL_COLUMNS, rows())
    write_json(
        manifest_path,
        {
            "schema_version": SCHEMA_VERSION,
            "kind": LABEL_KIND,
            "grid": grid.to_data(),
            "indentation_ids": [label.indentation_id for label in labels],
            "records": Path(csv_path).name,
        },
    )
    return Path(csv_path), Path(manifest_path)


def read_labels(manifest_path: Path) -> tuple[BinGrid, list[ForceDistributionLabel]]:
    manifest = read_json(manifest_path)
    if manifest.get("kind") != LABEL_KIND:
        raise SchemaError(f"not a label manifest: {manifest_path}")
    if manifest.get("schema_version") != SCHEMA_VERSION:
        raise SchemaError(f"unsupported label schema version: {manifest.get('schema_version')}")
    if not isinstance(manifest.get("grid"), dict):
        raise SchemaError(f"label manifest lacks grid geometry: {manifest_path}")
    grid = BinGrid.from_data(manifest["grid"])
    ids = [str(key) for key in manifest.get("indentation_ids", [])]
    values = {key: np.zeros((grid.n, 3)) for key in ids}
    csv_path = Path(manifest_path).parent / str(manifest.get("records", ""))
    for number, row in read_csv_rows(csv_path, LABEL_COLUMNS):
        key = row["indentation_id"]
        if key not in values:
            raise CsvFormatError(csv_path, f"indentation id [{key}] not in manifest", row=number)
        index = csv_int(csv_path, number, row, "bin_index")
        if not 0 <= index < grid.n:
            raise CsvFormatError(csv_path, f"bin index {index} outside 0..{grid.n - 1}", row=number)
        values[key][index] = [
            csv_float(csv_path, number, row, column) for column in ("fx_n", "fy_n", "fz_n")
        ]
    return grid, [ForceDistributionLabel(key, grid, values[key]) for key in ids]
