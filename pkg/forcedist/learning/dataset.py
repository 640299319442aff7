"""Feature/label records: JSON manifest plus one CSV of packed records."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from ..domain import SCHEMA_VERSION, require_int, require_text
from ..errors import CsvFormatError, InputError, SchemaError
from ..labeling.mesh import BinGrid
from ..storage import csv_float, format_float, read_csv_rows, read_json, write_csv, write_json

DATASET_KIND = "force-distribution-dataset"


@dataclass(frozen=True, eq=False)
class DatasetRecord:
    indentation_id: str
    features: np.ndarray
    label: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "indentation_id", require_text(self.indentation_id, "indentation id"))
        for name in ("features", "label"):
            values = np.array(getattr(self, name), dtype=float).ravel()
            if not np.all(np.isfinite(values)):
                raise InputError(f"record [{self.indentation_id}] has non-finite {name}")
            values.setflags(write=False)
            object.__setattr__(self, name, values)


@dataclass(frozen=True, eq=False)
class Dataset:
    """Records with 2m features and 3n axis-interleaved label components."""

    m: int
    n: int
    records: tuple[DatasetRecord, ...]
    grid: BinGrid | None = None
    regions: tuple[int, int] | None = None

    def __post_init__(self) -> None:
        require_int(self.m, "region count", minimum=1)
        require_int(self.n, "bin count", minimum=1)
        records = tuple(self.records)
        for record in records:
            if record.features.size != 2 * self.m or record.label.size != 3 * self.n:
                raise SchemaError(
                    f"record [{record.indentation_id}] has {record.features.size} features and "
                    f"{record.label.size} labels, expected {2 * self.m} and {3 * self.n}"
                )
        if len({record.indentation_id for record in records}) != len(records):
            raise SchemaError("dataset indentation ids must be unique")
        if self.grid is not None and self.grid.n != self.n:
            raise SchemaError(f"dataset bin count {self.n} disagrees with its grid ({self.grid.n})")
        if self.regions is not None:
            regions = (int(self.regions[0]), int(self.regions[1]))
            if regions[0] * regions[1] != self.m:
                raise SchemaError(f"dataset region count {self.m} disagrees with {regions}")
            object.__setattr__(self, "regions", regions)
        object.__setattr__(self, "records", records)

    def __len__(self) -> int:
        return len(self.records)

    @property
    def ids(self) -> list[str]:
        return [record.indentation_id for record in self.records]

    @property
    def features(self) -> np.ndarray:
        if not self.records:
            return np.zeros((0, 2 * self.m))
        return np.vstack([record.features for record in self.records])

    @property
    def labels(self) -> np.ndarray:
        if not self.records:
            return np.zeros((0, 3 * self.n))
        return np.vstack([record.label for record in self.records])

    def subset(self, indices: Iterable[int]) -> "Dataset":
        return Dataset(
            m=self.m,
            n=self.n,
            records=tuple(self.records[i] for i in indices),
            grid=self.grid,
            regions=self.regions,
        )

    def manifest(self, records_name: str) -> dict[str, Any]:
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": DATASET_KIND,
            "m": self.m,
            "n": self.n,
            "regions": list(self.regions) if self.regions else None,
            "grid": self.grid.to_data() if self.grid else None,
            "record_count": len(self.records),
            "records": records_name,
        }


def record_columns(m: int, n: int) -> tuple[str, ...]:
    return (
        "indentation_id",
        *(f"feat_{k}" for k in range(2 * m)),
        *(f"label_{k}" for k in range(3 * n)),
    )


def write_dataset(dataset: Dataset, manifest_path: Path, records_name: str = "records.csv") -> Path:
    manifest_path = Path(manifest_path)
    rows = (
        (
            record.indentation_id,
            *(format_float(v) for v in record.features.tolist()),
            *(format_float(v) for v in record.label.tolist()),
        )
        for record in dataset.records
    )
    write_csv(manifest_path.parent / records_name, record_columns(dataset.m, dataset.n), rows)
    return write_json(manifest_path, dataset.manifest(records_name))


def read_dataset(manifest_path: Path) -> Dataset:
    manifest_path = Path(manifest_path)
    manifest = read_json(manifest_path)
    if manifest.get("kind") != DATASET_KIND:
        raise SchemaError(f"not a dataset manifest: {manifest_path}")
    if manifest.get("schema_version") != SCHEMA_VERSION:
        raise SchemaError(f"unsupported dataset schema version: {manifest.get('schema_version')}")
    try:
        m, n = int(manifest["m"]), int(manifest["n"])
        records_name = str(manifest["records"])
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"dataset manifest lacks m, n or records: {manifest_path}") from exc
    grid = BinGrid.from_data(manifest["grid"]) if manifest.get("grid") else None
    regions = tuple(manifest["regions"]) if manifest.get("regions") else None

    csv_path = manifest_path.parent / records_name
    feature_columns = [f"feat_{k}" for k in range(2 * m)]
    label_columns = [f"label_{k}" for k in range(3 * n)]
    records = []
    for number, row in read_csv_rows(csv_path, record_columns(m, n)):
        records.append(
            DatasetRecord(
                indentation_id=row["indentation_id"],
                features=np.array([csv_float(csv_path, number, row, c) for c in feature_columns]),
                label=np.array([csv_float(csv_path, number, row, c) for c in label_columns]),
            )
        )
    expected = manifest.get("record_count")
    if expected is not None and expected != len(records):
        raise CsvFormatError(csv_path, f"manifest promises {expected} records, found {len(records)}")
    return Dataset(m=m, n=n, records=tuple(records), grid=grid, regions=regions)


def dataset_from_arrays(
    ids: Sequence[str],
    features: np.ndarray,
    labels: np.ndarray,
    *,
    grid: BinGrid | None = None,
    regions: tuple[int, int] | None = None,
) -> Dataset:
    features = np.atleast_2d(np.asarray(features, dtype=float))
    labels = np.atleast_2d(np.asarray(labels, dtype=float))
    if features.shape[1] % 2 or labels.shape[1] % 3:
        raise SchemaError("feature width must be even and label width a multiple of 3")
    records = tuple(DatasetRecord(i, f, y) for i, f, y in zip(ids, features, labels))
    return Dataset(features.shape[1] // 2, labels.shape[1] // 3, records, grid, regions)
