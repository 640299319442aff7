from __future__ import annotations

import json

import numpy as np
import pytest

from forcedist.domain import AxisTriple
from forcedist.errors import CsvFormatError, SchemaError
from forcedist.labeling import (
    BinGrid,
    ForceDistributionLabel,
    FtReading,
    IndentationMeta,
    NodalForceField,
    Rect,
    regular_mesh,
)
from forcedist.labeling.io import (
    read_forces_csv,
    read_ft_csv,
    read_labels,
    read_mesh_csv,
    read_metadata_csv,
    write_forces_csv,
    write_ft_csv,
    write_labels,
    write_mesh_csv,
    write_metadata_csv,
)

EXTENT = Rect.square(32.0)
RESOLUTION = AxisTriple(0.03, 0.03, 0.06)


def test_mesh_csv_round_trip(tmp_path) -> None:
    mesh = regular_mesh(EXTENT, 8.0)

    loaded = read_mesh_csv(write_mesh_csv(mesh, tmp_path / "mesh.csv"), EXTENT)

    assert loaded.node_ids == mesh.node_ids
    assert np.array_equal(loaded.xy, mesh.xy)


def test_mesh_csv_reports_nodes_outside_the_extent(tmp_path) -> None:
    path = tmp_path / "mesh.csv"
    path.write_text("node_id,x_mm,y_mm\nn0,1.0,1.0\nn1,40.0,1.0\n")

    with pytest.raises(CsvFormatError):
        read_mesh_csv(path, EXTENT)


def test_metadata_csv_round_trip_and_duplicates(tmp_path) -> None:
    metadata = [IndentationMeta("a", 16.0, 12.5, 1.0), IndentationMeta("b", 4.0, 8.0, 0.5)]

    path = write_metadata_csv(metadata, tmp_path / "metadata.csv")
    loaded = read_metadata_csv(path)

    assert list(loaded) == ["a", "b"]
    assert loaded["a"] == metadata[0]

    path.write_text(path.read_text() + "a,1,1,1\n")
    with pytest.raises(CsvFormatError) as excinfo:
        read_metadata_csv(path)
    assert excinfo.value.row == 4


def test_forces_csv_groups_by_indentation(tmp_path) -> None:
    path = tmp_path / "forces.csv"
    path.write_text(
        "indentation_id,node_id,fx_n,fy_n,fz_n\n"
        "b,n1,0.1,0,-0.5\n"
        "a,n0,0,0,-1\n"
        "b,n2,-0.1,0,-0.5\n"
    )
    meta = {"b": IndentationMeta("b", 16.0, 16.0, 1.0)}

    fields = read_forces_csv(path, meta)

    assert [field.indentation_id for field in fields] == ["a", "b"]
    assert fields[1].node_ids == ("n1", "n2")
    assert fields[1].meta == meta["b"]
    assert fields[0].meta is None
    np.testing.assert_allclose(fields[1].forces.sum(axis=0), [0.0, 0.0, -1.0])


def test_forces_csv_rejects_duplicate_nodes(tmp_path) -> None:
    path = tmp_path / "forces.csv"
    path.write_text("indentation_id,node_id,fx_n,fy_n,fz_n\na,n0,0,0,-1\na,n0,0,0,-1\n")

    with pytest.raises(CsvFormatError):
        read_forces_csv(path)


def test_forces_csv_skips_unloaded_nodes(tmp_path) -> None:
    field = NodalForceField.from_mapping("a", {"n0": (0.0, 0.0, 0.0), "n1": (0.0, 0.2, -1.0)})

    loaded = read_forces_csv(write_forces_csv([field], tmp_path / "forces.csv"))

    assert loaded[0].node_ids == ("n1",)
    assert loaded[0].as_mapping() == {"n1": (0.0, 0.2, -1.0)}


def test_ft_csv_round_trip(tmp_path) -> None:
    readings = [FtReading("a", AxisTriple(0.01, -0.02, -1.5), RESOLUTION)]

    loaded = read_ft_csv(write_ft_csv(readings, tmp_path / "ft.csv"), RESOLUTION)

    assert loaded == readings


def test_ft_csv_reports_bad_numbers(tmp_path) -> None:
    path = tmp_path / "ft.csv"
    path.write_text("indentation_id,fx_n,fy_n,fz_n\na,0,zero,-1\n")

    with pytest.raises(CsvFormatError) as excinfo:
        read_ft_csv(path, RESOLUTION)
    assert excinfo.value.row == 2
    assert excinfo.value.column == "fy_n"


def _labels(grid: BinGrid) -> list[ForceDistributionLabel]:
    first = np.zeros((grid.n, 3))
    first[1] = (0.1, 0.0, -0.8)
    first[3] = (0.0, -0.05, -0.2)
    return [ForceDistributionLabel("a", grid, first), ForceDistributionLabel("b", grid, np.zeros((grid.n, 3)))]


def test_labels_round_trip(tmp_path) -> None:
    grid = BinGrid.with_side(EXTENT, 16.0)
    labels = _labels(grid)

    csv_path, manifest = write_labels(labels, grid, tmp_path / "labels.csv", tmp_path / "labels.json")
    loaded_grid, loaded = read_labels(manifest)

    assert loaded_grid == grid
    assert [label.indentation_id for label in loaded] == ["a", "b"]
    assert np.array_equal(loaded[0].values, labels[0].values)
    assert np.array_equal(loaded[1].values, np.zeros((grid.n, 3)))
    assert csv_path.read_text().count("\n") == 3


def test_labels_reject_foreign_manifest(tmp_path) -> None:
    grid = BinGrid.with_side(EXTENT, 16.0)
    _, manifest = write_labels(_labels(grid), grid, tmp_path / "labels.csv", tmp_path / "labels.json")
    data = json.loads(manifest.read_text())
    data["kind"] = "dataset"
    manifest.write_text(json.dumps(data))

    with pytest.raises(SchemaError):
        read_labels(manifest)


def test_labels_reject_out_of_range_bins(tmp_path) -> None:
    grid = BinGrid.with_side(EXTENT, 16.0)
    csv_path, manifest = write_labels(
        _labels(grid), grid, tmp_path / "labels.csv", tmp_path / "labels.json"
    )
    csv_path.write_text(csv_path.read_text() + "a,4,0,0,-1\n")

    with pytest.raises(CsvFormatError):
        read_labels(manifest)
