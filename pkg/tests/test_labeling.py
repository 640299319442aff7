from __future__ import annotations

import math

import numpy as np
import pytest

from forcedist.domain import AxisTriple
from forcedist.errors import GeometryError, InputError, PairingError, ParameterDomainError, SchemaError
from forcedist.labeling import (
    BinGrid,
    ForceDistributionLabel,
    FtReading,
    NodalForceField,
    Rect,
    SurfaceMesh,
    agreement_report,
    assign_bins,
    bin_forces,
    contact_radius,
    ground_truth_rmse,
    label_ranges,
    regular_mesh,
    synth_indentation,
    synthetic_readings,
    total_force,
)

EXTENT = Rect.square(32.0)
RESOLUTION = AxisTriple(0.03, 0.03, 0.06)


def _mesh(points: dict[str, tuple[float, float]]) -> SurfaceMesh:
    return SurfaceMesh(tuple(points), np.array(list(points.values())), EXTENT)


def _label(key: str, grid: BinGrid, total: tuple[float, float, float]) -> ForceDistributionLabel:
    values = np.zeros((grid.n, 3))
    values[0] = total
    return ForceDistributionLabel(key, grid, values)


def test_published_grid_geometry() -> None:
    grid = BinGrid(EXTENT, 20, 20)

    assert grid.n == 400
    assert grid.bin_side == pytest.approx(1.6)
    assert BinGrid.with_side(EXTENT, 1.6) == grid


def test_grid_must_tile_extent_with_square_bins() -> None:
    with pytest.raises(GeometryError, match="square bins"):
        BinGrid(EXTENT, 4, 5)
    with pytest.raises(GeometryError):
        BinGrid.with_side(EXTENT, 3.0)


def test_assign_bins_half_open_and_closed_outer_edge() -> None:
    grid = BinGrid(EXTENT, 20, 20)
    mesh = _mesh(
        {
            "center": (0.8, 0.8),
            "edge": (1.6, 0.8),
            "corner": (1.6, 1.6),
            "far": (31.999, 31.999),
            "outer": (32.0, 32.0),
            "origin": (0.0, 0.0),
        }
    )

    bins = assign_bins(mesh, grid)

    assert bins["center"] == 0
    assert bins["edge"] == 1
    assert bins["corner"] == grid.bin_index(1, 1)
    assert bins["far"] == grid.bin_index(19, 19)
    assert bins["outer"] == grid.bin_index(19, 19)
    assert bins["origin"] == 0


def test_assign_bins_rows_follow_y() -> None:
    grid = BinGrid(EXTENT, 4, 4)

    bins = assign_bins(_mesh({"a": (1.0, 9.0)}), grid)

    assert bins["a"] == grid.bin_index(1, 0) == 4
    assert grid.bin_center(4) == pytest.approx((4.0, 12.0))


def test_assign_bins_snaps_rounding_noise_onto_edges() -> None:
    grid = BinGrid(EXTENT, 20, 20)
    edge = 3 * 1.6

    bins = assign_bins(_mesh({"a": (edge * (1 - 1e-15), 0.5)}), grid)

    assert bins["a"] == 3


def test_every_node_lands_in_exactly_one_bin() -> None:
    grid = BinGrid(EXTENT, 20, 20)
    mesh = regular_mesh(EXTENT, 0.8)

    bins = assign_bins(mesh, grid)

    assert len(bins) == len(mesh)
    assert all(0 <= index < grid.n for index in bins.values())
    counts = np.bincount(list(bins.values()), minlength=grid.n)
    assert counts.sum() == len(mesh)


def test_mesh_rejects_nodes_outside_extent() -> None:
    with pytest.raises(GeometryError, match="outside"):
        _mesh({"a": (32.1, 1.0)})


def test_mesh_tolerates_tiny_overshoot() -> None:
    mesh = _mesh({"a": (32.0 + 5e-7, 1.0)})

    assert assign_bins(mesh, BinGrid(EXTENT, 4, 4))["a"] == 3


def test_mesh_rejects_duplicate_ids() -> None:
    with pytest.raises(SchemaError, match="duplicate"):
        SurfaceMesh(("1", "1"), np.zeros((2, 2)), EXTENT)


def test_bin_forces_single_node() -> None:
    grid = BinGrid(EXTENT, 4, 4)
    mesh = _mesh({"n1": (9.0, 1.0), "n2": (30.0, 30.0)})
    field = NodalForceField.from_mapping("i1", {"n1": (0.0, 0.0, -1.0)})

    label = bin_forces(field, mesh, grid)

    assert label.values[1].tolist() == [0.0, 0.0, -1.0]
    assert np.count_nonzero(label.values) == 1
    assert total_force(label) == AxisTriple(0.0, 0.0, -1.0)


def test_bin_forces_cancellation_in_one_bin() -> None:
    grid = BinGrid(EXTENT, 4, 4)
    mesh = _mesh({"a": (1.0, 1.0), "b": (2.0, 2.0)})
    field = NodalForceField.from_mapping("i1", {"a": (1.0, 0.0, 0.0), "b": (-1.0, 0.0, 0.0)})

    assert not np.any(bin_forces(field, mesh, grid).values)


def test_bin_forces_rejects_unknown_nodes() -> None:
    mesh = _mesh({"a": (1.0, 1.0)})
    field = NodalForceField.from_mapping("i1", {"zz": (1.0, 0.0, 0.0)})

    with pytest.raises(SchemaError, match="zz"):
        bin_forces(field, mesh, BinGrid(EXTENT, 4, 4))


def test_binning_conserves_random_totals() -> None:
    rng = np.random.default_rng(21)
    xy = rng.uniform(0.0, 32.0, size=(500, 2))
    ids = tuple(f"n{k}" for k in range(500))
    mesh = SurfaceMesh(ids, xy, EXTENT)
    field = NodalForceField("i1", ids, rng.normal(size=(500, 3)))

    label = bin_forces(field, mesh, BinGrid(EXTENT, 20, 20))

    np.testing.assert_allclose(total_force(label).as_tuple(), total_force(field).as_tuple(), atol=1e-12)
    expected = [math.fsum(field.forces[:, k].tolist()) for k in range(3)]
    assert total_force(field).as_tuple() == tuple(expected)


def test_total_force_of_empty_field() -> None:
    assert total_force(NodalForceField("i1", (), np.zeros((0, 3)))) == AxisTriple(0.0, 0.0, 0.0)


def test_force_field_rejects_non_finite_values() -> None:
    with pytest.raises(InputError):
        NodalForceField("i1", ("a",), [[0.0, math.nan, 0.0]])


def test_label_packs_axis_interleaved() -> None:
    grid = BinGrid(EXTENT, 2, 2)
    values = np.arange(12, dtype=float).reshape(4, 3)
    label = ForceDistributionLabel("i1", grid, values)

    assert label.packed.tolist() == list(range(12))
    assert ForceDistributionLabel.from_packed("i1", grid, label.packed).values.tolist() == values.tolist()


def test_ground_truth_rmse_examples() -> None:
    grid = BinGrid(EXTENT, 2, 2)
    labels = [_label("a", grid, (0.0, 0.0, -1.0)), _label("b", grid, (0.5, 0.0, -0.5))]
    same = [FtReading(label.indentation_id, total_force(label), RESOLUTION) for label in labels]
    shifted = [
        FtReading("a", AxisTriple(0.0, 0.0, -1.06), RESOLUTION),
        FtReading("b", AxisTriple(0.5, 0.0, -0.44), RESOLUTION),
    ]

    assert ground_truth_rmse(labels, same) == AxisTriple(0.0, 0.0, 0.0)
    assert ground_truth_rmse(labels, shifted).z == pytest.approx(0.06)
    single = ground_truth_rmse(labels[:1], [FtReading("a", AxisTriple(0.3, 0.4, -1.0), RESOLUTION)])
    assert single.as_tuple() == pytest.approx((0.3, 0.4, 0.0))


def test_ground_truth_rmse_ignores_order() -> None:
    grid = BinGrid(EXTENT, 2, 2)
    labels = [_label(key, grid, (0.1 * k, -0.2 * k, -k)) for k, key in enumerate("abcd")]
    rng = np.random.default_rng(2)
    readings = synthetic_readings(labels, RESOLUTION, rng)

    forward = ground_truth_rmse(labels, readings)
    backward = ground_truth_rmse(labels[::-1], readings[::-1])

    assert forward == backward


def test_ground_truth_rmse_lists_unmatched_ids() -> None:
    grid = BinGrid(EXTENT, 2, 2)
    labels = [_label("a", grid, (0.0, 0.0, -1.0))]
    readings = [FtReading("b", AxisTriple(0.0, 0.0, -1.0), RESOLUTION)]

    with pytest.raises(PairingError) as excinfo:
        ground_truth_rmse(labels, readings)

    assert excinfo.value.offenders == ("a", "b")


def test_reading_needs_positive_resolution() -> None:
    with pytest.raises(ParameterDomainError):
        FtReading("a", AxisTriple(0.0, 0.0, 0.0), AxisTriple(0.03, 0.0, 0.06))


def test_agreement_report_flags_resolution() -> None:
    grid = BinGrid(EXTENT, 2, 2)
    labels = [_label("a", grid, (0.0, 0.0, -1.0))]
    readings = [FtReading("a", AxisTriple(0.01, 0.1, -1.05), RESOLUTION)]

    report = agreement_report(labels, readings)

    assert report.within_resolution == {"x": True, "y": False, "z": True}
    assert report.to_data()["count"] == 1
    with pytest.raises(InputError):
        agreement_report(labels, [])


def test_label_ranges_cover_bins_and_totals() -> None:
    grid = BinGrid(EXTENT, 2, 2)
    labels = [_label("a", grid, (0.0, 0.0, -1.0)), _label("b", grid, (0.2, 0.0, -0.5))]

    ranges = label_ranges(labels)

    assert ranges.total["z"].low == -1.0
    assert ranges.total["z"].high == -0.5
    assert ranges.per_bin["x"].high == 0.2
    assert ranges.to_data()["count"] == 2


def test_contact_radius_caps_at_indenter_radius() -> None:
    assert contact_radius(1.0, 5.0) == pytest.approx(3.0)
    assert contact_radius(7.0, 5.0) == pytest.approx(5.0)


def test_synthetic_indentation_hits_calibrated_force() -> None:
    mesh = regular_mesh(EXTENT, 0.5)

    field = synth_indentation(mesh, (16.0, 16.0), 2.0, 5.0, 1.7 / 2.0**1.5)

    fx, fy, fz = total_force(field).as_tuple()
    assert fz == pytest.approx(-1.7, rel=1e-12)
    assert abs(fx) <= 1e-9 * 1.7
    assert abs(fy) <= 1e-9 * 1.7
    assert np.all(field.forces[:, 2] <= 0.0)


def test_synthetic_indentation_depth_zero_is_empty() -> None:
    mesh = regular_mesh(EXTENT, 1.0)

    field = synth_indentation(mesh, (10.0, 10.0), 0.0, 5.0, 1.0)

    assert not np.any(field.forces)
    assert field.meta is not None and field.meta.depth_mm == 0.0


def test_synthetic_indentation_mirrors_shear() -> None:
    mesh = regular_mesh(EXTENT, 0.5)

    left = synth_indentation(mesh, (10.0, 12.0), 1.0, 5.0, 0.6, indentation_id="l")
    right = synth_indentation(mesh, (22.0, 12.0), 1.0, 5.0, 0.6, indentation_id="r")

    l_total, r_total = total_force(left), total_force(right)
    assert r_total.x == pytest.approx(-l_total.x, abs=1e-12)
    assert r_total.y == pytest.approx(l_total.y, abs=1e-12)
    assert r_total.z == pytest.approx(l_total.z, rel=1e-12)


def test_synthetic_indentation_on_sparse_mesh_uses_nearest_node() -> None:
    mesh = regular_mesh(EXTENT, 8.0)

    field = synth_indentation(mesh, (9.0, 9.0), 0.01, 5.0, 1.0)

    loaded = np.flatnonzero(field.forces[:, 2])
    assert len(loaded) == 1
    assert mesh.node_ids[loaded[0]] in field.node_ids
    assert mesh.xy[loaded[0]].tolist() == [8.0, 8.0]


@pytest.mark.parametrize("depth", [-0.1, 2.5])
def test_synthetic_indentation_rejects_depth(depth: float) -> None:
    with pytest.raises(ParameterDomainError):
        synth_indentation(regular_mesh(EXTENT, 1.0), (10.0, 10.0), depth, 5.0, 1.0)


def test_synthetic_indentation_rejects_center_off_surface() -> None:
    with pytest.raises(GeometryError):
        synth_indentation(regular_mesh(EXTENT, 1.0), (40.0, 10.0), 1.0, 5.0, 1.0)


def test_synthetic_readings_are_seeded() -> None:
    grid = BinGrid(EXTENT, 2, 2)
    labels = [_label("b", grid, (0.0, 0.0, -1.0)), _label("a", grid, (0.0, 0.0, -0.5))]

    first = synthetic_readings(labels, RESOLUTION, np.random.default_rng(4))
    second = synthetic_readings(labels, RESOLUTION, np.random.default_rng(4))

    assert [r.indentation_id for r in first] == ["a", "b"]
    assert [r.total for r in first] == [r.total for r in second]
