"""Surface mesh and bin grid geometry (millimetres, reference configuration)."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Any, Iterable

import numpy as np

from ..domain import require_finite, require_int, require_positive, require_text
from ..errors import GeometryError, SchemaError

EXTENT_TOLERANCE_MM = 1e-6
EDGE_SNAP = 1e-9
SQUARE_TOLERANCE = 1e-9


@dataclass(frozen=True)
class Rect:
    x0: float
    y0: float
    width: float
    height: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "x0", require_finite(self.x0, "extent x0"))
        object.__setattr__(self, "y0", require_finite(self.y0, "extent y0"))
        object.__setattr__(self, "width", require_positive(self.width, "extent width"))
        object.__setattr__(self, "height", require_positive(self.height, "extent height"))

    @classmethod
    def square(cls, side_mm: float) -> "Rect":
        return cls(0.0, 0.0, side_mm, side_mm)

    @property
    def x1(self) -> float:
        return self.x0 + self.width

    @property
    def y1(self) -> float:
        return self.y0 + self.height

    @property
    def center(self) -> tuple[float, float]:
        return (self.x0 + 0.5 * self.width, self.y0 + 0.5 * self.height)

    def contains(self, x: float, y: float, tolerance: float = EXTENT_TOLERANCE_MM) -> bool:
        return (
            self.x0 - tolerance <= x <= self.x1 + tolerance
            and self.y0 - tolerance <= y <= self.y1 + tolerance
        )

    def to_data(self) -> dict[str, float]:
        return {"x0_mm": self.x0, "y0_mm": self.y0, "width_mm": self.width, "height_mm": self.height}

    @classmethod
    def from_data(cls, data: dict[str, Any]) -> "Rect":
        try:
            return cls(data["x0_mm"], data["y0_mm"], data["width_mm"], data["height_mm"])
        except KeyError as exc:
            raise SchemaError(f"extent is missing field [{exc.args[0]}]") from exc


@dataclass(frozen=True, eq=False)
class SurfaceMesh:
    """Top-surface nodes in the undeformed state.

    ``xy`` holds one (x, y) row per entry of ``node_ids``.
    """

    node_ids: tuple[str, ...]
    xy: np.ndarray
    extent: Rect
    _index: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        node_ids = tuple(require_text(node_id, "node id") for node_id in self.node_ids)
        xy = np.array(self.xy, dtype=float).reshape(-1, 2) if len(node_ids) else np.zeros((0, 2))
        if xy.shape[0] != len(node_ids):
            raise SchemaError("mesh needs exactly one coordinate pair per node id")
        if not np.all(np.isfinite(xy)):
            raise GeometryError("mesh coordinates must be finite")
        index = {node_id: row for row, node_id in enumerate(node_ids)}
        if len(index) != len(node_ids):
            duplicates = sorted(n for n, count in Counter(node_ids).items() if count > 1)
            raise SchemaError(f"duplicate mesh node ids: {', '.join(duplicates[:10])}")
        outside = _outside(xy, self.extent)
        if outside.any():
            first = node_ids[int(np.argmax(outside))]
            raise GeometryError(f"mesh node [{first}] lies outside the surface extent")
        xy.setflags(write=False)
        object.__setattr__(self, "node_ids", node_ids)
        object.__setattr__(self, "xy", xy)
        object.__setattr__(self, "_index", index)

    def __len__(self) -> int:
        return len(self.node_ids)

    def __contains__(self, node_id: object) -> bool:
        return node_id in self._index

    def rows_for(self, node_ids: Iterable[str]) -> np.ndarray:
        return np.array([self._index[node_id] for node_id in node_ids], dtype=np.intp)


@dataclass(frozen=True)
class BinGrid:
    extent: Rect
    rows: int
    cols: int

    def __post_init__(self) -> None:
        require_int(self.rows, "grid rows", minimum=1)
        require_int(self.cols, "grid cols", minimum=1)
        side_x = self.extent.width / self.cols
        side_y = self.extent.height / self.rows
        if not math.isclose(side_x, side_y, rel_tol=SQUARE_TOLERANCE):
            raise GeometryError(
                f"{self.rows}x{self.cols} grid does not tile the "
                f"{self.extent.width:g}x{self.extent.height:g} mm extent with square bins"
            )

    @classmethod
    def with_side(cls, extent: Rect, side_mm: float) -> "BinGrid":
        side = require_positive(side_mm, "bin side")
        cols = round(extent.width / side)
        rows = round(extent.height / side)
        if (
            cols < 1
            or rows < 1
            or not math.isclose(cols * side, extent.width, rel_tol=SQUARE_TOLERANCE)
            or not math.isclose(rows * side, extent.height, rel_tol=SQUARE_TOLERANCE)
        ):
            raise GeometryError(f"bin side {side:g} mm does not divide the surface extent")
        return cls(extent, rows, cols)

    @property
    def n(self) -> int:
        return self.rows * self.cols

    @property
    def bin_side(self) -> float:
        return self.extent.width / self.cols

    def bin_index(self, row: int, col: int) -> int:
        return row * self.cols + col

    def bin_center(self, index: int) -> tuple[float, float]:
        row, col = divmod(index, self.cols)
        side = self.bin_side
        return (self.extent.x0 + (col + 0.5) * side, self.extent.y0 + (row + 0.5) * side)

    def to_data(self) -> dict[str, Any]:
        return {
            "extent": self.extent.to_data(),
            "rows": self.rows,
            "cols": self.cols,
            "n": self.n,
            "bin_side_mm": self.bin_side,
        }

    @classmethod
    def from_data(cls, data: dict[str, Any]) -> "BinGrid":
        try:
            return cls(Rect.from_data(data["extent"]), data["rows"], data["cols"])
        except KeyError as exc:
            raise SchemaError(f"grid geometry is missing field [{exc.args[0]}]") from exc


def regular_mesh(extent: Rect, spacing_mm: float) -> SurfaceMesh:
    spacing = require_positive(spacing_mm, "mesh spacing")
    steps_x = round(extent.width / spacing)
    steps_y = round(extent.height / spacing)
    if steps_x < 1 or steps_y < 1:
        raise GeometryError(f"mesh spacing {spacing:g} mm exceeds the surface extent")
    xs = np.linspace(extent.x0, extent.x1, steps_x + 1)
    ys = np.linspace(extent.y0, extent.y1, steps_y + 1)
    gx, gy = np.meshgrid(xs, ys)
    xy = np.column_stack([gx.ravel(), gy.ravel()])
    node_ids = tuple(str(k + 1) for k in range(xy.shape[0]))
    return SurfaceMesh(node_ids=node_ids, xy=xy, extent=extent)


def assign_bins(mesh: SurfaceMesh, grid: BinGrid) -> dict[str, int]:
    """Map every node to the bin containing its reference position.

    Bins are half-open towards +x/+y; the last row and column are closed so
    nodes on the outer edge still belong to the grid.
    """
    return dict(zip(mesh.node_ids, bin_indices(mesh.xy, grid).tolist()))


def bin_indices(xy: np.ndarray, grid: BinGrid) -> np.ndarray:
    xy = np.asarray(xy, dtype=float).reshape(-1, 2)
    outside = _outside(xy, grid.extent)
    if outside.any():
        x, y = xy[int(np.argmax(outside))]
        raise GeometryError(f"node ({x:g}, {y:g}) mm lies outside the bin grid extent")
    side = grid.bin_side
    u = (xy[:, 0] - grid.extent.x0) / side
    v = (xy[:, 1] - grid.extent.y0) / side
    cols = np.clip(np.floor(_snap(u)), 0, grid.cols - 1).astype(np.intp)
    rows = np.clip(np.floor(_snap(v)), 0, grid.rows - 1).astype(np.intp)
    return rows * grid.cols + cols


def _snap(coordinate: np.ndarray) -> np.ndarray:
    nearest = np.rint(coordinate)
    return np.where(np.abs(coordinate - nearest) <= EDGE_SNAP, nearest, coordinate)


def _outside(xy: np.ndarray, extent: Rect) -> np.ndarray:
    tol = EXTENT_TOLERANCE_MM
    return (
        (xy[:, 0] < extent.x0 - tol)
        | (xy[:, 0] > extent.x1 + tol)
        | (xy[:, 1] < extent.y0 - tol)
        | (xy[:, 1] > extent.y1 + tol)
    )
