"""Per-bin ground-truth force labels built from nodal contact forces."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from ..domain import AXES, AxisTriple, require_finite, require_text
from ..errors import InputError, SchemaError
from .mesh import BinGrid, SurfaceMesh, bin_indices


@dataclass(frozen=True)
class IndentationMeta:
    indentation_id: str
    center_x_mm: float
    center_y_mm: float
    depth_mm: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "indentation_id", require_text(self.indentation_id, "indentation id"))
        for name in ("center_x_mm", "center_y_mm", "depth_mm"):
            object.__setattr__(self, name, require_finite(getattr(self, name), name))

    def to_data(self) -> dict[str, Any]:
        return {
            "indentation_id": self.indentation_id,
            "center_x_mm": self.center_x_mm,
            "center_y_mm": self.center_y_mm,
            "depth_mm": self.depth_mm,
        }


@dataclass(frozen=True, eq=False)
class NodalForceField:
    """One 3D contact force [N] per mesh node for a single indentation."""

    indentation_id: str
    node_ids: tuple[str, ...]
    forces: np.ndarray
    meta: IndentationMeta | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "indentation_id", require_text(self.indentation_id, "indentation id"))
        node_ids = tuple(str(node_id) for node_id in self.node_ids)
        forces = np.array(self.forces, dtype=float).reshape(-1, 3) if node_ids else np.zeros((0, 3))
        if forces.shape[0] != len(node_ids):
            raise SchemaError("force field needs exactly one force per node id")
        if len(set(node_ids)) != len(node_ids):
            raise SchemaError(f"duplicate node ids in force field [{self.indentation_id}]")
        if not np.all(np.isfinite(forces)):
            raise InputError(f"force field [{self.indentation_id}] contains non-finite forces")
        forces.setflags(write=False)
        object.__setattr__(self, "node_ids", node_ids)
        object.__setattr__(self, "forces", forces)

    @classmethod
    def from_mapping(
        cls,
        indentation_id: str,
        forces: Mapping[str, Iterable[float]],
        meta: IndentationMeta | None = None,
    ) -> "NodalForceField":
        node_ids = tuple(forces)
        values = [tuple(forces[node_id]) for node_id in node_ids]
        return cls(indentation_id, node_ids, np.array(values, dtype=float), meta)

    def as_mapping(self) -> dict[str, tuple[float, float, float]]:
        return {
            node_id: (float(f[0]), float(f[1]), float(f[2]))
            for node_id, f in zip(self.node_ids, self.forces)
        }


@dataclass(frozen=True, eq=False)
class ForceDistributionLabel:
    """Bin forces packed as an (n, 3) array in row-major bin order."""

    indentation_id: str
    grid: BinGrid
    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=float)
        if values.shape != (self.grid.n, 3):
            raise SchemaError(
                f"label [{self.indentation_id}] needs {self.grid.n}x3 values, got {values.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise InputError(f"label [{self.indentation_id}] contains non-finite forces")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def packed(self) -> np.ndarray:
        """Axis-interleaved (fx0, fy0, fz0, fx1, ...) vector of length 3n."""
        return self.values.reshape(-1)

    @classmethod
    def from_packed(cls, indentation_id: str, grid: BinGrid, packed: Sequence[float]) -> "ForceDistributionLabel":
        return cls(indentation_id, grid, np.asarray(packed, dtype=float).reshape(grid.n, 3))


@dataclass(frozen=True)
class AxisRange:
    low: float
    high: float

    def to_data(self) -> list[float]:
        return [self.low, self.high]


@dataclass(frozen=True)
class LabelRanges:
    count: int
    per_bin: dict[str, AxisRange]
    total: dict[str, AxisRange]

    def to_data(self) -> dict[str, Any]:
        return {
            "count": self.count,
            "per_bin_n": {axis: r.to_data() for axis, r in self.per_bin.items()},
            "total_n": {axis: r.to_data() for axis, r in self.total.items()},
        }


def bin_forces(field: NodalForceField, mesh: SurfaceMesh, grid: BinGrid) -> ForceDistributionLabel:
    unknown = [node_id for node_id in field.node_ids if node_id not in mesh]
    if unknown:
        shown = ", ".join(sorted(unknown)[:10])
        raise SchemaError(
            f"force field [{field.indentation_id}] references {len(unknown)} unknown node(s): {shown}"
        )
    values = np.zeros((grid.n, 3))
    if len(field.node_ids):
        indices = bin_indices(mesh.xy[mesh.rows_for(field.node_ids)], grid)
        np.add.at(values, indices, field.forces)
    return ForceDistributionLabel(field.indentation_id, grid, values)


def total_force(source: ForceDistributionLabel | NodalForceField) -> AxisTriple:
    """Componentwise sum over bins or nodes, compensated so both forms agree."""
    array = source.values if isinstance(source, ForceDistributionLabel) else source.forces
    return AxisTriple.of(math.fsum(array[:, axis].tolist()) for axis in range(3))


def label_ranges(labels: Sequence[ForceDistributionLabel]) -> LabelRanges:
    if len(labels) == 0:
        raise InputError("no labels to summarize")
    stacked = np.concatenate([label.values for label in labels], axis=0)
    totals = np.array([total_force(label).as_tuple() for label in labels])
    return LabelRanges(
        count=len(labels),
        per_bin={
            axis: AxisRange(float(stacked[:, k].min()), float(stacked[:, k].max()))
            for k, axis in enumerate(AXES)
        },
        total={
            axis: AxisRange(float(totals[:, k].min()), float(totals[:, k].max()))
            for k, axis in enumerate(AXES)
        },
    )
