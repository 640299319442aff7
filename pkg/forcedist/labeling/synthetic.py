"""Desk-scale synthetic indentation force fields.

The profile is a Hertz-like spherical-cap pressure with radial friction. It
feeds the labeling and learning pipeline with plausible data and makes no
claim of FEM fidelity.
"""

from __future__ import annotations

import math

import numpy as np

from ..domain import require_finite, require_positive
from ..errors import GeometryError, ParameterDomainError
from .binning import IndentationMeta, NodalForceField
from .mesh import SurfaceMesh

MAX_DEPTH_MM = 2.0
DEFAULT_FRICTION = 0.45


def contact_radius(depth_mm: float, radius_mm: float) -> float:
    """Chord radius of a sphere of radius R cut at the given depth."""
    d = min(depth_mm, radius_mm)
    return math.sqrt(max(0.0, 2.0 * radius_mm * d - d * d))


def synth_indentation(
    mesh: SurfaceMesh,
    center: tuple[float, float],
    depth_mm: float,
    radius_mm: float,
    stiffness_scale: float,
    *,
    friction: float = DEFAULT_FRICTION,
    indentation_id: str = "0",
) -> NodalForceField:
    cx = require_finite(center[0], "center x")
    cy = require_finite(center[1], "center y")
    if not mesh.extent.contains(cx, cy):
        raise GeometryError(f"indentation center ({cx:g}, {cy:g}) mm lies outside the surface")
    depth = require_finite(depth_mm, "depth")
    if not 0.0 <= depth <= MAX_DEPTH_MM:
        raise ParameterDomainError(f"depth must lie in [0, {MAX_DEPTH_MM:g}] mm, got {depth:g}")
    radius = require_positive(radius_mm, "indenter radius")
    stiffness = require_positive(stiffness_scale, "stiffness scale")
    mu0 = require_finite(friction, "friction")
    if mu0 < 0:
        raise ParameterDomainError(f"friction must be >= 0, got {mu0:g}")

    meta = IndentationMeta(indentation_id, cx, cy, depth)
    forces = np.zeros((len(mesh), 3))
    if depth > 0.0 and len(mesh):
        offsets = mesh.xy - np.array([cx, cy])
        rho = np.hypot(offsets[:, 0], offsets[:, 1])
        a = contact_radius(depth, radius)
        weights = np.sqrt(np.clip(1.0 - (rho / a) ** 2, 0.0, None)) if a > 0 else np.zeros_like(rho)
        if not np.any(weights > 0):
            # contact patch smaller than the mesh spacing
            weights[int(np.argmin(rho))] = 1.0
        total = stiffness * depth**1.5
        fz = -total * weights / math.fsum(weights.tolist())
        with np.errstate(invalid="ignore", divide="ignore"):
            radial = np.where(rho[:, None] > 0, offsets / rho[:, None], 0.0)
        forces[:, :2] = mu0 * np.abs(fz)[:, None] * radial
        forces[:, 2] = fz
    return NodalForceField(indentation_id, mesh.node_ids, forces, meta)
