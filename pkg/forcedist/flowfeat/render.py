"""Synthetic particle images with a known displacement field.

Particles are Gaussian blobs (sigma = radius / 2) on a dark background. The
current image draws every particle at its reference center moved by the
scene's displacement field, which gives an exact flow oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Protocol

import numpy as np

from ..domain import require_finite, require_int, require_positive
from ..errors import SceneError
from .images import MIN_SIDE, GrayImage

BLOB_TRUNCATE = 6.0


class DisplacementField(Protocol):
    def displacement(self, x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Return (dx, dy) in pixels at the given pixel coordinates."""
        ...


@dataclass(frozen=True)
class UniformDisplacement:
    dx: float
    dy: float

    def displacement(self, x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        shape = np.broadcast(x, y).shape
        return np.full(shape, float(self.dx)), np.full(shape, float(self.dy))


def _radial_bump(
    x: np.ndarray, y: np.ndarray, cx: float, cy: float, amplitude: float, sigma: float
) -> tuple[np.ndarray, np.ndarray]:
    """Radial field peaking at |amplitude| on the circle of radius sigma."""
    ox = np.asarray(x, dtype=float) - cx
    oy = np.asarray(y, dtype=float) - cy
    scale = amplitude / sigma * np.exp(0.5 - (ox * ox + oy * oy) / (2.0 * sigma * sigma))
    return scale * ox, scale * oy


@dataclass(frozen=True)
class RadialSqueeze:
    """Smooth field pulling material towards a center, largest at r = sigma."""

    cx: float
    cy: float
    amplitude: float
    sigma: float

    def __post_init__(self) -> None:
        require_positive(self.sigma, "squeeze sigma")
        require_finite(self.amplitude, "squeeze amplitude")

    def displacement(self, x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return _radial_bump(x, y, self.cx, self.cy, -self.amplitude, self.sigma)


@dataclass(frozen=True)
class IndentationDisplacement:
    """Lateral spread of the particle layer around an indentation.

    The peak displacement grows linearly with depth and sits at the rim of the
    contact patch.
    """

    cx: float
    cy: float
    depth_mm: float
    contact_radius_px: float
    gain_px_per_mm: float

    def __post_init__(self) -> None:
        require_positive(self.contact_radius_px, "contact radius")
        require_finite(self.depth_mm, "depth")
        require_finite(self.gain_px_per_mm, "displacement gain")

    def displacement(self, x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        amplitude = self.gain_px_per_mm * self.depth_mm
        return _radial_bump(x, y, self.cx, self.cy, amplitude, self.contact_radius_px)


@dataclass(frozen=True, eq=False)
class ParticleScene:
    width: int
    height: int
    centers: np.ndarray
    radius: float
    peak: float = 0.8
    background: float = 0.0
    field: DisplacementField | None = None

    def __post_init__(self) -> None:
        require_int(self.width, "scene width", minimum=MIN_SIDE)
        require_int(self.height, "scene height", minimum=MIN_SIDE)
        require_positive(self.radius, "particle radius")
        if not 0.0 < self.peak <= 1.0 or not 0.0 <= self.background < 1.0:
            raise SceneError("particle peak must lie in (0, 1] and background in [0, 1)")
        centers = np.array(self.centers, dtype=float).reshape(-1, 2)
        if not np.all(np.isfinite(centers)):
            raise SceneError("particle centers must be finite")
        if _leaves_frame(centers, self.width, self.height).any():
            raise SceneError("particle centers must lie inside the frame")
        displaced = self.displaced_centers(centers)
        leaving = _leaves_frame(displaced, self.width, self.height)
        if leaving.any():
            raise SceneError(f"{int(leaving.sum())} particle(s) leave the frame after displacement")
        centers.setflags(write=False)
        object.__setattr__(self, "centers", centers)

    @property
    def sigma(self) -> float:
        return 0.5 * self.radius

    def with_field(self, field: DisplacementField | None) -> "ParticleScene":
        return replace(self, field=field)

    def displaced_centers(self, centers: np.ndarray | None = None) -> np.ndarray:
        base = self.centers if centers is None else centers
        if self.field is None:
            return base.copy()
        dx, dy = self.field.displacement(base[:, 0], base[:, 1])
        return base + np.column_stack([dx, dy])


def random_scene(
    width: int,
    height: int,
    count: int,
    radius: float,
    rng: np.random.Generator,
    *,
    field: DisplacementField | None = None,
    margin: float = 0.0,
    peak: float = 0.8,
) -> ParticleScene:
    """Uniformly scattered particles, drawn in one call so the stream stays stable."""
    require_int(count, "particle count", minimum=0)
    spots = rng.uniform(0.0, 1.0, size=(count, 2))
    centers = np.column_stack(
        [
            margin + spots[:, 0] * (width - 1 - 2 * margin),
            margin + spots[:, 1] * (height - 1 - 2 * margin),
        ]
    )
    return ParticleScene(width, height, centers, radius, peak=peak, field=field)


def render_scene(scene: ParticleScene) -> tuple[GrayImage, GrayImage]:
    ref = _draw(scene, scene.centers)
    cur = ref if scene.field is None else _draw(scene, scene.displaced_centers())
    return GrayImage(ref), GrayImage(cur)


def _draw(scene: ParticleScene, centers: np.ndarray) -> np.ndarray:
    canvas = np.full((scene.height, scene.width), scene.background)
    sigma = scene.sigma
    reach = int(math.ceil(BLOB_TRUNCATE * sigma))
    for cx, cy in centers.tolist():
        x0 = max(0, int(math.floor(cx)) - reach)
        x1 = min(scene.width, int(math.floor(cx)) + reach + 2)
        y0 = max(0, int(math.floor(cy)) - reach)
        y1 = min(scene.height, int(math.floor(cy)) + reach + 2)
        gx = np.exp(-((np.arange(x0, x1) - cx) ** 2) / (2.0 * sigma * sigma))
        gy = np.exp(-((np.arange(y0, y1) - cy) ** 2) / (2.0 * sigma * sigma))
        canvas[y0:y1, x0:x1] += scene.peak * np.outer(gy, gx)
    return np.clip(canvas, 0.0, 1.0)


def _leaves_frame(centers: np.ndarray, width: int, height: int) -> np.ndarray:
    return (
        (centers[:, 0] < 0.0)
        | (centers[:, 0] > width - 1)
        | (centers[:, 1] < 0.0)
        | (centers[:, 1] > height - 1)
    )
