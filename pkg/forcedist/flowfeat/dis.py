"""Coarse-to-fine patch inverse search optical flow.

Each pyramid level aligns square reference patches in the current image with
an inverse-compositional, translation-only Gauss-Newton search and then
densifies the patch displacements by residual-weighted averaging. The
coarse result, scaled by two, seeds the next finer level.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import ndimage

from ..domain import require_int, require_positive
from ..errors import InputError
from ..log import logger
from .images import GrayImage

PYRAMID_SIGMA = 1.0
SINGULAR_HESSIAN = 1e-12
RESIDUAL_FLOOR = 0.01


@dataclass(frozen=True)
class FlowConfig:
    levels: int = 4
    patch: int = 8
    stride: int = 4
    iterations: int = 12
    min_update_px: float = 0.01
    variance_floor: float = 1e-4

    def __post_init__(self) -> None:
        require_int(self.levels, "flow levels", minimum=1)
        require_int(self.patch, "patch size", minimum=2)
        require_int(self.stride, "patch stride", minimum=1)
        require_int(self.iterations, "flow iterations", minimum=1)
        require_positive(self.min_update_px, "minimum update")
        if self.stride > self.patch:
            raise InputError("patch stride cannot exceed the patch size")
        if self.variance_floor < 0:
            raise InputError("variance floor must be >= 0")


@dataclass(frozen=True, eq=False)
class FlowField:
    """Per-pixel displacement: ref(x) matches cur(x + (u, v))."""

    u: np.ndarray
    v: np.ndarray

    def __post_init__(self) -> None:
        u = np.array(self.u, dtype=float)
        v = np.array(self.v, dtype=float)
        if u.ndim != 2 or u.shape != v.shape:
            raise InputError("flow components must be 2D arrays of equal shape")
        if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
            raise InputError("flow field must be finite")
        u.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)

    @classmethod
    def zeros(cls, height: int, width: int) -> "FlowField":
        return cls(np.zeros((height, width)), np.zeros((height, width)))

    @property
    def width(self) -> int:
        return int(self.u.shape[1])

    @property
    def height(self) -> int:
        return int(self.u.shape[0])

    @property
    def magnitude(self) -> np.ndarray:
        return np.hypot(self.u, self.v)

    def endpoint_error(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        return np.hypot(self.u - u, self.v - v)


@dataclass(frozen=True)
class _PatchLayout:
    rows: np.ndarray
    cols: np.ndarray
    grid_shape: tuple[int, int]
    pixel_rows: np.ndarray
    pixel_cols: np.ndarray


def dense_flow(ref: GrayImage, cur: GrayImage, config: FlowConfig | None = None) -> FlowField:
    config = config or FlowConfig()
    if ref.shape != cur.shape:
        raise InputError(f"image sizes differ: {ref.width}x{ref.height} vs {cur.width}x{cur.height}")
    ref_pyramid = _pyramid(ref.pixels, usable_levels(ref.shape, config))
    cur_pyramid = _pyramid(cur.pixels, len(ref_pyramid))

    u = np.zeros(ref_pyramid[-1].shape)
    v = np.zeros(ref_pyramid[-1].shape)
    for level in range(len(ref_pyramid) - 1, -1, -1):
        template, image = ref_pyramid[level], cur_pyramid[level]
        if u.shape != template.shape:
            u, v = _upsample(u, template.shape), _upsample(v, template.shape)
        u, v = _refine_level(template, image, u, v, config)
        logger.debug(
            f"flow level {level} ({template.shape[1]}x{template.shape[0]}): "
            f"mean |d| {float(np.mean(np.hypot(u, v))):.4f} px"
        )
    return FlowField(u, v)


def usable_levels(shape: tuple[int, int], config: FlowConfig) -> int:
    """Levels available before the coarsest image drops below two patches."""
    levels = 1
    side = min(shape)
    while levels < config.levels and (side + 1) // 2 >= 2 * config.patch:
        side = (side + 1) // 2
        levels += 1
    return levels


def _pyramid(pixels: np.ndarray, levels: int) -> list[np.ndarray]:
    pyramid = [np.asarray(pixels, dtype=float)]
    for _ in range(levels - 1):
        pyramid.append(ndimage.gaussian_filter(pyramid[-1], PYRAMID_SIGMA)[::2, ::2])
    return pyramid


def _upsample(component: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    rows, cols = np.mgrid[0 : shape[0], 0 : shape[1]].astype(float)
    coarse = ndimage.map_coordinates(component, [rows / 2.0, cols / 2.0], order=1, mode="nearest")
    return 2.0 * coarse


def _patch_starts(size: int, patch: int, stride: int) -> np.ndarray:
    starts = list(range(0, size - patch + 1, stride))
    if starts[-1] != size - patch:
        starts.append(size - patch)
    return np.array(starts, dtype=np.intp)


def _layout(shape: tuple[int, int], config: FlowConfig) -> _PatchLayout:
    row_starts = _patch_starts(shape[0], config.patch, config.stride)
    col_starts = _patch_starts(shape[1], config.patch, config.stride)
    top, left = np.meshgrid(row_starts, col_starts, indexing="ij")
    offsets_r, offsets_c = np.meshgrid(np.arange(config.patch), np.arange(config.patch), indexing="ij")
    pixel_rows = top.reshape(-1, 1) + offsets_r.reshape(1, -1)
    pixel_cols = left.reshape(-1, 1) + offsets_c.reshape(1, -1)
    return _PatchLayout(
        rows=top.ravel(),
        cols=left.ravel(),
        grid_shape=(len(row_starts), len(col_starts)),
        pixel_rows=pixel_rows,
        pixel_cols=pixel_cols,
    )


def _refine_level(
    template: np.ndarray,
    image: np.ndarray,
    u: np.ndarray,
    v: np.ndarray,
    config: FlowConfig,
) -> tuple[np.ndarray, np.ndarray]:
    layout = _layout(template.shape, config)
    rows, cols = layout.pixel_rows, layout.pixel_cols
    coefficients = ndimage.spline_filter(image, order=3, mode="nearest")

    def sample(du: np.ndarray, dv: np.ndarray) -> np.ndarray:
        coords = [rows + dv[:, None], cols + du[:, None]]
        return ndimage.map_coordinates(coefficients, coords, order=3, prefilter=False, mode="nearest")

    grad_r, grad_c = np.gradient(template)
    t = template[rows, cols]
    gx = grad_c[rows, cols]
    gy = grad_r[rows, cols]
    hxx = np.sum(gx * gx, axis=1)
    hxy = np.sum(gx * gy, axis=1)
    hyy = np.sum(gy * gy, axis=1)
    det = hxx * hyy - hxy * hxy
    textured = (t.var(axis=1) >= config.variance_floor) & (det > SINGULAR_HESSIAN)

    du = u[rows, cols].mean(axis=1)
    dv = v[rows, cols].mean(axis=1)
    start_cost = np.sum((sample(du, dv) - t) ** 2, axis=1)
    pu, pv = du.copy(), dv.copy()
    active = textured.copy()
    safe_det = np.where(textured, det, 1.0)
    for _ in range(config.iterations):
        if not active.any():
            break
        error = sample(pu, pv) - t
        bx = np.sum(gx * error, axis=1)
        by = np.sum(gy * error, axis=1)
        step_u = (hyy * bx - hxy * by) / safe_det
        step_v = (hxx * by - hxy * bx) / safe_det
        pu = np.where(active, pu - step_u, pu)
        pv = np.where(active, pv - step_v, pv)
        active &= np.hypot(step_u, step_v) >= config.min_update_px

    end_cost = np.sum((sample(pu, pv) - t) ** 2, axis=1)
    worse = end_cost > start_cost
    pu = np.where(worse, du, pu)
    pv = np.where(worse, dv, pv)
    pu, pv = _fill_textureless(pu, pv, textured, layout.grid_shape)
    logger.debug(f"flow patches: {int(textured.sum())}/{textured.size} textured")
    return _densify(template, sample, t, pu, pv, layout)


def _fill_textureless(
    pu: np.ndarray, pv: np.ndarray, textured: np.ndarray, grid_shape: tuple[int, int]
) -> tuple[np.ndarray, np.ndarray]:
    """Give textureless patches the mean displacement of their textured neighbours."""
    if textured.all() or not textured.any():
        return pu, pv
    weight = textured.reshape(grid_shape).astype(float)
    kernel = np.ones((3, 3))
    count = ndimage.convolve(weight, kernel, mode="constant")
    sum_u = ndimage.convolve(np.where(textured, pu, 0.0).reshape(grid_shape), kernel, mode="constant")
    sum_v = ndimage.convolve(np.where(textured, pv, 0.0).reshape(grid_shape), kernel, mode="constant")
    fill = (~textured) & (count.ravel() > 0)
    with np.errstate(invalid="ignore", divide="ignore"):
        pu = np.where(fill, sum_u.ravel() / count.ravel(), pu)
        pv = np.where(fill, sum_v.ravel() / count.ravel(), pv)
    return pu, pv


def _densify(
    template: np.ndarray,
    sample: Callable[[np.ndarray, np.ndarray], np.ndarray],
    t: np.ndarray,
    pu: np.ndarray,
    pv: np.ndarray,
    layout: _PatchLayout,
) -> tuple[np.ndarray, np.ndarray]:
    residual = np.abs(sample(pu, pv) - t)
    weight = 1.0 / np.maximum(RESIDUAL_FLOOR, residual)
    flat = (layout.pixel_rows * template.shape[1] + layout.pixel_cols).ravel()
    size = template.size
    total = np.bincount(flat, weights=weight.ravel(), minlength=size)
    sum_u = np.bincount(flat, weights=(weight * pu[:, None]).ravel(), minlength=size)
    sum_v = np.bincount(flat, weights=(weight * pv[:, None]).ravel(), minlength=size)
    return (sum_u / total).reshape(template.shape), (sum_v / total).reshape(template.shape)
