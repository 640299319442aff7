"""Grayscale images with intensities in [0, 1] and 8-bit PNG/PGM IO."""

from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from ..errors import InputError
from ..storage import write_bytes_atomic

MIN_SIDE = 32
LEVELS = 255
FORMATS = {".png": "PNG", ".pgm": "PPM"}


@dataclass(frozen=True, eq=False)
class GrayImage:
    pixels: np.ndarray

    def __post_init__(self) -> None:
        pixels = np.array(self.pixels, dtype=float)
        if pixels.ndim != 2:
            raise InputError(f"grayscale image must be 2D, got shape {pixels.shape}")
        height, width = pixels.shape
        if width < MIN_SIDE or height < MIN_SIDE:
            raise InputError(f"image must be at least {MIN_SIDE}x{MIN_SIDE} px, got {width}x{height}")
        if not np.all(np.isfinite(pixels)):
            raise InputError("image contains non-finite pixels")
        if pixels.min() < 0.0 or pixels.max() > 1.0:
            raise InputError("image intensities must lie in [0, 1]")
        pixels.setflags(write=False)
        object.__setattr__(self, "pixels", pixels)

    @property
    def width(self) -> int:
        return int(self.pixels.shape[1])

    @property
    def height(self) -> int:
        return int(self.pixels.shape[0])

    @property
    def shape(self) -> tuple[int, int]:
        return (self.height, self.width)


def quantize(image: GrayImage) -> GrayImage:
    """Round to the 8-bit levels an image file would store."""
    return GrayImage(np.rint(image.pixels * LEVELS) / LEVELS)


def read_image(path: Path) -> GrayImage:
    path = Path(path)
    try:
        with Image.open(path) as handle:
            gray = handle.convert("L")
            pixels = np.asarray(gray, dtype=float) / LEVELS
    except UnidentifiedImageError as exc:
        raise InputError(f"not a readable image: {path}") from exc
    return GrayImage(pixels)


def write_image(image: GrayImage, path: Path) -> Path:
    path = Path(path)
    image_format = FORMATS.get(path.suffix.lower())
    if image_format is None:
        raise InputError(f"unsupported image suffix [{path.suffix}], expected .png or .pgm")
    levels = np.rint(image.pixels * LEVELS).astype(np.uint8)
    buffer = io.BytesIO()
    Image.fromarray(levels).save(buffer, format=image_format)
    return write_bytes_atomic(path, buffer.getvalue())
