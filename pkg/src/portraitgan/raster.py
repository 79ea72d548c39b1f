"""Pixel containers and the low-level filters shared by every extraction step.

All operations are pure functions on immutable inputs and use reflect
padding (mirror without repeating the border sample) at image borders.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import ParameterError, ShapeError

RANGE_BOUNDS = {
    "unit": (0.0, 1.0),
    "byte": (0.0, 255.0),
    "signed": (-1.0, 1.0),
}

# Validation tolerance for range bounds; data is stored untouched.
_EPS = 1e-9


@dataclass(frozen=True)
class Raster:
    """H x W (1-channel) or H x W x 3 float image with a declared value range.

    ``range_tag`` is one of ``unit`` [0, 1], ``byte`` [0, 255] or
    ``signed`` [-1, 1]; values are validated against it on construction.
    """

    data: np.ndarray
    range_tag: str = "unit"

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim == 2:
            pass
        elif arr.ndim == 3 and arr.shape[2] == 3:
            pass
        else:
            raise ShapeError(f"raster must be HxW or HxWx3, got shape {arr.shape}")
        if self.range_tag not in RANGE_BOUNDS:
            raise ParameterError(f"unknown range_tag {self.range_tag!r}")
        lo, hi = RANGE_BOUNDS[self.range_tag]
        if arr.size and (arr.min() < lo - _EPS or arr.max() > hi + _EPS):
            raise ParameterError(
                f"values [{arr.min():g}, {arr.max():g}] outside {self.range_tag} range"
            )
        object.__setattr__(self, "data", arr)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return 1 if self.data.ndim == 2 else self.data.shape[2]

    def to_unit(self) -> "Raster":
        if self.range_tag == "unit":
            return self
        if self.range_tag == "byte":
            return Raster(self.data / 255.0, "unit")
        return Raster((self.data + 1.0) / 2.0, "unit")

    def to_byte(self) -> "Raster":
        """Convert to byte range, rounding half-up to integers."""
        if self.range_tag == "byte":
            return self
        unit = self.to_unit()
        return Raster(np.floor(unit.data * 255.0 + 0.5), "byte")

    def to_signed(self) -> "Raster":
        if self.range_tag == "signed":
            return self
        return Raster(self.to_unit().data * 2.0 - 1.0, "signed")


@dataclass(frozen=True)
class BinaryMask:
    """H x W mask with values strictly in {0, 1}."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data)
        if arr.ndim != 2:
            raise ShapeError(f"mask must be HxW, got shape {arr.shape}")
        if arr.size and not np.isin(arr, (0, 1)).all():
            raise ParameterError("mask values must be exactly 0 or 1")
        object.__setattr__(self, "data", arr.astype(np.uint8))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]


N_SEG_CLASSES = 19


@dataclass(frozen=True)
class SegMask:
    """H x W integer label map over the 19 facial-attribute classes."""

    labels: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.labels)
        if arr.ndim != 2:
            raise ShapeError(f"segmentation must be HxW, got shape {arr.shape}")
        if arr.size and (arr.min() < 0 or arr.max() >= N_SEG_CLASSES):
            raise ParameterError(f"labels must be in [0, {N_SEG_CLASSES - 1}]")
        object.__setattr__(self, "labels", arr.astype(np.uint8))

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def width(self) -> int:
        return self.labels.shape[1]

    def class_mask(self, class_id: int) -> BinaryMask:
        return BinaryMask((self.labels == class_id).astype(np.uint8))


# ---------------------------------------------------------------------------
# Filters
# ---------------------------------------------------------------------------


def gaussian_kernel1d(sigma: float, radius: int) -> np.ndarray:
    """Sampled Gaussian on [-radius, radius], normalized to sum 1."""
    if sigma <= 0:
        raise ParameterError(f"sigma must be positive, got {sigma}")
    if radius < 1:
        raise ParameterError(f"kernel radius must be >= 1, got {radius}")
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-0.5 * (x / sigma) ** 2)
    return k / k.sum()


def _conv1d_reflect(arr: np.ndarray, kernel: np.ndarray, axis: int) -> np.ndarray:
    radius = len(kernel) // 2
    pad = [(0, 0)] * arr.ndim
    pad[axis] = (radius, radius)
    padded = np.pad(arr, pad, mode="reflect")
    out = np.zeros_like(arr)
    for i, weight in enumerate(kernel):
        sl = [slice(None)] * arr.ndim
        sl[axis] = slice(i, i + arr.shape[axis])
        out += weight * padded[tuple(sl)]
    return out


def gaussian_filter(img: Raster, sigma: float, kernel_radius: int) -> Raster:
    """Separable Gaussian blur with reflect padding.

    The kernel is normalized to sum 1, so constant images are invariant.
    """
    if img.channels != 1:
        raise ShapeError("gaussian_filter expects a 1-channel raster")
    kernel = gaussian_kernel1d(sigma, kernel_radius)
    out = _conv1d_reflect(img.data, kernel, axis=0)
    out = _conv1d_reflect(out, kernel, axis=1)
    lo, hi = RANGE_BOUNDS[img.range_tag]
    return Raster(np.clip(out, lo, hi), img.range_tag)


def _windows(arr: np.ndarray, window: int) -> np.ndarray:
    """All window x window neighborhoods of arr, reflect-padded: (H, W, w*w)."""
    radius = window // 2
    padded = np.pad(arr, radius, mode="reflect")
    view = np.lib.stride_tricks.sliding_window_view(padded, (window, window))
    return view.reshape(arr.shape[0], arr.shape[1], window * window)


def median_filter(mask_like: Raster, window: int) -> Raster:
    """2D median filter; binary input yields binary output."""
    if window % 2 == 0 or window < 3:
        raise ParameterError(f"window must be odd and >= 3, got {window}")
    if mask_like.channels != 1:
        raise ShapeError("median_filter expects a 1-channel raster")
    out = np.median(_windows(mask_like.data, window), axis=2)
    return Raster(out, mask_like.range_tag)


def window_percentile_suppress(img: Raster, window: int, fraction: float) -> Raster:
    """Zero each pixel that sits at or below the `fraction`-quantile of its
    own window x window neighborhood (nearest-rank quantile, reflect padding).

    Deterministic per-pixel formulation of sliding-window bottom-fraction
    removal; never increases any value.
    """
    if not 0.0 < fraction < 1.0:
        raise ParameterError(f"fraction must be in (0, 1), got {fraction}")
    if window % 2 == 0 or window < 3:
        raise ParameterError(f"window must be odd and >= 3, got {window}")
    if img.channels != 1:
        raise ShapeError("window_percentile_suppress expects a 1-channel raster")
    neigh = _windows(img.data, window)
    n = window * window
    rank = max(1, math.ceil(fraction * n))  # nearest-rank: rank-th smallest
    quantile = np.partition(neigh, rank - 1, axis=2)[:, :, rank - 1]
    out = np.where(img.data <= quantile, 0.0, img.data)
    return Raster(out, img.range_tag)


# ---------------------------------------------------------------------------
# I/O
# ---------------------------------------------------------------------------


def read_png(path: str | Path, range_tag: str = "byte") -> Raster:
    """Read an 8-bit PNG as a Raster (grayscale stays 1-channel)."""
    with Image.open(path) as im:
        if im.mode in ("L", "I;16", "I"):
            arr = np.asarray(im.convert("L"), dtype=np.float64)
        else:
            arr = np.asarray(im.convert("RGB"), dtype=np.float64)
    byte = Raster(arr, "byte")
    if range_tag == "byte":
        return byte
    if range_tag == "unit":
        return Raster(byte.data / 255.0, "unit")
    raise ParameterError(f"cannot read PNG directly into range {range_tag!r}")


def write_png(raster: Raster, path: str | Path) -> None:
    """Write a Raster as an 8-bit PNG with explicit byte conversion."""
    byte = raster.to_byte()
    arr = byte.data.astype(np.uint8)
    mode = "L" if byte.channels == 1 else "RGB"
    Image.fromarray(arr, mode=mode).save(path, format="PNG")


def read_mask_png(path: str | Path) -> BinaryMask:
    arr = np.asarray(Image.open(path).convert("L"))
    return BinaryMask((arr > 0).astype(np.uint8))


def write_mask_png(mask: BinaryMask, path: str | Path) -> None:
    Image.fromarray(mask.data * np.uint8(255), mode="L").save(path, format="PNG")


def read_seg_png(path: str | Path) -> SegMask:
    arr = np.asarray(Image.open(path).convert("L"))
    return SegMask(arr)


def write_seg_png(seg: SegMask, path: str | Path) -> None:
    Image.fromarray(seg.labels, mode="L").save(path, format="PNG")


def save_raw(raster: Raster, path: str | Path) -> None:
    """Lossless float serialization for test fixtures."""
    np.save(path, raster.data)


def load_raw(path: str | Path, range_tag: str = "unit") -> Raster:
    return Raster(np.load(path), range_tag)
