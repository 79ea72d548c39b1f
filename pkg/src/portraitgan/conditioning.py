"""Conditional-input extraction: edge postprocessing, color maps, palettes,
light/shadow masks, region masks and palette rasterization.

Everything here is a pure function; the outputs of ``extract_conditions``
land on the 8-bit grid so that PNG persistence round-trips exactly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import ContractError, ParameterError, ShapeError
from .labels import DEFAULT_LABELS, PALETTE_ROW_NAMES, LabelConfig
from .raster import (
    BinaryMask,
    Raster,
    SegMask,
    gaussian_filter,
    median_filter,
    read_mask_png,
    read_png,
    window_percentile_suppress,
    write_mask_png,
    write_png,
)

RGB = tuple[int, int, int]
BLACK: RGB = (0, 0, 0)

ROW_ORIENTATIONS = ("horizontal", "vertical", "stripes")


@dataclass(frozen=True)
class PaletteRow:
    """One palette strip: an ordered list of (color, width fraction) entries.

    ``orientation`` controls how the strip is rasterized into its band:
    ``horizontal`` and ``vertical`` partition the band into contiguous
    blocks; ``stripes`` cycles the entry colors one pixel column at a time.
    """

    name: str
    entries: tuple[tuple[RGB, float], ...]
    orientation: str = "horizontal"

    def __post_init__(self):
        if not self.entries:
            raise ContractError(f"palette row {self.name!r} has no entries")
        if self.orientation not in ROW_ORIENTATIONS:
            raise ParameterError(f"unknown orientation {self.orientation!r}")
        entries = []
        total = 0.0
        for color, fraction in self.entries:
            color = tuple(int(c) for c in color)
            if len(color) != 3 or any(c < 0 or c > 255 for c in color):
                raise ParameterError(f"bad RGB triple {color}")
            if fraction <= 0:
                raise ParameterError(f"entry fraction must be positive, got {fraction}")
            entries.append((color, float(fraction)))
            total += float(fraction)
        if abs(total - 1.0) > 1e-9:
            raise ContractError(
                f"row {self.name!r} fractions sum to {total!r}, expected 1"
            )
        object.__setattr__(self, "entries", tuple(entries))

    @property
    def is_single_color(self) -> bool:
        return len(self.entries) == 1

    def single_color(self) -> RGB:
        if not self.is_single_color:
            raise ContractError(f"row {self.name!r} holds {len(self.entries)} entries")
        return self.entries[0][0]


def solid_row(name: str, color: RGB) -> PaletteRow:
    return PaletteRow(name, (((int(color[0]), int(color[1]), int(color[2])), 1.0),))


@dataclass(frozen=True)
class Palette:
    """Fixed-order five-row color specification: hair, skin, eyes, lip, background."""

    rows: tuple[PaletteRow, ...]

    def __post_init__(self):
        names = tuple(r.name for r in self.rows)
        if names != PALETTE_ROW_NAMES:
            raise ContractError(f"palette rows must be {PALETTE_ROW_NAMES}, got {names}")

    def row(self, name: str) -> PaletteRow:
        for r in self.rows:
            if r.name == name:
                return r
        raise ParameterError(f"unknown palette row {name!r}")

    def with_row(self, row: PaletteRow) -> "Palette":
        if row.name not in PALETTE_ROW_NAMES:
            raise ParameterError(f"unknown palette row {row.name!r}")
        return Palette(tuple(row if r.name == row.name else r for r in self.rows))

    def to_json_obj(self) -> dict:
        return {
            "rows": [
                {
                    "name": r.name,
                    "orientation": r.orientation,
                    "entries": [
                        {"rgb": list(color), "fraction": fraction}
                        for color, fraction in r.entries
                    ],
                }
                for r in self.rows
            ]
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "Palette":
        rows = tuple(
            PaletteRow(
                r["name"],
                tuple((tuple(e["rgb"]), e["fraction"]) for e in r["entries"]),
                r.get("orientation", "horizontal"),
            )
            for r in obj["rows"]
        )
        return cls(rows)


def black_palette() -> Palette:
    return Palette(tuple(solid_row(name, BLACK) for name in PALETTE_ROW_NAMES))


@dataclass(frozen=True)
class ConditionSet:
    """The full bundle of conditional inputs attached to one portrait."""

    edge: Raster          # 1-channel, unit range
    palette: Palette
    color_map: Raster     # 3-channel, byte range
    light: BinaryMask
    shadow: BinaryMask
    face_mask: BinaryMask
    eye_mask: BinaryMask

    def __post_init__(self):
        dims = (self.edge.height, self.edge.width)
        if self.edge.channels != 1 or self.edge.range_tag != "unit":
            raise ShapeError("edge must be a 1-channel unit-range raster")
        if self.color_map.channels != 3 or self.color_map.range_tag != "byte":
            raise ShapeError("color_map must be a 3-channel byte-range raster")
        for name in ("color_map", "light", "shadow", "face_mask", "eye_mask"):
            member = getattr(self, name)
            if (member.height, member.width) != dims:
                raise ShapeError(f"{name} dims {member.height}x{member.width} != edge dims {dims[0]}x{dims[1]}")

    @property
    def height(self) -> int:
        return self.edge.height

    @property
    def width(self) -> int:
        return self.edge.width

    def with_palette(self, palette: Palette) -> "ConditionSet":
        return replace(self, palette=palette)

    def with_edge(self, edge: Raster) -> "ConditionSet":
        return replace(self, edge=edge)


# ---------------------------------------------------------------------------
# Edge maps
# ---------------------------------------------------------------------------


def quantize_unit(arr: np.ndarray) -> np.ndarray:
    """Snap unit-range values to the 8-bit grid (k/255)."""
    return np.floor(np.clip(arr, 0.0, 1.0) * 255.0 + 0.5) / 255.0


def postprocess_edges(
    prob_map: Raster,
    beta: float = 0.35,
    sigma: float = 1.0,
    kernel_radius: int = 2,
) -> Raster:
    """Denoise an edge-probability map.

    Blur, zero everything below the ``beta`` threshold, drop the bottom 20%
    of each 5x5 neighborhood, blur again. The result is snapped to the
    8-bit grid so persisted edge maps reload exactly.
    """
    if not 0.0 <= beta <= 1.0:
        raise ParameterError(f"beta must be in [0, 1], got {beta}")
    if prob_map.range_tag != "unit" or prob_map.channels != 1:
        raise ShapeError("edge probability map must be 1-channel unit range")
    out = gaussian_filter(prob_map, sigma, kernel_radius)
    out = Raster(np.where(out.data < beta, 0.0, out.data), "unit")
    out = window_percentile_suppress(out, window=5, fraction=0.20)
    out = gaussian_filter(out, sigma, kernel_radius)
    return Raster(quantize_unit(out.data), "unit")


def default_edge_probability(image: Raster) -> Raster:
    """Gradient-magnitude edge probabilities (built-in pluggable source).

    Sobel magnitude of the luminance, normalized by its maximum. Any
    external detector producing a unit-range probability map can be used
    instead.
    """
    lum = _luminance(image)
    padded = np.pad(lum, 1, mode="reflect")
    gx = (
        (padded[:-2, 2:] + 2 * padded[1:-1, 2:] + padded[2:, 2:])
        - (padded[:-2, :-2] + 2 * padded[1:-1, :-2] + padded[2:, :-2])
    )
    gy = (
        (padded[2:, :-2] + 2 * padded[2:, 1:-1] + padded[2:, 2:])
        - (padded[:-2, :-2] + 2 * padded[:-2, 1:-1] + padded[:-2, 2:])
    )
    mag = np.hypot(gx, gy)
    peak = mag.max()
    if peak > 0:
        mag = mag / peak
    return Raster(mag, "unit")


# ---------------------------------------------------------------------------
# Color maps and palettes
# ---------------------------------------------------------------------------


def _byte_image(image: Raster) -> np.ndarray:
    if image.channels != 3:
        raise ShapeError("expected a 3-channel image")
    return image.to_byte().data


def _luminance(image: Raster) -> np.ndarray:
    """Mean-of-channels luminance in unit range."""
    unit = image.to_unit().data
    if unit.ndim == 2:
        return unit
    return unit.mean(axis=2)


def _check_dims(image: Raster, seg: SegMask) -> None:
    if (image.height, image.width) != (seg.height, seg.width):
        raise ShapeError(
            f"image {image.height}x{image.width} and segmentation "
            f"{seg.height}x{seg.width} dims differ"
        )


def _round_half_up(values: np.ndarray) -> np.ndarray:
    return np.floor(values + 0.5)


def _mean_color(pixels: np.ndarray) -> RGB:
    """Round-half-up mean of an (N, 3) byte pixel block."""
    mean = _round_half_up(pixels.mean(axis=0))
    return tuple(int(c) for c in mean)


def extract_color_map(
    image: Raster, seg: SegMask, labels: LabelConfig = DEFAULT_LABELS
) -> Raster:
    """Fill each coarse facial segment with its mean RGB (byte range)."""
    _check_dims(image, seg)
    data = _byte_image(image)
    out = np.zeros_like(data)
    for ids in labels.color_map_ids().values():
        mask = np.isin(seg.labels, ids)
        if mask.any():
            out[mask] = _mean_color(data[mask])
    return Raster(out, "byte")


def extract_palette(
    image: Raster, seg: SegMask, labels: LabelConfig = DEFAULT_LABELS
) -> Palette:
    """Average color of hair, skin, eyes, lip and background, one row each.

    Components absent from the segmentation default to black.
    """
    _check_dims(image, seg)
    data = _byte_image(image)
    rows = []
    for name in PALETTE_ROW_NAMES:
        mask = np.isin(seg.labels, labels.palette_ids(name))
        color = _mean_color(data[mask]) if mask.any() else BLACK
        rows.append(solid_row(name, color))
    return Palette(tuple(rows))


def _sorted_component_pixels(data: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Component pixels sorted by luminance, ties broken by (R, G, B)."""
    pixels = data[mask]
    lum = pixels.sum(axis=1) / 3.0
    order = np.lexsort((pixels[:, 2], pixels[:, 1], pixels[:, 0], lum))
    return pixels[order]


def _uniform_rank_indices(n: int, k: int) -> np.ndarray:
    """k nearest-rank sample positions spread uniformly over n sorted items."""
    if k == 1:
        return np.array([(n - 1) // 2])
    steps = np.arange(k, dtype=np.float64) * (n - 1) / (k - 1)
    return np.floor(steps + 0.5).astype(int)


def extract_distribution_palette(
    image: Raster,
    seg: SegMask,
    strip_width: int,
    labels: LabelConfig = DEFAULT_LABELS,
) -> Palette:
    """Palette whose rows sample the sorted color distribution of each
    component at uniform rank positions, one equal-width entry per sample.
    """
    if strip_width < 1:
        raise ParameterError(f"strip_width must be >= 1, got {strip_width}")
    _check_dims(image, seg)
    data = _byte_image(image)
    fraction = 1.0 / strip_width
    rows = []
    for name in PALETTE_ROW_NAMES:
        mask = np.isin(seg.labels, labels.palette_ids(name))
        if mask.any():
            pixels = _sorted_component_pixels(data, mask)
            idx = _uniform_rank_indices(len(pixels), strip_width)
            entries = tuple(
                (tuple(int(c) for c in pixels[i]), fraction) for i in idx
            )
        else:
            entries = tuple((BLACK, fraction) for _ in range(strip_width))
        rows.append(PaletteRow(name, entries))
    return Palette(tuple(rows))


# ---------------------------------------------------------------------------
# Light and shadow masks
# ---------------------------------------------------------------------------


def light_component(image: Raster) -> Raster:
    """Normalized light strength: how much brighter each pixel is than the
    local diffuse estimate (Gaussian blur at sigma = width / 16).

    A flat component normalizes to all zeros.
    """
    lum = Raster(_luminance(image), "unit")
    sigma = max(image.width / 16.0, 1e-6)
    radius = max(1, math.ceil(3.0 * sigma))
    diffuse = gaussian_filter(lum, sigma, radius)
    light = np.maximum(0.0, lum.data - diffuse.data)
    lo, hi = light.min(), light.max()
    if hi - lo <= 0:
        return Raster(np.zeros_like(light), "unit")
    return Raster((light - lo) / (hi - lo), "unit")


def binarize(raster: Raster, threshold: float) -> BinaryMask:
    """1 where value >= threshold, else 0."""
    return BinaryMask((raster.data >= threshold).astype(np.uint8))


def _mask_pipeline(image: Raster, threshold: float) -> BinaryMask:
    component = light_component(image)
    mask = binarize(component, threshold)
    smoothed = median_filter(Raster(mask.data.astype(np.float64), "unit"), 7)
    return BinaryMask(smoothed.data.astype(np.uint8))


def extract_light_mask(image: Raster, threshold: float = 0.15) -> BinaryMask:
    """Binary highlight mask: normalize the light component, threshold at
    0.15, clean up with a 7x7 median filter."""
    if image.range_tag not in ("unit", "byte"):
        raise ParameterError("image must be unit or byte range")
    return _mask_pipeline(image, threshold)


def invert_image(image: Raster) -> Raster:
    lo, hi = 0.0, 1.0 if image.range_tag == "unit" else 255.0
    if image.range_tag == "signed":
        raise ParameterError("cannot invert a signed-range image")
    return Raster(hi - image.data, image.range_tag)


def extract_shadow_mask(image: Raster, threshold: float = 0.15) -> BinaryMask:
    """Shadow mask: the light pipeline applied to the inverted image."""
    if image.range_tag not in ("unit", "byte"):
        raise ParameterError("image must be unit or byte range")
    return _mask_pipeline(invert_image(image), threshold)


def region_masks(
    seg: SegMask, labels: LabelConfig = DEFAULT_LABELS
) -> tuple[BinaryMask, BinaryMask]:
    """(face_mask, eye_mask) unions per the label config tables."""
    face = np.isin(seg.labels, labels.face_ids()).astype(np.uint8)
    eyes = np.isin(seg.labels, labels.eye_ids()).astype(np.uint8)
    return BinaryMask(face), BinaryMask(eyes)


# ---------------------------------------------------------------------------
# Palette rasterization
# ---------------------------------------------------------------------------


def _band_bounds(height: int) -> list[tuple[int, int]]:
    """Five top-to-bottom bands; remainder rows go to the last band."""
    band = height // 5
    if band < 1:
        raise ParameterError(f"height {height} too small for 5 palette bands")
    bounds = [(i * band, (i + 1) * band) for i in range(4)]
    bounds.append((4 * band, height))
    return bounds


def _partition(extent: int, fractions: list[float]) -> list[tuple[int, int]]:
    cuts = [0]
    cum = 0.0
    for fraction in fractions:
        cum += fraction
        cuts.append(int(_round_half_up(np.float64(cum * extent))))
    cuts[-1] = extent
    return [(cuts[i], cuts[i + 1]) for i in range(len(fractions))]


def rasterize_palette(palette: Palette, height: int, width: int) -> Raster:
    """Render a palette as a 3-channel byte raster of five stacked bands.

    Within its band a row is laid out left-to-right (horizontal), top-to-
    bottom (vertical, first entry on top), or as 1-pixel columns cycling
    the entry colors (stripes).
    """
    out = np.zeros((height, width, 3), dtype=np.float64)
    for (top, bottom), row in zip(_band_bounds(height), palette.rows):
        band_h = bottom - top
        colors = [np.array(color, dtype=np.float64) for color, _ in row.entries]
        fractions = [fraction for _, fraction in row.entries]
        if row.orientation == "horizontal":
            for (lo, hi), color in zip(_partition(width, fractions), colors):
                out[top:bottom, lo:hi] = color
        elif row.orientation == "vertical":
            for (lo, hi), color in zip(_partition(band_h, fractions), colors):
                out[top + lo:top + hi, :] = color
        else:  # stripes: cycle colors one pixel column at a time
            for col in range(width):
                out[top:bottom, col] = colors[col % len(colors)]
    return Raster(out, "byte")


# ---------------------------------------------------------------------------
# Full extraction and persistence
# ---------------------------------------------------------------------------


def extract_conditions(
    image: Raster,
    seg: SegMask,
    edge_prob: Raster | None = None,
    beta: float = 0.35,
    light_threshold: float = 0.15,
    labels: LabelConfig = DEFAULT_LABELS,
) -> ConditionSet:
    """Run the whole conditioning pipeline for one portrait.

    ``edge_prob`` is an externally produced edge-probability map; when
    omitted the built-in gradient detector supplies one.
    """
    _check_dims(image, seg)
    if edge_prob is None:
        edge_prob = default_edge_probability(image)
    face, eyes = region_masks(seg, labels)
    return ConditionSet(
        edge=postprocess_edges(edge_prob, beta=beta),
        palette=extract_palette(image, seg, labels),
        color_map=extract_color_map(image, seg, labels),
        light=extract_light_mask(image, light_threshold),
        shadow=extract_shadow_mask(image, light_threshold),
        face_mask=face,
        eye_mask=eyes,
    )


CONDITION_CHANNELS = ("edge", "color_map", "light", "shadow", "face_mask", "eye_mask")
_FORMAT_VERSION = 1


def save_condition_set(cond: ConditionSet, out_dir: str | Path) -> Path:
    """Persist as one PNG per channel plus a JSON sidecar."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_png(cond.edge, out_dir / "edge.png")
    write_png(cond.color_map, out_dir / "color_map.png")
    for name in ("light", "shadow", "face_mask", "eye_mask"):
        write_mask_png(getattr(cond, name), out_dir / f"{name}.png")
    sidecar = {
        "version": _FORMAT_VERSION,
        "channels": list(CONDITION_CHANNELS),
        "palette": cond.palette.to_json_obj(),
    }
    (out_dir / "conditions.json").write_text(json.dumps(sidecar, indent=2))
    return out_dir


def load_condition_set(in_dir: str | Path) -> ConditionSet:
    in_dir = Path(in_dir)
    sidecar = json.loads((in_dir / "conditions.json").read_text())
    if sidecar.get("version") != _FORMAT_VERSION:
        raise ContractError(f"unsupported conditions format {sidecar.get('version')!r}")
    return ConditionSet(
        edge=read_png(in_dir / "edge.png", "unit"),
        palette=Palette.from_json_obj(sidecar["palette"]),
        color_map=read_png(in_dir / "color_map.png", "byte"),
        light=read_mask_png(in_dir / "light.png"),
        shadow=read_mask_png(in_dir / "shadow.png"),
        face_mask=read_mask_png(in_dir / "face_mask.png"),
        eye_mask=read_mask_png(in_dir / "eye_mask.png"),
    )
