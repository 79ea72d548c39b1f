"""Inference-time editing: palette edits, slider blends, stripe patterns,
boolean mask edits, edge patches, reference color transfer, and batched
generation. Edit operations are pure; scripts serialize to JSON for the
CLI and the HTTP service.
"""

from __future__ import annotations

import base64
import io
import json
from dataclasses import dataclass, replace

import numpy as np
from PIL import Image

from .conditioning import (
    ConditionSet,
    Palette,
    PaletteRow,
    extract_distribution_palette,
    quantize_unit,
    solid_row,
)
from .errors import ParameterError, ShapeError
from .labels import PALETTE_ROW_NAMES
from .networks import NetBundle, assemble_generator_input, from_signed_chw, generator_forward
from .raster import BinaryMask, Raster, SegMask

RGB = tuple[int, int, int]

BOOL_OPS = ("AND", "OR", "ANDNOT")
MASK_TARGETS = ("light", "shadow")


def _check_row(row: str) -> None:
    if row not in PALETTE_ROW_NAMES:
        raise ParameterError(f"unknown palette row {row!r}")


def set_row_color(palette: Palette, row: str, color: RGB) -> Palette:
    """Replace one row with a single full-width color."""
    _check_row(row)
    return palette.with_row(solid_row(row, color))


def slider_blend(
    palette: Palette,
    row: str,
    color_a: RGB,
    color_b: RGB,
    ratio: float,
    orientation: str = "horizontal",
) -> Palette:
    """Two-color blend; ``ratio`` is the fraction of the band given to the
    second color (ratio 1 means fully color_b). Vertical sliders place
    color_a on top."""
    _check_row(row)
    if not 0.0 <= ratio <= 1.0:
        raise ParameterError(f"ratio must be in [0, 1], got {ratio}")
    if orientation not in ("horizontal", "vertical"):
        raise ParameterError(f"slider orientation must be horizontal or vertical")
    if ratio == 0.0:
        return set_row_color(palette, row, color_a)
    if ratio == 1.0:
        return set_row_color(palette, row, color_b)
    entries = (
        (tuple(int(c) for c in color_a), 1.0 - ratio),
        (tuple(int(c) for c in color_b), ratio),
    )
    return palette.with_row(PaletteRow(row, entries, orientation))


def stripe_pattern(palette: Palette, row: str, colors: list[RGB]) -> Palette:
    """Equal-weight colors cycled one pixel column at a time when rasterized."""
    _check_row(row)
    if not colors:
        raise ParameterError("stripe_pattern needs at least one color")
    if len(colors) == 1:
        return set_row_color(palette, row, colors[0])
    fraction = 1.0 / len(colors)
    entries = tuple((tuple(int(c) for c in color), fraction) for color in colors)
    return palette.with_row(PaletteRow(row, entries, "stripes"))


def set_distribution_row(palette: Palette, row: str, colors: list[RGB]) -> Palette:
    """Replace a row with an explicit list of equal-width sampled colors."""
    _check_row(row)
    if not colors:
        raise ParameterError("set_distribution_row needs at least one color")
    fraction = 1.0 / len(colors)
    entries = tuple((tuple(int(c) for c in color), fraction) for color in colors)
    return palette.with_row(PaletteRow(row, entries))


def mask_boolean(base: BinaryMask, brush: BinaryMask, op: str) -> BinaryMask:
    """Pointwise AND / OR / ANDNOT of two masks."""
    if op not in BOOL_OPS:
        raise ParameterError(f"op must be one of {BOOL_OPS}, got {op!r}")
    if base.data.shape != brush.data.shape:
        raise ShapeError(
            f"mask dims differ: {base.data.shape} vs {brush.data.shape}")
    a, b = base.data.astype(bool), brush.data.astype(bool)
    if op == "AND":
        out = a & b
    elif op == "OR":
        out = a | b
    else:
        out = a & ~b
    return BinaryMask(out.astype(np.uint8))


def replace_edge_region(edge: Raster, patch: Raster, top: int, left: int) -> Raster:
    """Paste a replacement edge patch at (top, left); raster-level only."""
    if patch.channels != 1 or edge.channels != 1:
        raise ShapeError("edge and patch must be 1-channel")
    if top < 0 or left < 0 or top + patch.height > edge.height \
            or left + patch.width > edge.width:
        raise ParameterError("patch does not fit inside the edge map")
    out = edge.data.copy()
    out[top:top + patch.height, left:left + patch.width] = patch.to_unit().data
    return Raster(quantize_unit(out), "unit")


def apply_color_transfer(
    target_cond: ConditionSet,
    reference: tuple[Raster, SegMask],
    strip_width: int,
) -> ConditionSet:
    """Swap in the reference's distribution palette; every other condition
    channel is untouched, so colors can only move between matching
    components."""
    ref_image, ref_seg = reference
    palette = extract_distribution_palette(ref_image, ref_seg, strip_width)
    return target_cond.with_palette(palette)


# ---------------------------------------------------------------------------
# Edit scripts
# ---------------------------------------------------------------------------


def encode_mask_png(mask: BinaryMask) -> str:
    buf = io.BytesIO()
    Image.fromarray(mask.data * np.uint8(255), mode="L").save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


def decode_mask_png(payload: str) -> BinaryMask:
    raw = base64.b64decode(payload)
    arr = np.asarray(Image.open(io.BytesIO(raw)).convert("L"))
    return BinaryMask((arr > 0).astype(np.uint8))


def encode_gray_png(raster: Raster) -> str:
    buf = io.BytesIO()
    byte = raster.to_byte().data.astype(np.uint8)
    Image.fromarray(byte, mode="L").save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


def decode_gray_png(payload: str) -> Raster:
    raw = base64.b64decode(payload)
    arr = np.asarray(Image.open(io.BytesIO(raw)).convert("L"), dtype=np.float64)
    return Raster(arr / 255.0, "unit")


def _validate_color(value) -> RGB:
    color = tuple(int(c) for c in value)
    if len(color) != 3 or any(c < 0 or c > 255 for c in color):
        raise ParameterError(f"bad RGB triple {value!r}")
    return color


def _validate_op(op: dict) -> dict:
    if not isinstance(op, dict) or "op" not in op:
        raise ParameterError(f"each edit op must be an object with an 'op' key")
    kind = op["op"]
    if kind == "set_row_color":
        _check_row(op["row"])
        _validate_color(op["color"])
    elif kind == "slider_blend":
        _check_row(op["row"])
        _validate_color(op["color_a"])
        _validate_color(op["color_b"])
        if not 0.0 <= float(op["ratio"]) <= 1.0:
            raise ParameterError(f"ratio out of range: {op['ratio']}")
        if op.get("orientation", "horizontal") not in ("horizontal", "vertical"):
            raise ParameterError(f"bad orientation {op.get('orientation')!r}")
    elif kind == "stripe_pattern":
        _check_row(op["row"])
        if not op.get("colors"):
            raise ParameterError("stripe_pattern needs colors")
        for c in op["colors"]:
            _validate_color(c)
    elif kind == "set_distribution_row":
        _check_row(op["row"])
        if not op.get("colors"):
            raise ParameterError("set_distribution_row needs colors")
        for c in op["colors"]:
            _validate_color(c)
    elif kind == "mask_boolean":
        if op.get("target") not in MASK_TARGETS:
            raise ParameterError(f"mask target must be one of {MASK_TARGETS}")
        if op.get("bool_op") not in BOOL_OPS:
            raise ParameterError(f"bool_op must be one of {BOOL_OPS}")
        if "brush_png" not in op:
            raise ParameterError("mask_boolean needs a brush_png payload")
    elif kind == "replace_edge_region":
        if "patch_png" not in op:
            raise ParameterError("replace_edge_region needs a patch_png payload")
        if int(op.get("top", -1)) < 0 or int(op.get("left", -1)) < 0:
            raise ParameterError("replace_edge_region needs top/left >= 0")
    else:
        raise ParameterError(f"unknown edit op {kind!r}")
    return op


@dataclass(frozen=True)
class EditScript:
    """Ordered list of JSON-serializable edit operations."""

    ops: tuple[dict, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "ops", tuple(_validate_op(dict(o)) for o in self.ops))

    def to_json(self) -> str:
        return json.dumps({"ops": list(self.ops)})

    @classmethod
    def from_json(cls, payload: str) -> "EditScript":
        obj = json.loads(payload)
        if not isinstance(obj, dict) or "ops" not in obj:
            raise ParameterError("edit script must be an object with an 'ops' list")
        return cls(tuple(obj["ops"]))


def apply_edit_script(cond: ConditionSet, script: EditScript) -> ConditionSet:
    """Apply every op in order, returning a new ConditionSet."""
    out = cond
    for op in script.ops:
        kind = op["op"]
        if kind == "set_row_color":
            out = out.with_palette(set_row_color(out.palette, op["row"], op["color"]))
        elif kind == "slider_blend":
            out = out.with_palette(slider_blend(
                out.palette, op["row"], op["color_a"], op["color_b"],
                float(op["ratio"]), op.get("orientation", "horizontal")))
        elif kind == "stripe_pattern":
            out = out.with_palette(stripe_pattern(out.palette, op["row"], op["colors"]))
        elif kind == "set_distribution_row":
            out = out.with_palette(set_distribution_row(
                out.palette, op["row"], op["colors"]))
        elif kind == "mask_boolean":
            brush = decode_mask_png(op["brush_png"])
            target = op["target"]
            base = getattr(out, target)
            out = replace(out, **{target: mask_boolean(base, brush, op["bool_op"])})
        elif kind == "replace_edge_region":
            patch = decode_gray_png(op["patch_png"])
            out = out.with_edge(replace_edge_region(
                out.edge, patch, int(op["top"]), int(op["left"])))
    return out


# ---------------------------------------------------------------------------
# Generation
# ---------------------------------------------------------------------------


def generate(bundle: NetBundle, cond: ConditionSet) -> Raster:
    """Deterministic feed-forward synthesis from clean conditions (noising
    is a training-only transform and is never applied here)."""
    if (cond.height, cond.width) != (bundle.gen_spec.resolution,
                                     bundle.gen_spec.resolution):
        raise ShapeError(
            f"conditions are {cond.height}x{cond.width} but the model expects "
            f"{bundle.gen_spec.resolution}x{bundle.gen_spec.resolution}"
        )
    signed = generator_forward(bundle, assemble_generator_input(cond, cond.edge))
    return from_signed_chw(signed)


@dataclass(frozen=True)
class BatchItemResult:
    index: int
    image: Raster | None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


def batch_edit(bundle: NetBundle, conds, script: EditScript) -> list[BatchItemResult]:
    """Apply one script to every ConditionSet and generate; per-item errors
    are reported in place and the batch continues."""
    results = []
    for index, cond in enumerate(conds):
        try:
            edited = apply_edit_script(cond, script)
            results.append(BatchItemResult(index, generate(bundle, edited)))
        except Exception as exc:  # per-item isolation is the contract
            results.append(BatchItemResult(index, None, f"{type(exc).__name__}: {exc}"))
    return results
