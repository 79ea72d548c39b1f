"""Training-time edge-map corruption: random removal, random shift, random
lines, plus the identity branch, selected uniformly by default.

Every function is pure given an explicit RNG; workers should each own a
seeded ``numpy.random.Generator`` (or pass a seed) so draws never race.
Draw order per call is fixed: rectangle dims, rectangle position, then
(for shift/lines) the destination position.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .raster import Raster

METHOD_NAMES = ("removal", "shift", "lines", "identity")


@dataclass(frozen=True)
class NoiseConfig:
    """Corruption parameters: ``alpha`` caps rectangle dims at a fraction of
    the image; ``method_weights`` orders (removal, shift, lines, identity)."""

    alpha: float = 0.33
    seed: int = 0
    method_weights: tuple[float, float, float, float] = (0.25, 0.25, 0.25, 0.25)

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ParameterError(f"alpha must be in (0, 1), got {self.alpha}")
        weights = tuple(float(w) for w in self.method_weights)
        if len(weights) != 4 or any(w < 0 for w in weights):
            raise ParameterError("method_weights must be 4 non-negative reals")
        if abs(sum(weights) - 1.0) > 1e-9:
            raise ParameterError(f"method_weights sum to {sum(weights)}, expected 1")
        object.__setattr__(self, "method_weights", weights)


def as_rng(rng_state) -> np.random.Generator:
    if isinstance(rng_state, np.random.Generator):
        return rng_state
    return np.random.default_rng(rng_state)


def sample_rectangle(
    height: int, width: int, alpha: float, rng: np.random.Generator
) -> tuple[int, int, int, int]:
    """(top, left, h, w) with h in (0, alpha*height), w in (0, alpha*width),
    position uniform over placements fully inside the image.

    The open interval is realized as integer draws from [1, ceil(a*n) - 1]
    (clamped to at least 1 for degenerate sizes).
    """
    max_h = max(1, math.ceil(alpha * height) - 1)
    max_w = max(1, math.ceil(alpha * width) - 1)
    rect_h = int(rng.integers(1, max_h + 1))
    rect_w = int(rng.integers(1, max_w + 1))
    top = int(rng.integers(0, height - rect_h + 1))
    left = int(rng.integers(0, width - rect_w + 1))
    return top, left, rect_h, rect_w


def _check_edge(edge: Raster) -> None:
    if edge.channels != 1 or edge.range_tag != "unit":
        raise ParameterError("edge map must be 1-channel unit range")


def noise_random_removal(edge: Raster, cfg: NoiseConfig, rng_state) -> Raster:
    """Clear one random rectangle."""
    _check_edge(edge)
    rng = as_rng(rng_state)
    top, left, h, w = sample_rectangle(edge.height, edge.width, cfg.alpha, rng)
    out = edge.data.copy()
    out[top:top + h, left:left + w] = 0.0
    return Raster(out, "unit")


def _sample_destination(
    height: int, width: int, rect_h: int, rect_w: int, rng: np.random.Generator
) -> tuple[int, int]:
    top = int(rng.integers(0, height - rect_h + 1))
    left = int(rng.integers(0, width - rect_w + 1))
    return top, left


def noise_random_shift(edge: Raster, cfg: NoiseConfig, rng_state) -> Raster:
    """Move the contents of one random rectangle to a random destination.

    The copy is buffered before the source is cleared, so overlapping
    source/destination rectangles behave as copy-then-clear-then-paste.
    """
    _check_edge(edge)
    rng = as_rng(rng_state)
    top, left, h, w = sample_rectangle(edge.height, edge.width, cfg.alpha, rng)
    dst_top, dst_left = _sample_destination(edge.height, edge.width, h, w, rng)
    out = edge.data.copy()
    buf = out[top:top + h, left:left + w].copy()
    out[top:top + h, left:left + w] = 0.0
    out[dst_top:dst_top + h, dst_left:dst_left + w] = buf
    return Raster(out, "unit")


def noise_random_lines(edge: Raster, cfg: NoiseConfig, rng_state) -> Raster:
    """Copy one random rectangle onto a random destination, keeping what is
    already there (pointwise max); the source is left intact."""
    _check_edge(edge)
    rng = as_rng(rng_state)
    top, left, h, w = sample_rectangle(edge.height, edge.width, cfg.alpha, rng)
    dst_top, dst_left = _sample_destination(edge.height, edge.width, h, w, rng)
    out = edge.data.copy()
    buf = out[top:top + h, left:left + w].copy()
    dst = out[dst_top:dst_top + h, dst_left:dst_left + w]
    out[dst_top:dst_top + h, dst_left:dst_left + w] = np.maximum(dst, buf)
    return Raster(out, "unit")


_METHODS = {
    "removal": noise_random_removal,
    "shift": noise_random_shift,
    "lines": noise_random_lines,
}


def choose_method(cfg: NoiseConfig, rng_state) -> str:
    rng = as_rng(rng_state)
    idx = rng.choice(len(METHOD_NAMES), p=cfg.method_weights)
    return METHOD_NAMES[idx]


def sample_noising(edge: Raster, cfg: NoiseConfig, rng_state) -> Raster:
    """Apply one corruption chosen per ``method_weights`` (identity included)."""
    rng = as_rng(rng_state)
    method = choose_method(cfg, rng)
    if method == "identity":
        return Raster(edge.data.copy(), "unit")
    return _METHODS[method](edge, cfg, rng)


def apply_named_noising(edge: Raster, method: str, cfg: NoiseConfig, rng_state) -> Raster:
    """Apply a specific regime by name; used by the robustness ablation."""
    if method == "identity":
        return Raster(edge.data.copy(), "unit")
    if method not in _METHODS:
        raise ParameterError(f"unknown noising method {method!r}")
    return _METHODS[method](edge, cfg, as_rng(rng_state))
