"""Facial-attribute class tables and the configurable groupings built on them.

The 19-class vocabulary follows the CelebAMask-HQ annotation layout
(background = 0). Every grouping here is configuration, not behavior:
callers may pass their own ``LabelConfig`` (or load one from YAML) to any
function that consumes segmentation masks.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .errors import ConfigError

CLASS_NAMES = (
    "background",  # 0
    "skin",        # 1
    "nose",        # 2
    "eye_g",       # 3
    "l_eye",       # 4
    "r_eye",       # 5
    "l_brow",      # 6
    "r_brow",      # 7
    "l_ear",       # 8
    "r_ear",       # 9
    "mouth",       # 10
    "u_lip",       # 11
    "l_lip",       # 12
    "hair",        # 13
    "hat",         # 14
    "ear_r",       # 15
    "neck_l",      # 16
    "neck",        # 17
    "cloth",       # 18
)

CLASS_IDS = {name: i for i, name in enumerate(CLASS_NAMES)}

# Overlap resolution when merging per-class mask files: later entries win,
# so finer parts are listed last and are never swallowed by large regions.
DEFAULT_MERGE_PRIORITY = (
    "background", "cloth", "neck", "neck_l", "hair", "hat", "skin",
    "l_ear", "r_ear", "ear_r", "eye_g", "nose",
    "mouth", "u_lip", "l_lip", "l_brow", "r_brow", "l_eye", "r_eye",
)

# The five palette rows, in fixed top-to-bottom order.
PALETTE_ROW_NAMES = ("hair", "skin", "eyes", "lip", "background")

DEFAULT_PALETTE_COMPONENTS = {
    "hair": ("hair",),
    "skin": ("skin",),
    "eyes": ("l_eye", "r_eye"),
    "lip": ("u_lip", "l_lip"),
    "background": ("background",),
}

# Coarse segments used for the positional color map (one mean color each).
# Accessories and clothing fall back to the background segment.
DEFAULT_COLOR_MAP_SEGMENTS = {
    "hair": ("hair",),
    "face_skin": ("skin", "l_ear", "r_ear"),
    "eyebrows": ("l_brow", "r_brow"),
    "eyes": ("l_eye", "r_eye", "eye_g"),
    "nose": ("nose",),
    "mouth": ("mouth", "u_lip", "l_lip"),
    "neck": ("neck", "neck_l"),
    "background": ("background", "hat", "ear_r", "cloth"),
}

# Region masks fed to the locally-weighted discriminator.
DEFAULT_FACE_REGION = ("skin", "nose", "l_brow", "r_brow", "mouth", "u_lip", "l_lip")
DEFAULT_EYE_REGION = ("l_eye", "r_eye")


def _ids(names) -> tuple[int, ...]:
    try:
        return tuple(CLASS_IDS[n] for n in names)
    except KeyError as exc:
        raise ConfigError(f"unknown class name {exc.args[0]!r}") from None


@dataclass(frozen=True)
class LabelConfig:
    """All segmentation-derived groupings, overridable as one unit."""

    merge_priority: tuple[str, ...] = DEFAULT_MERGE_PRIORITY
    palette_components: dict = field(
        default_factory=lambda: dict(DEFAULT_PALETTE_COMPONENTS)
    )
    color_map_segments: dict = field(
        default_factory=lambda: dict(DEFAULT_COLOR_MAP_SEGMENTS)
    )
    face_region: tuple[str, ...] = DEFAULT_FACE_REGION
    eye_region: tuple[str, ...] = DEFAULT_EYE_REGION

    def __post_init__(self):
        if sorted(self.merge_priority) != sorted(CLASS_NAMES):
            raise ConfigError("merge_priority must list every class exactly once")
        if tuple(self.palette_components) != PALETTE_ROW_NAMES:
            raise ConfigError(f"palette_components must have rows {PALETTE_ROW_NAMES}")
        covered = sorted(n for names in self.color_map_segments.values() for n in names)
        if covered != sorted(CLASS_NAMES):
            raise ConfigError("color_map_segments must cover every class exactly once")
        for names in self.palette_components.values():
            _ids(names)
        _ids(self.face_region)
        _ids(self.eye_region)

    def palette_ids(self, row: str) -> tuple[int, ...]:
        return _ids(self.palette_components[row])

    def color_map_ids(self) -> dict[str, tuple[int, ...]]:
        return {seg: _ids(names) for seg, names in self.color_map_segments.items()}

    def face_ids(self) -> tuple[int, ...]:
        return _ids(self.face_region)

    def eye_ids(self) -> tuple[int, ...]:
        return _ids(self.eye_region)

    @classmethod
    def from_yaml(cls, path: str | Path) -> "LabelConfig":
        with open(path) as fh:
            raw = yaml.safe_load(fh) or {}
        known = {
            "merge_priority", "palette_components", "color_map_segments",
            "face_region", "eye_region",
        }
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown label config keys: {sorted(unknown)}")
        kwargs = {}
        for key in known & set(raw):
            value = raw[key]
            if key in ("merge_priority", "face_region", "eye_region"):
                kwargs[key] = tuple(value)
            else:
                kwargs[key] = {k: tuple(v) for k, v in value.items()}
        return cls(**kwargs)


DEFAULT_LABELS = LabelConfig()
