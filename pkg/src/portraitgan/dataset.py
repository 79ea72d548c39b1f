"""Dataset ingestion: portrait images plus per-class segmentation mask files,
deterministic splits, and precomputed-condition persistence.

Expected layout (CelebAMask-HQ style, documented in the README):

    root/
      images/<image_id>.png          (or .jpg)
      masks/<image_id>_<class>.png   one binary file per annotated class

Per-class masks are merged into a single label map using a fixed priority
order so small components are never swallowed by large ones.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import IngestionError, ParameterError, SplitError
from .labels import CLASS_IDS, DEFAULT_LABELS, LabelConfig
from .raster import Raster, SegMask

log = logging.getLogger(__name__)

IMAGE_EXTENSIONS = (".png", ".jpg", ".jpeg")


@dataclass
class DatasetRecord:
    image_id: str
    image: Raster        # 3-channel, byte range
    seg: SegMask
    conditions_path: Path | None = None


@dataclass(frozen=True)
class SplitSpec:
    train_ids: tuple[str, ...]
    test_ids: tuple[str, ...]
    seed: int
    target_resolution: int

    def __post_init__(self):
        overlap = set(self.train_ids) & set(self.test_ids)
        if overlap:
            raise SplitError(f"train/test overlap: {sorted(overlap)[:5]}")


def resize_image(image: Raster, resolution: int) -> Raster:
    """Bilinear resample to resolution x resolution (byte range)."""
    arr = image.to_byte().data.astype(np.uint8)
    mode = "L" if image.channels == 1 else "RGB"
    resized = Image.fromarray(arr, mode=mode).resize(
        (resolution, resolution), Image.BILINEAR
    )
    return Raster(np.asarray(resized, dtype=np.float64), "byte")


def resize_seg(seg: SegMask, resolution: int) -> SegMask:
    labels = Image.fromarray(seg.labels, mode="L").resize(
        (resolution, resolution), Image.NEAREST
    )
    return SegMask(np.asarray(labels))


def merge_class_masks(
    class_masks: dict[str, np.ndarray],
    height: int,
    width: int,
    labels: LabelConfig = DEFAULT_LABELS,
) -> SegMask:
    """Merge per-class binary masks into one label map.

    Classes later in the priority order overwrite earlier ones where masks
    overlap; uncovered pixels stay background.
    """
    merged = np.zeros((height, width), dtype=np.uint8)
    for name in labels.merge_priority:
        mask = class_masks.get(name)
        if mask is not None:
            merged[mask > 0] = CLASS_IDS[name]
    return SegMask(merged)


def _read_image_file(path: Path) -> Raster:
    try:
        with Image.open(path) as im:
            arr = np.asarray(im.convert("RGB"), dtype=np.float64)
    except Exception as exc:
        raise IngestionError(f"cannot read image {path}: {exc}") from exc
    return Raster(arr, "byte")


def _read_mask_file(path: Path) -> np.ndarray:
    try:
        with Image.open(path) as im:
            return (np.asarray(im.convert("L")) > 0).astype(np.uint8)
    except Exception as exc:
        raise IngestionError(f"cannot read mask {path}: {exc}") from exc


def _index_masks(mask_dir: Path) -> dict[str, dict[str, Path]]:
    """image_id -> {class_name: path}, parsed from <id>_<class>.png names."""
    by_image: dict[str, dict[str, Path]] = {}
    if not mask_dir.is_dir():
        return by_image
    for path in sorted(mask_dir.iterdir()):
        if path.suffix.lower() != ".png":
            continue
        stem = path.stem
        for name in CLASS_IDS:
            if stem.endswith("_" + name):
                image_id = stem[: -(len(name) + 1)]
                by_image.setdefault(image_id, {})[name] = path
                break
        else:
            log.warning("mask file %s does not end in a known class name", path.name)
    return by_image


def load_dataset(
    root_path: str | Path,
    resolution: int,
    labels: LabelConfig = DEFAULT_LABELS,
) -> list[DatasetRecord]:
    """Load every image under root/images with its merged segmentation.

    Records are returned sorted by image_id. Mask sets without a matching
    image are skipped with a warning; images without masks get an
    all-background segmentation.
    """
    root = Path(root_path)
    image_dir = root / "images"
    if not image_dir.is_dir():
        raise IngestionError(f"missing image directory {image_dir}")
    mask_index = _index_masks(root / "masks")

    image_paths: dict[str, Path] = {}
    for path in sorted(image_dir.iterdir()):
        if path.suffix.lower() in IMAGE_EXTENSIONS:
            image_paths[path.stem] = path

    for orphan in sorted(set(mask_index) - set(image_paths)):
        log.warning("skipping mask set %r: no matching image", orphan)

    records = []
    for image_id in sorted(image_paths):
        image = resize_image(_read_image_file(image_paths[image_id]), resolution)
        class_masks = {
            name: np.asarray(
                Image.fromarray(_read_mask_file(path) * np.uint8(255), mode="L").resize(
                    (resolution, resolution), Image.NEAREST
                )
            )
            for name, path in mask_index.get(image_id, {}).items()
        }
        seg = merge_class_masks(class_masks, resolution, resolution, labels)
        records.append(DatasetRecord(image_id=image_id, image=image, seg=seg))
    return records


def make_split(ids: list[str], train_fraction: float, seed: int,
               target_resolution: int = 64) -> SplitSpec:
    """Deterministic disjoint, exhaustive train/test split."""
    if not 0.0 < train_fraction < 1.0:
        raise ParameterError(f"train_fraction must be in (0, 1), got {train_fraction}")
    if len(ids) < 2:
        raise SplitError(f"need at least 2 ids to split, got {len(ids)}")
    rng = np.random.default_rng(seed)
    order = [ids[i] for i in rng.permutation(len(ids))]
    n_train = int(np.floor(train_fraction * len(ids) + 0.5))
    n_train = min(max(n_train, 1), len(ids) - 1)
    return SplitSpec(
        train_ids=tuple(order[:n_train]),
        test_ids=tuple(order[n_train:]),
        seed=seed,
        target_resolution=target_resolution,
    )
