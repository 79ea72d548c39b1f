"""Shared fixtures: synthetic portraits with segmentations, a small network
bundle, and dataset directory builders. Also prints one PASS/FAIL line per
acceptance criterion when the acceptance module runs."""

from __future__ import annotations

import numpy as np
import pytest
from PIL import Image

from portraitgan.conditioning import extract_conditions
from portraitgan.labels import CLASS_IDS
from portraitgan.networks import create_bundle
from portraitgan.raster import Raster, SegMask


def synthetic_portrait(resolution: int = 64, seed: int = 0):
    """A face-like test image with matching segmentation: background
    gradient, hair cap, skin ellipse, two eyes, nose, lips, plus one bright
    highlight and one dark patch so light/shadow masks are non-trivial."""
    rng = np.random.default_rng(seed)
    h = w = resolution
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    labels = np.zeros((h, w), dtype=np.uint8)
    img = np.zeros((h, w, 3))

    ramp = np.linspace(40, 95, w)[None, :].repeat(h, 0)
    img[..., 0], img[..., 1], img[..., 2] = ramp, ramp * 1.08, ramp * 1.25

    cy, cx = h * 0.54, w * 0.5
    face = ((yy - cy) / (h * 0.30)) ** 2 + ((xx - cx) / (w * 0.23)) ** 2 <= 1
    hair = (((yy - h * 0.40) / (h * 0.36)) ** 2
            + ((xx - cx) / (w * 0.32)) ** 2 <= 1) & ~face
    base_skin = np.array([221, 182, 150]) + rng.integers(-12, 13, 3)
    base_hair = np.array([104, 68, 39]) + rng.integers(-15, 16, 3)
    img[hair] = base_hair
    labels[hair] = CLASS_IDS["hair"]
    img[face] = base_skin
    labels[face] = CLASS_IDS["skin"]

    def patch(cy_f, cx_f, ry_f, rx_f, color, class_name):
        region = (((yy - h * cy_f) / (h * ry_f)) ** 2
                  + ((xx - w * cx_f) / (w * rx_f)) ** 2 <= 1)
        img[region] = color
        labels[region] = CLASS_IDS[class_name]

    patch(0.48, 0.40, 0.035, 0.045, (62, 88, 128), "l_eye")
    patch(0.48, 0.60, 0.035, 0.045, (62, 88, 128), "r_eye")
    patch(0.58, 0.50, 0.05, 0.028, (198, 158, 128), "nose")
    patch(0.70, 0.50, 0.022, 0.07, (192, 72, 82), "u_lip")
    patch(0.74, 0.50, 0.022, 0.07, (166, 52, 64), "l_lip")

    # highlight on the left cheek, dark patch on the right
    glow = np.exp(-(((yy - h * 0.58) / (h * 0.05)) ** 2
                    + ((xx - w * 0.33) / (w * 0.05)) ** 2))
    img += 90.0 * glow[..., None]
    dark = np.exp(-(((yy - h * 0.58) / (h * 0.05)) ** 2
                    + ((xx - w * 0.68) / (w * 0.05)) ** 2))
    img -= 80.0 * dark[..., None]

    img += rng.normal(0.0, 3.0, img.shape)
    img = np.clip(np.floor(img + 0.5), 0, 255)
    return Raster(img, "byte"), SegMask(labels)


def make_dataset_dir(root, count: int = 4, resolution: int = 64, seed: int = 0):
    """Write a CelebAMask-style dataset directory of synthetic portraits."""
    image_dir = root / "images"
    mask_dir = root / "masks"
    image_dir.mkdir(parents=True)
    mask_dir.mkdir(parents=True)
    names_by_id = {v: k for k, v in CLASS_IDS.items()}
    for i in range(count):
        image, seg = synthetic_portrait(resolution, seed + i)
        image_id = f"face{i:03d}"
        Image.fromarray(image.data.astype(np.uint8), "RGB").save(
            image_dir / f"{image_id}.png")
        for class_id in np.unique(seg.labels):
            if class_id == 0:
                continue
            mask = (seg.labels == class_id).astype(np.uint8) * 255
            Image.fromarray(mask, "L").save(
                mask_dir / f"{image_id}_{names_by_id[int(class_id)]}.png")
    return root


@pytest.fixture(scope="session")
def portrait64():
    return synthetic_portrait(64, 0)


@pytest.fixture(scope="session")
def cond64(portrait64):
    image, seg = portrait64
    return extract_conditions(image, seg)


@pytest.fixture(scope="session")
def small_bundle():
    return create_bundle(resolution=64, seed=11, base_width=8, disc_base_width=8)


def pytest_runtest_logreport(report):
    """One visible line per acceptance criterion."""
    if report.when != "call" or "test_acceptance" not in report.nodeid:
        return
    name = report.nodeid.rsplit("::", 1)[-1]
    verdict = "PASS" if report.passed else "FAIL"
    print(f"\n[ACCEPTANCE] {verdict} {name} ({report.duration:.1f}s)")
