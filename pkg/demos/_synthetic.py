"""Synthetic portrait generator shared by the demo scripts, so they run
without downloading any dataset."""

import numpy as np

from portraitgan.labels import CLASS_IDS
from portraitgan.raster import Raster, SegMask

OUT_NOTE = "outputs land in demos/out/"


def synthetic_portrait(resolution=64, seed=0):
    rng = np.random.default_rng(seed)
    h = w = resolution
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    labels = np.zeros((h, w), dtype=np.uint8)
    img = np.zeros((h, w, 3))

    ramp = np.linspace(50, 110, w)[None, :].repeat(h, 0)
    img[..., 0], img[..., 1], img[..., 2] = ramp * 0.8, ramp, ramp * 1.15

    cy, cx = h * 0.55, w * 0.5
    face = ((yy - cy) / (h * 0.29)) ** 2 + ((xx - cx) / (w * 0.22)) ** 2 <= 1
    hair = (((yy - h * 0.40) / (h * 0.35)) ** 2
            + ((xx - cx) / (w * 0.31)) ** 2 <= 1) & ~face
    img[hair] = np.array([96, 60, 34]) + rng.integers(-18, 19, 3)
    labels[hair] = CLASS_IDS["hair"]
    img[face] = np.array([224, 184, 152]) + rng.integers(-14, 15, 3)
    labels[face] = CLASS_IDS["skin"]

    def patch(cy_f, cx_f, ry_f, rx_f, color, name):
        region = (((yy - h * cy_f) / (h * ry_f)) ** 2
                  + ((xx - w * cx_f) / (w * rx_f)) ** 2 <= 1)
        img[region] = color
        labels[region] = CLASS_IDS[name]

    patch(0.50, 0.41, 0.035, 0.045, (58, 92, 130), "l_eye")
    patch(0.50, 0.59, 0.035, 0.045, (58, 92, 130), "r_eye")
    patch(0.60, 0.50, 0.05, 0.027, (200, 160, 130), "nose")
    patch(0.71, 0.50, 0.022, 0.065, (195, 75, 85), "u_lip")
    patch(0.75, 0.50, 0.022, 0.065, (168, 55, 66), "l_lip")

    glow = np.exp(-(((yy - h * 0.60) / (h * 0.05)) ** 2
                    + ((xx - w * 0.34) / (w * 0.05)) ** 2))
    img += 85.0 * glow[..., None]
    dark = np.exp(-(((yy - h * 0.60) / (h * 0.05)) ** 2
                    + ((xx - w * 0.67) / (w * 0.05)) ** 2))
    img -= 75.0 * dark[..., None]

    img += rng.normal(0.0, 3.0, img.shape)
    img = np.clip(np.floor(img + 0.5), 0, 255)
    return Raster(img, "byte"), SegMask(labels)
