"""Palette editing gallery: solid row recolors, horizontal/vertical color
sliders at several ratios, and the stripe pattern, each rendered as the
raster the generator actually sees."""

from pathlib import Path

import numpy as np

from _synthetic import synthetic_portrait
from portraitgan.conditioning import extract_palette, rasterize_palette
from portraitgan.editing import set_row_color, slider_blend, stripe_pattern
from portraitgan.raster import write_png

out_dir = Path(__file__).parent / "out" / "03_palette"
out_dir.mkdir(parents=True, exist_ok=True)

image, seg = synthetic_portrait(128, seed=5)
palette = extract_palette(image, seg)

BROWN, BLONDE = (101, 67, 33), (222, 184, 135)

write_png(rasterize_palette(palette, 128, 128), out_dir / "original.png")
write_png(rasterize_palette(set_row_color(palette, "lip", (200, 30, 60)), 128, 128),
          out_dir / "lip_recolor.png")

for pct in (0, 25, 50, 75, 100):
    blended = slider_blend(palette, "hair", BROWN, BLONDE, pct / 100.0)
    write_png(rasterize_palette(blended, 128, 128),
              out_dir / f"slider_h_{pct:03d}.png")

vertical = slider_blend(palette, "eyes", (40, 80, 140), (150, 90, 40), 0.25,
                        "vertical")
write_png(rasterize_palette(vertical, 128, 128), out_dir / "slider_v_25.png")

stripes = stripe_pattern(palette, "hair", [BROWN, BLONDE])
write_png(rasterize_palette(stripes, 128, 128), out_dir / "stripes.png")

# stripes and a 50% slider place the same number of pixels per color
band_stripes = rasterize_palette(stripes, 128, 128).data[:25]
band_slider = rasterize_palette(
    slider_blend(palette, "hair", BROWN, BLONDE, 0.5), 128, 128).data[:25]
for color, label in ((BROWN, "brown"), (BLONDE, "blonde")):
    in_stripes = int((band_stripes == color).all(axis=2).sum())
    in_slider = int((band_slider == color).all(axis=2).sum())
    print(f"{label:>6}: {in_stripes} px striped vs {in_slider} px slider")
print(f"wrote gallery to {out_dir}")
