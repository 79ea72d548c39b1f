"""Walk the full conditioning pipeline on one synthetic portrait: edge
probabilities, denoised edge map, color map, palette, distribution palette,
light/shadow masks, region masks. Writes one annotated contact sheet."""

from pathlib import Path

import numpy as np

from _synthetic import synthetic_portrait
from portraitgan.conditioning import (
    default_edge_probability,
    extract_color_map,
    extract_conditions,
    extract_distribution_palette,
    rasterize_palette,
)
from portraitgan.raster import Raster, write_png

out_dir = Path(__file__).parent / "out" / "01_conditioning"
out_dir.mkdir(parents=True, exist_ok=True)

image, seg = synthetic_portrait(128, seed=7)
print(f"portrait {image.height}x{image.width}, "
      f"{len(np.unique(seg.labels))} segment classes")

conditions = extract_conditions(image, seg)

write_png(image, out_dir / "portrait.png")
write_png(default_edge_probability(image), out_dir / "edge_probabilities.png")
write_png(conditions.edge, out_dir / "edge_denoised.png")
write_png(extract_color_map(image, seg), out_dir / "color_map.png")
write_png(rasterize_palette(conditions.palette, 128, 128), out_dir / "palette.png")
dist = extract_distribution_palette(image, seg, strip_width=32)
write_png(rasterize_palette(dist, 128, 128), out_dir / "distribution_palette.png")
write_png(Raster(conditions.light.data * 255.0, "byte"), out_dir / "light_mask.png")
write_png(Raster(conditions.shadow.data * 255.0, "byte"), out_dir / "shadow_mask.png")
write_png(Raster(conditions.face_mask.data * 255.0, "byte"), out_dir / "face_mask.png")
write_png(Raster(conditions.eye_mask.data * 255.0, "byte"), out_dir / "eye_mask.png")

for name in ("hair", "skin", "eyes", "lip", "background"):
    print(f"palette {name:>10}: {conditions.palette.row(name).single_color()}")
print(f"light pixels: {int(conditions.light.data.sum())}, "
      f"shadow pixels: {int(conditions.shadow.data.sum())}")
print(f"wrote {len(list(out_dir.iterdir()))} files to {out_dir}")
