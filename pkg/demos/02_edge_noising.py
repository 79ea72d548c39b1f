"""The three training-time edge corruptions (plus identity) side by side,
and a quick look at how often each branch fires under uniform selection."""

from collections import Counter
from pathlib import Path

import numpy as np

from _synthetic import synthetic_portrait
from portraitgan.conditioning import default_edge_probability, postprocess_edges
from portraitgan.noising import NoiseConfig, apply_named_noising, choose_method
from portraitgan.raster import write_png

out_dir = Path(__file__).parent / "out" / "02_noising"
out_dir.mkdir(parents=True, exist_ok=True)

image, _ = synthetic_portrait(128, seed=3)
edge = postprocess_edges(default_edge_probability(image))
cfg = NoiseConfig(alpha=0.33)

for index, method in enumerate(("identity", "removal", "shift", "lines")):
    rng = np.random.default_rng([134, index])
    noisy = apply_named_noising(edge, method, cfg, rng)
    write_png(noisy, out_dir / f"{index}_{method}.png")
    changed = int((noisy.data != edge.data).sum())
    print(f"{method:>9}: {changed:5d} pixels changed")

rng = np.random.default_rng(99)
counts = Counter(choose_method(cfg, rng) for _ in range(10_000))
print("selection frequencies over 10k draws:", dict(counts))
print(f"wrote previews to {out_dir}")
