"""Run both ablation harnesses on a small test set with freshly
initialized desk-scale models, printing the shaped reports (the published
full-scale numbers ride along as labeled footnotes, never as assertions)."""

from pathlib import Path

from _synthetic import synthetic_portrait
from portraitgan.conditioning import extract_conditions
from portraitgan.evaluation import (
    EvalItem,
    run_color_ablation,
    run_edge_robustness_ablation,
)
from portraitgan.networks import create_bundle

out_dir = Path(__file__).parent / "out" / "06_ablations"

items = []
for i in range(4):
    image, seg = synthetic_portrait(64, seed=60 + i)
    items.append(EvalItem(f"item{i}", extract_conditions(image, seg), image, seg))

models = {
    "O-Edge": create_bundle(resolution=64, seed=1, base_width=8, disc_base_width=8),
    "C-GAN": create_bundle(resolution=64, seed=2, base_width=8, disc_base_width=8),
    "AC-GAN": create_bundle(resolution=64, seed=3, base_width=8, disc_base_width=8),
}

report = run_edge_robustness_ablation(models, items, rng_seed=5)
report.merge(run_color_ablation(
    ("C-GAN", models["C-GAN"]), ("AC-GAN", models["AC-GAN"]), items, rng_seed=5))
report.write(out_dir)
print(report.to_text())
print(f"report files in {out_dir}")
