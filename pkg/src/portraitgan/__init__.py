"""Fine-grained portrait editing with an asymmetric conditional GAN.

The generator is conditioned on directly editable inputs (noisy edge maps,
color palettes, light/shadow masks) while both discriminators receive the
informative forms (clean edges, positional color maps), which is what makes
palette-level color control and sketch-robust geometry editing work from a
single model.
"""

from .conditioning import (
    ConditionSet,
    Palette,
    PaletteRow,
    extract_color_map,
    extract_conditions,
    extract_distribution_palette,
    extract_light_mask,
    extract_palette,
    extract_shadow_mask,
    load_condition_set,
    postprocess_edges,
    rasterize_palette,
    region_masks,
    save_condition_set,
)
from .dataset import DatasetRecord, SplitSpec, load_dataset, make_split
from .editing import EditScript, apply_edit_script, batch_edit, generate, mask_boolean
from .evaluation import (
    AblationReport,
    EvalItem,
    avg_color_distance,
    color_hist_kl,
    run_color_ablation,
    run_edge_robustness_ablation,
    seg_f1,
    ssim,
)
from .losses import LossWeights, default_loss_weights
from .networks import (
    DiscriminatorSpec,
    GeneratorSpec,
    NetBundle,
    create_bundle,
    load_checkpoint,
    save_checkpoint,
)
from .noising import NoiseConfig, sample_noising
from .raster import BinaryMask, Raster, SegMask
from .training import TrainConfig, TrainState, lr_at, train, train_step

__version__ = "0.1.0"

__all__ = [
    "AblationReport",
    "BinaryMask",
    "ConditionSet",
    "DatasetRecord",
    "DiscriminatorSpec",
    "EditScript",
    "EvalItem",
    "GeneratorSpec",
    "LossWeights",
    "NetBundle",
    "NoiseConfig",
    "Palette",
    "PaletteRow",
    "Raster",
    "SegMask",
    "SplitSpec",
    "TrainConfig",
    "TrainState",
    "apply_edit_script",
    "avg_color_distance",
    "batch_edit",
    "color_hist_kl",
    "create_bundle",
    "default_loss_weights",
    "extract_color_map",
    "extract_conditions",
    "extract_distribution_palette",
    "extract_light_mask",
    "extract_palette",
    "extract_shadow_mask",
    "generate",
    "load_checkpoint",
    "load_condition_set",
    "load_dataset",
    "lr_at",
    "make_split",
    "mask_boolean",
    "postprocess_edges",
    "rasterize_palette",
    "region_masks",
    "run_color_ablation",
    "run_edge_robustness_ablation",
    "sample_noising",
    "save_checkpoint",
    "save_condition_set",
    "seg_f1",
    "ssim",
    "train",
    "train_step",
]
