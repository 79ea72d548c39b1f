"""Alternating adversarial optimization with deterministic seeding,
checkpointing, resume, and a per-run report directory.

Determinism contract: the per-epoch sample order derives from
(seed, epoch) and the noising draws from (seed, epoch, step), so a resumed
run replays the exact trajectory of an uninterrupted one.
"""

from __future__ import annotations

import csv
import json
import logging
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import torch
import yaml

from .conditioning import ConditionSet, rasterize_palette
from .errors import ConfigError, NumericError, ParameterError
from .losses import LossWeights, default_loss_weights, gan_loss_disc, total_generator_objective
from .networks import (
    NetBundle,
    assemble_disc_global_input,
    assemble_disc_local_input,
    assemble_generator_input,
    create_bundle,
    from_signed_chw,
    generator_forward,
    save_checkpoint,
    to_signed_chw,
)
from .noising import NoiseConfig, sample_noising
from .raster import Raster, write_png

log = logging.getLogger(__name__)

CONFIG_VERSION = 1
LOSS_KEYS = ("disc_global", "disc_local", "gen_gan", "gen_perceptual",
             "gen_feature_matching")


@dataclass(frozen=True)
class TrainConfig:
    """Desk-scale defaults; the full-scale schedule (60 epochs, batch 64,
    512px) remains reachable through the same fields."""

    epochs: int = 60
    batch_size: int = 8
    lr: float = 0.0002
    lr_constant_epochs: int = 30
    beta1: float = 0.5
    beta2: float = 0.999
    seed: int = 0
    resolution: int = 64
    base_width: int = 16
    disc_base_width: int = 16
    downsample_steps: int = 2
    residual_blocks: int = 9
    disc_layers: int = 4
    w_vgg: float = 10.0
    w_fm: float = 10.0
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    checkpoint_every: int = 500
    sample_every: int = 500

    def __post_init__(self):
        if self.epochs < 0 or self.batch_size < 1:
            raise ConfigError("epochs must be >= 0 and batch_size >= 1")
        if self.lr_constant_epochs > self.epochs:
            raise ConfigError(
                f"lr_constant_epochs {self.lr_constant_epochs} > epochs {self.epochs}"
            )

    def to_yaml(self, path: str | Path) -> None:
        payload = {"config_version": CONFIG_VERSION, **asdict(self)}
        payload["noise"] = asdict(self.noise)
        payload["noise"]["method_weights"] = list(self.noise.method_weights)
        Path(path).write_text(yaml.safe_dump(payload, sort_keys=False))

    @classmethod
    def from_yaml(cls, path: str | Path) -> "TrainConfig":
        raw = yaml.safe_load(Path(path).read_text()) or {}
        version = raw.pop("config_version", None)
        if version != CONFIG_VERSION:
            raise ConfigError(f"unsupported config_version {version!r}")
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "noise" in raw:
            noise_raw = dict(raw["noise"])
            unknown_noise = set(noise_raw) - set(NoiseConfig.__dataclass_fields__)
            if unknown_noise:
                raise ConfigError(f"unknown noise keys: {sorted(unknown_noise)}")
            if "method_weights" in noise_raw:
                noise_raw["method_weights"] = tuple(noise_raw["method_weights"])
            raw["noise"] = NoiseConfig(**noise_raw)
        return cls(**raw)


def lr_at(epoch: int, cfg: TrainConfig) -> float:
    """Constant lr for the first lr_constant_epochs, then a linear ramp to
    zero reached at the final epoch boundary."""
    if not 0 <= epoch < cfg.epochs:
        raise ParameterError(f"epoch {epoch} outside [0, {cfg.epochs})")
    if epoch < cfg.lr_constant_epochs:
        return cfg.lr
    span = cfg.epochs - cfg.lr_constant_epochs
    return cfg.lr * (cfg.epochs - epoch) / span


@dataclass
class TrainState:
    bundle: NetBundle
    opt_g: torch.optim.Optimizer
    opt_d: torch.optim.Optimizer
    cfg: TrainConfig
    weights: LossWeights
    epoch: int = 0
    step: int = 0
    step_in_epoch: int = 0
    history: list = field(default_factory=list)
    out_dir: Path | None = None


def _make_optimizers(bundle: NetBundle, cfg: TrainConfig):
    opt_g = torch.optim.Adam(
        bundle.generator.parameters(), lr=cfg.lr, betas=(cfg.beta1, cfg.beta2))
    disc_params = list(bundle.disc_global.parameters()) + list(
        bundle.disc_local.parameters())
    opt_d = torch.optim.Adam(disc_params, lr=cfg.lr, betas=(cfg.beta1, cfg.beta2))
    return opt_g, opt_d


def init_train_state(cfg: TrainConfig, out_dir: str | Path | None = None) -> TrainState:
    bundle = create_bundle(
        resolution=cfg.resolution,
        seed=cfg.seed,
        base_width=cfg.base_width,
        disc_base_width=cfg.disc_base_width,
        downsample_steps=cfg.downsample_steps,
        residual_blocks=cfg.residual_blocks,
        disc_layers=cfg.disc_layers,
    )
    opt_g, opt_d = _make_optimizers(bundle, cfg)
    weights = default_loss_weights(
        n_vgg_layers=bundle.feature_net.num_layers,
        n_fm_layers=cfg.disc_layers,
        w_vgg=cfg.w_vgg,
        w_fm=cfg.w_fm,
    )
    return TrainState(bundle=bundle, opt_g=opt_g, opt_d=opt_d, cfg=cfg,
                      weights=weights,
                      out_dir=Path(out_dir) if out_dir else None)


def _set_lr(state: TrainState, lr: float) -> None:
    for opt in (state.opt_g, state.opt_d):
        for group in opt.param_groups:
            group["lr"] = lr


def _noising_rng(cfg: TrainConfig, epoch: int, step: int) -> np.random.Generator:
    return np.random.default_rng([cfg.seed, 0, epoch, step])


def _order_rng(cfg: TrainConfig, epoch: int) -> np.random.Generator:
    return np.random.default_rng([cfg.seed, 1, epoch])


def train_step(state: TrainState, batch: list[tuple[ConditionSet, Raster]]):
    """One alternating update: noised generator pass, discriminator step on
    real/detached-fake, then a generator step on the full objective.

    Noising touches only the generator's edge channel; both discriminators
    always see the clean edge and color map.
    """
    bundle, cfg = state.bundle, state.cfg
    rng = _noising_rng(cfg, state.epoch, state.step)

    gen_in = np.stack([
        assemble_generator_input(cond, sample_noising(cond.edge, cfg.noise, rng))
        for cond, _ in batch
    ])
    gen_t = torch.from_numpy(gen_in)
    real_t = torch.stack([
        torch.from_numpy(to_signed_chw(image)) for _, image in batch
    ])

    try:
        fake = bundle.generator(gen_t)

        dg_real_in = torch.stack([
            assemble_disc_global_input(cond, real_t[i])
            for i, (cond, _) in enumerate(batch)
        ])
        dl_real_in = torch.stack([
            assemble_disc_local_input(cond, real_t[i])
            for i, (cond, _) in enumerate(batch)
        ])
        fake_detached = fake.detach()
        dg_fake_in = torch.stack([
            assemble_disc_global_input(cond, fake_detached[i])
            for i, (cond, _) in enumerate(batch)
        ])
        dl_fake_in = torch.stack([
            assemble_disc_local_input(cond, fake_detached[i])
            for i, (cond, _) in enumerate(batch)
        ])

        loss_dg = gan_loss_disc(bundle.disc_global(dg_real_in),
                                bundle.disc_global(dg_fake_in))
        loss_dl = gan_loss_disc(bundle.disc_local(dl_real_in),
                                bundle.disc_local(dl_fake_in))
        state.opt_d.zero_grad()
        (loss_dg + loss_dl).backward()
        state.opt_d.step()

        dg_fake_graph = torch.stack([
            assemble_disc_global_input(cond, fake[i])
            for i, (cond, _) in enumerate(batch)
        ])
        dl_fake_graph = torch.stack([
            assemble_disc_local_input(cond, fake[i])
            for i, (cond, _) in enumerate(batch)
        ])
        dg_fake_out = bundle.disc_global(dg_fake_graph)
        dl_fake_out = bundle.disc_local(dl_fake_graph)
        with torch.no_grad():
            dg_real_out = bundle.disc_global(dg_real_in)
        total, parts = total_generator_objective(
            dg_fake_out, dl_fake_out, dg_real_out,
            bundle.feature_net, real_t, fake, state.weights,
        )
        state.opt_g.zero_grad()
        total.backward()
        state.opt_g.step()
    except NumericError:
        if state.out_dir is not None:
            path = state.out_dir / "diagnostic_abort.pt"
            save_train_state(state, path)
            log.error("non-finite loss; diagnostic checkpoint at %s", path)
        raise

    record = {
        "epoch": state.epoch,
        "step": state.step,
        "disc_global": loss_dg.item(),
        "disc_local": loss_dl.item(),
        "gen_gan": parts["gen_gan"].item(),
        "gen_perceptual": parts["gen_perceptual"].item(),
        "gen_feature_matching": parts["gen_feature_matching"].item(),
    }
    state.history.append(record)
    state.step += 1
    state.step_in_epoch += 1
    bundle.step_count += 1
    return state, record


# ---------------------------------------------------------------------------
# Full training loop
# ---------------------------------------------------------------------------


def _config_signature(cfg: TrainConfig) -> str:
    return json.dumps(asdict(cfg), sort_keys=True)


def save_train_state(state: TrainState, path: str | Path) -> None:
    """Full resumable snapshot: networks, optimizers, counters, history."""
    bundle = state.bundle
    payload = {
        "format_version": CONFIG_VERSION,
        "config": _config_signature(state.cfg),
        "bundle_seed": bundle.seed,
        "step_count": bundle.step_count,
        "state": {
            "generator": bundle.generator.state_dict(),
            "disc_global": bundle.disc_global.state_dict(),
            "disc_local": bundle.disc_local.state_dict(),
            "feature_net": bundle.feature_net.state_dict(),
            "opt_g": state.opt_g.state_dict(),
            "opt_d": state.opt_d.state_dict(),
        },
        "counters": {
            "epoch": state.epoch,
            "step": state.step,
            "step_in_epoch": state.step_in_epoch,
        },
        "history": state.history,
        "torch_rng": torch.get_rng_state(),
    }
    torch.save(payload, path)


def load_train_state(path: str | Path, cfg: TrainConfig,
                     out_dir: str | Path | None = None) -> TrainState:
    payload = torch.load(path, map_location="cpu", weights_only=False)
    if payload.get("format_version") != CONFIG_VERSION:
        raise ConfigError("unsupported train-state version")
    if payload["config"] != _config_signature(cfg):
        raise ConfigError("resume config differs from the saved run config")
    state = init_train_state(cfg, out_dir)
    nets = payload["state"]
    state.bundle.generator.load_state_dict(nets["generator"])
    state.bundle.disc_global.load_state_dict(nets["disc_global"])
    state.bundle.disc_local.load_state_dict(nets["disc_local"])
    state.bundle.feature_net.load_state_dict(nets["feature_net"])
    state.opt_g.load_state_dict(nets["opt_g"])
    state.opt_d.load_state_dict(nets["opt_d"])
    state.bundle.step_count = payload["step_count"]
    counters = payload["counters"]
    state.epoch = counters["epoch"]
    state.step = counters["step"]
    state.step_in_epoch = counters["step_in_epoch"]
    state.history = list(payload["history"])
    torch.set_rng_state(payload["torch_rng"])
    return state


def _to_display(arr_or_raster) -> np.ndarray:
    if isinstance(arr_or_raster, Raster):
        byte = arr_or_raster.to_byte().data
    else:
        byte = arr_or_raster
    if byte.ndim == 2:
        byte = np.repeat(byte[:, :, None], 3, axis=2)
    return byte


def sample_grid(bundle: NetBundle, samples, limit: int = 4) -> Raster:
    """One row per sample: original, edge, palette raster, color map,
    light, shadow, reconstruction."""
    rows = []
    for cond, image in samples[:limit]:
        recon = from_signed_chw(
            generator_forward(bundle, assemble_generator_input(cond, cond.edge)))
        tiles = [
            _to_display(image),
            _to_display(cond.edge.to_byte().data),
            _to_display(rasterize_palette(cond.palette, cond.height, cond.width)),
            _to_display(cond.color_map),
            _to_display(cond.light.data * 255.0),
            _to_display(cond.shadow.data * 255.0),
            _to_display(recon),
        ]
        rows.append(np.concatenate(tiles, axis=1))
    return Raster(np.concatenate(rows, axis=0), "byte")


def _write_history_csv(history: list[dict], path: Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=["epoch", "step", *LOSS_KEYS])
        writer.writeheader()
        for record in history:
            writer.writerow(record)


def _write_epoch_curves(history: list[dict], path: Path) -> None:
    by_epoch: dict[int, list[dict]] = {}
    for record in history:
        by_epoch.setdefault(record["epoch"], []).append(record)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", *LOSS_KEYS])
        for epoch in sorted(by_epoch):
            records = by_epoch[epoch]
            writer.writerow([
                epoch,
                *(float(np.mean([r[k] for r in records])) for k in LOSS_KEYS),
            ])


def train(
    samples: list[tuple[ConditionSet, Raster]],
    cfg: TrainConfig,
    out_dir: str | Path,
    resume_from: str | Path | None = None,
    max_steps: int | None = None,
) -> TrainState:
    """Train on prepared (conditions, image) pairs, writing checkpoints and
    a report directory (loss CSVs plus periodic sample grids)."""
    if not samples:
        raise ConfigError("training requires a non-empty sample list")
    for cond, image in samples:
        if (cond.height, cond.width) != (cfg.resolution, cfg.resolution):
            raise ConfigError(
                f"sample dims {cond.height}x{cond.width} != resolution {cfg.resolution}"
            )
        if (image.height, image.width) != (cfg.resolution, cfg.resolution):
            raise ConfigError("image dims do not match configured resolution")

    out_dir = Path(out_dir)
    ckpt_dir = out_dir / "checkpoints"
    report_dir = out_dir / "report"
    samples_dir = report_dir / "samples"
    for d in (ckpt_dir, report_dir, samples_dir):
        d.mkdir(parents=True, exist_ok=True)

    if resume_from is not None:
        state = load_train_state(resume_from, cfg, out_dir)
    else:
        state = init_train_state(cfg, out_dir)
    started = time.time()

    n = len(samples)
    done = False
    while state.epoch < cfg.epochs and not done:
        _set_lr(state, lr_at(state.epoch, cfg))
        order = _order_rng(cfg, state.epoch).permutation(n)
        batches = [order[i:i + cfg.batch_size] for i in range(0, n, cfg.batch_size)]
        for batch_idx in range(state.step_in_epoch, len(batches)):
            batch = [samples[i] for i in batches[batch_idx]]
            state, record = train_step(state, batch)
            if state.step % cfg.checkpoint_every == 0:
                save_train_state(state, ckpt_dir / f"step_{state.step:06d}.pt")
            if state.step % cfg.sample_every == 0:
                grid = sample_grid(state.bundle, samples)
                write_png(grid, samples_dir / f"step_{state.step:06d}.png")
            if max_steps is not None and state.step >= max_steps:
                done = True
                break
        if not done:
            state.epoch += 1
            state.step_in_epoch = 0

    save_train_state(state, ckpt_dir / "final_state.pt")
    save_checkpoint(state.bundle, ckpt_dir / "final.pt")
    _write_history_csv(state.history, report_dir / "loss_log.csv")
    _write_epoch_curves(state.history, report_dir / "loss_curves.csv")
    if samples:
        grid = sample_grid(state.bundle, samples)
        write_png(grid, samples_dir / "final.png")
    report = {
        "config": asdict(state.cfg),
        "elapsed_seconds": time.time() - started,
        "steps": state.step,
        "epochs_completed": state.epoch,
        "final_losses": state.history[-1] if state.history else None,
    }
    (report_dir / "training_report.json").write_text(json.dumps(report, indent=2))
    return state
