"""Network definitions and the asymmetric input assembly.

The generator consumes editable conditions (noisy edge map, palette raster,
light/shadow masks); both discriminators consume the informative forms
(clean edge map, positional color map) alongside the portrait. All rasters
are mapped [0, 1] -> [-1, 1] at assembly; masked portrait copies are
multiplied after the mapping so masked-out pixels are exactly zero.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
import torch
import torch.nn as nn

from .conditioning import ConditionSet, rasterize_palette
from .errors import ParameterError, ShapeError
from .raster import Raster

DEFAULT_FEATURE_CHANNELS = (16, 32, 64, 128, 128)
DEFAULT_FEATURE_SEED = 1234
CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class GeneratorSpec:
    input_channels: int = 6
    output_channels: int = 3
    base_width: int = 16
    downsample_steps: int = 2
    residual_blocks: int = 9
    norm: str = "instance"
    resolution: int = 64

    def __post_init__(self):
        if self.norm != "instance":
            raise ParameterError(f"unsupported norm {self.norm!r}")
        if self.resolution % (2 ** self.downsample_steps) != 0:
            raise ParameterError(
                f"resolution {self.resolution} not divisible by "
                f"2^{self.downsample_steps}"
            )


@dataclass(frozen=True)
class DiscriminatorSpec:
    input_channels: int
    layers: int = 4
    base_width: int = 16
    scales: int = 2

    def __post_init__(self):
        if self.scales != 2:
            raise ParameterError("multi-scale discriminators use exactly 2 scales")

    @property
    def min_resolution(self) -> int:
        # Full and 2x-pooled paths both need >= 2 px entering the logit head.
        return 2 ** (self.layers + 2)


def _conv(in_ch, out_ch, kernel, stride=1):
    return nn.Conv2d(
        in_ch, out_ch, kernel, stride=stride, padding=kernel // 2,
        padding_mode="reflect",
    )


class ResidualBlock(nn.Module):
    def __init__(self, channels: int):
        super().__init__()
        self.body = nn.Sequential(
            _conv(channels, channels, 3),
            nn.InstanceNorm2d(channels),
            nn.ReLU(inplace=True),
            _conv(channels, channels, 3),
            nn.InstanceNorm2d(channels),
        )

    def forward(self, x):
        return x + self.body(x)


class Generator(nn.Module):
    """Convolutional front-end, residual trunk, transposed-conv back-end."""

    def __init__(self, spec: GeneratorSpec):
        super().__init__()
        self.spec = spec
        layers = [
            _conv(spec.input_channels, spec.base_width, 7),
            nn.InstanceNorm2d(spec.base_width),
            nn.ReLU(inplace=True),
        ]
        ch = spec.base_width
        for _ in range(spec.downsample_steps):
            layers += [
                nn.Conv2d(ch, ch * 2, 3, stride=2, padding=1),
                nn.InstanceNorm2d(ch * 2),
                nn.ReLU(inplace=True),
            ]
            ch *= 2
        layers += [ResidualBlock(ch) for _ in range(spec.residual_blocks)]
        for _ in range(spec.downsample_steps):
            layers += [
                nn.ConvTranspose2d(ch, ch // 2, 3, stride=2, padding=1,
                                   output_padding=1),
                nn.InstanceNorm2d(ch // 2),
                nn.ReLU(inplace=True),
            ]
            ch //= 2
        layers += [_conv(ch, spec.output_channels, 7), nn.Tanh()]
        self.body = nn.Sequential(*layers)

    def forward(self, x):
        return self.body(x)


class PatchDiscriminator(nn.Module):
    """Stride-2 conv stack emitting patch logits and per-layer features."""

    def __init__(self, in_channels: int, base_width: int, layers: int):
        super().__init__()
        blocks = [nn.Sequential(
            nn.Conv2d(in_channels, base_width, 4, stride=2, padding=1,
                      padding_mode="reflect"),
            nn.LeakyReLU(0.2, inplace=True),
        )]
        ch = base_width
        for _ in range(layers - 1):
            blocks.append(nn.Sequential(
                nn.Conv2d(ch, ch * 2, 4, stride=2, padding=1,
                          padding_mode="reflect"),
                nn.InstanceNorm2d(ch * 2),
                nn.LeakyReLU(0.2, inplace=True),
            ))
            ch *= 2
        self.blocks = nn.ModuleList(blocks)
        self.head = _conv(ch, 1, 3)

    def forward(self, x):
        features = []
        for block in self.blocks:
            x = block(x)
            features.append(x)
        return self.head(x), features


class MultiScaleDiscriminator(nn.Module):
    """Two independent patch discriminators; the second sees the input after
    a 2x average pooling. Their parameters are never shared. ``kind`` tags
    outputs so feature-consuming losses can verify their source."""

    def __init__(self, spec: DiscriminatorSpec, kind: str = "global"):
        super().__init__()
        self.spec = spec
        self.kind = kind
        self.full = PatchDiscriminator(spec.input_channels, spec.base_width, spec.layers)
        self.down = PatchDiscriminator(spec.input_channels, spec.base_width, spec.layers)
        self.pool = nn.AvgPool2d(3, stride=2, padding=1, count_include_pad=False)

    def forward(self, x):
        if x.shape[-3] != self.spec.input_channels:
            raise ShapeError(
                f"expected {self.spec.input_channels} input channels, got {x.shape[-3]}"
            )
        if min(x.shape[-2:]) < self.spec.min_resolution:
            raise ShapeError(
                f"input {tuple(x.shape[-2:])} below minimum resolution "
                f"{self.spec.min_resolution}"
            )
        return {"full": self.full(x), "down": self.down(self.pool(x)),
                "kind": self.kind}


class FeatureNet(nn.Module):
    """Frozen fixed-seed conv stack standing in for a pretrained feature
    extractor; returns one feature map per stage."""

    def __init__(self, channels=DEFAULT_FEATURE_CHANNELS, seed=DEFAULT_FEATURE_SEED,
                 resolution: int = 64):
        super().__init__()
        # Stop adding pooled stages once spatial extent would drop below 4.
        n_stages = min(len(channels), max(1, int(math.log2(resolution)) - 1))
        self.channels = tuple(channels[:n_stages])
        self.seed = seed
        self.resolution = resolution
        generator_state = torch.get_rng_state()
        torch.manual_seed(seed)
        stages = []
        in_ch = 3
        for ch in self.channels:
            stages.append(nn.Sequential(
                _conv(in_ch, ch, 3), nn.ReLU(inplace=True),
                _conv(ch, ch, 3), nn.ReLU(inplace=True),
            ))
            in_ch = ch
        self.stages = nn.ModuleList(stages)
        self.pool = nn.AvgPool2d(2)
        torch.set_rng_state(generator_state)
        for p in self.parameters():
            p.requires_grad_(False)
        self.eval()

    def forward(self, x):
        features = []
        for i, stage in enumerate(self.stages):
            x = stage(x)
            features.append(x)
            if i + 1 < len(self.stages):
                x = self.pool(x)
        return features

    @property
    def num_layers(self) -> int:
        return len(self.stages)


def _init_weights(module: nn.Module) -> None:
    for m in module.modules():
        if isinstance(m, (nn.Conv2d, nn.ConvTranspose2d)):
            nn.init.normal_(m.weight, 0.0, 0.02)
            if m.bias is not None:
                nn.init.zeros_(m.bias)


@dataclass
class NetBundle:
    """Generator, both multi-scale discriminators, the frozen feature net
    and bookkeeping; the unit of checkpointing."""

    generator: Generator
    disc_global: MultiScaleDiscriminator
    disc_local: MultiScaleDiscriminator
    feature_net: FeatureNet
    gen_spec: GeneratorSpec
    disc_global_spec: DiscriminatorSpec
    disc_local_spec: DiscriminatorSpec
    step_count: int = 0
    seed: int = 0


def create_bundle(
    resolution: int = 64,
    seed: int = 0,
    base_width: int = 16,
    disc_base_width: int = 16,
    downsample_steps: int = 2,
    residual_blocks: int = 9,
    disc_layers: int = 4,
    feature_channels=DEFAULT_FEATURE_CHANNELS,
    feature_seed: int = DEFAULT_FEATURE_SEED,
) -> NetBundle:
    gen_spec = GeneratorSpec(
        base_width=base_width, downsample_steps=downsample_steps,
        residual_blocks=residual_blocks, resolution=resolution,
    )
    dg_spec = DiscriminatorSpec(input_channels=9, layers=disc_layers,
                                base_width=disc_base_width)
    dl_spec = DiscriminatorSpec(input_channels=12, layers=disc_layers,
                                base_width=disc_base_width)
    torch.manual_seed(seed)
    generator = Generator(gen_spec)
    disc_global = MultiScaleDiscriminator(dg_spec, kind="global")
    disc_local = MultiScaleDiscriminator(dl_spec, kind="local")
    for module in (generator, disc_global, disc_local):
        _init_weights(module)
    feature_net = FeatureNet(feature_channels, feature_seed, resolution)
    return NetBundle(
        generator=generator,
        disc_global=disc_global,
        disc_local=disc_local,
        feature_net=feature_net,
        gen_spec=gen_spec,
        disc_global_spec=dg_spec,
        disc_local_spec=dl_spec,
        seed=seed,
    )


# ---------------------------------------------------------------------------
# Input assembly
# ---------------------------------------------------------------------------


def to_signed_chw(raster: Raster) -> np.ndarray:
    """Raster -> (C, H, W) float32 mapped to [-1, 1]."""
    unit = raster.to_unit().data
    if unit.ndim == 2:
        unit = unit[None, :, :]
    else:
        unit = np.moveaxis(unit, 2, 0)
    return (unit * 2.0 - 1.0).astype(np.float32)


def from_signed_chw(arr: np.ndarray) -> Raster:
    """(3, H, W) signed array -> unit-range Raster."""
    unit = np.clip((np.asarray(arr, dtype=np.float64) + 1.0) / 2.0, 0.0, 1.0)
    return Raster(np.moveaxis(unit, 0, 2), "unit")


def _mask_plane(mask) -> np.ndarray:
    return mask.data.astype(np.float32)[None, :, :]


def _require_dims(cond: ConditionSet, other_h: int, other_w: int, what: str) -> None:
    if (cond.height, cond.width) != (other_h, other_w):
        raise ShapeError(
            f"{what} dims {other_h}x{other_w} do not match conditions "
            f"{cond.height}x{cond.width}"
        )


def assemble_generator_input(cond: ConditionSet, noisy_edge: Raster) -> np.ndarray:
    """(6, H, W) float32: [noisy edge, palette raster x3, light, shadow],
    mapped to the signed range."""
    _require_dims(cond, noisy_edge.height, noisy_edge.width, "noisy edge")
    if noisy_edge.channels != 1:
        raise ShapeError("noisy edge must be 1-channel")
    palette_raster = rasterize_palette(cond.palette, cond.height, cond.width)
    return np.concatenate([
        to_signed_chw(noisy_edge),
        to_signed_chw(palette_raster),
        _mask_plane(cond.light) * 2.0 - 1.0,
        _mask_plane(cond.shadow) * 2.0 - 1.0,
    ]).astype(np.float32)


def disc_condition_block(cond: ConditionSet) -> np.ndarray:
    """(6, H, W) float32 shared by both discriminators: clean edge, color
    map x3, light, shadow — the informative (non-editable) forms."""
    return np.concatenate([
        to_signed_chw(cond.edge),
        to_signed_chw(cond.color_map),
        _mask_plane(cond.light) * 2.0 - 1.0,
        _mask_plane(cond.shadow) * 2.0 - 1.0,
    ]).astype(np.float32)


def _portrait_tensor(portrait, cond: ConditionSet):
    """Normalize the portrait argument to a signed (3, H, W) tensor or array."""
    if isinstance(portrait, Raster):
        if portrait.channels != 3:
            raise ShapeError("portrait must be 3-channel")
        _require_dims(cond, portrait.height, portrait.width, "portrait")
        return to_signed_chw(portrait)
    if isinstance(portrait, torch.Tensor):
        if portrait.ndim != 3 or portrait.shape[0] != 3:
            raise ShapeError(f"portrait tensor must be (3, H, W), got {tuple(portrait.shape)}")
        _require_dims(cond, portrait.shape[1], portrait.shape[2], "portrait")
        return portrait
    raise ShapeError(f"unsupported portrait type {type(portrait).__name__}")


def assemble_disc_global_input(cond: ConditionSet, portrait):
    """(9, H, W): condition block + portrait (real or generated, same layout)."""
    block = disc_condition_block(cond)
    p = _portrait_tensor(portrait, cond)
    if isinstance(p, torch.Tensor):
        return torch.cat([torch.from_numpy(block).to(p.device, p.dtype), p])
    return np.concatenate([block, p])


def assemble_disc_local_input(cond: ConditionSet, portrait):
    """(12, H, W): condition block + face-masked portrait + eye-masked
    portrait (masks applied after the signed mapping, so masked-out = 0)."""
    block = disc_condition_block(cond)
    p = _portrait_tensor(portrait, cond)
    face = _mask_plane(cond.face_mask)
    eyes = _mask_plane(cond.eye_mask)
    if isinstance(p, torch.Tensor):
        face_t = torch.from_numpy(face).to(p.device, p.dtype)
        eyes_t = torch.from_numpy(eyes).to(p.device, p.dtype)
        return torch.cat([
            torch.from_numpy(block).to(p.device, p.dtype), face_t * p, eyes_t * p,
        ])
    return np.concatenate([block, face * p, eyes * p])


# ---------------------------------------------------------------------------
# Forward passes
# ---------------------------------------------------------------------------


def generator_forward(bundle: NetBundle, x):
    """Run the generator. Numpy input runs in no-grad inference mode and
    returns numpy; tensor input flows gradients for training."""
    spec = bundle.gen_spec
    is_numpy = isinstance(x, np.ndarray)
    t = torch.from_numpy(x.astype(np.float32)) if is_numpy else x
    squeeze = t.ndim == 3
    if squeeze:
        t = t.unsqueeze(0)
    if t.shape[1] != spec.input_channels:
        raise ShapeError(f"expected {spec.input_channels} channels, got {t.shape[1]}")
    if tuple(t.shape[2:]) != (spec.resolution, spec.resolution):
        raise ShapeError(
            f"expected {spec.resolution}x{spec.resolution} input, got "
            f"{t.shape[2]}x{t.shape[3]}"
        )
    if is_numpy:
        bundle.generator.eval()
        with torch.no_grad():
            out = bundle.generator(t)
    else:
        out = bundle.generator(t)
    if squeeze:
        out = out.squeeze(0)
    return out.numpy() if is_numpy else out


def multiscale_disc_forward(disc: MultiScaleDiscriminator, x):
    """Run one multi-scale discriminator: {"full": (logits, features),
    "down": (logits, features)}. Numpy in, numpy out (no-grad)."""
    is_numpy = isinstance(x, np.ndarray)
    t = torch.from_numpy(x.astype(np.float32)) if is_numpy else x
    squeeze = t.ndim == 3
    if squeeze:
        t = t.unsqueeze(0)
    if is_numpy:
        disc.eval()
        with torch.no_grad():
            out = disc(t)
    else:
        out = disc(t)

    def _export(pair):
        logits, features = pair
        if squeeze:
            logits = logits.squeeze(0)
            features = [f.squeeze(0) for f in features]
        if is_numpy:
            return logits.numpy(), [f.numpy() for f in features]
        return logits, features

    return {"full": _export(out["full"]), "down": _export(out["down"]),
            "kind": out["kind"]}


# ---------------------------------------------------------------------------
# Checkpointing
# ---------------------------------------------------------------------------


def save_checkpoint(bundle: NetBundle, path, extra: dict | None = None) -> None:
    payload = {
        "format_version": CHECKPOINT_VERSION,
        "specs": {
            "generator": asdict(bundle.gen_spec),
            "disc_global": asdict(bundle.disc_global_spec),
            "disc_local": asdict(bundle.disc_local_spec),
        },
        "feature_net": {
            "channels": list(bundle.feature_net.channels),
            "seed": bundle.feature_net.seed,
            "resolution": bundle.feature_net.resolution,
        },
        "state": {
            "generator": bundle.generator.state_dict(),
            "disc_global": bundle.disc_global.state_dict(),
            "disc_local": bundle.disc_local.state_dict(),
            "feature_net": bundle.feature_net.state_dict(),
        },
        "step_count": bundle.step_count,
        "seed": bundle.seed,
        "extra": extra or {},
    }
    torch.save(payload, path)


def load_checkpoint(path) -> tuple[NetBundle, dict]:
    payload = torch.load(path, map_location="cpu", weights_only=False)
    version = payload.get("format_version")
    if version != CHECKPOINT_VERSION:
        raise ParameterError(f"unsupported checkpoint version {version!r}")
    gen_spec = GeneratorSpec(**payload["specs"]["generator"])
    dg_spec = DiscriminatorSpec(**payload["specs"]["disc_global"])
    dl_spec = DiscriminatorSpec(**payload["specs"]["disc_local"])
    generator = Generator(gen_spec)
    disc_global = MultiScaleDiscriminator(dg_spec, kind="global")
    disc_local = MultiScaleDiscriminator(dl_spec, kind="local")
    fn_info = payload["feature_net"]
    feature_net = FeatureNet(tuple(fn_info["channels"]), fn_info["seed"],
                             fn_info["resolution"])
    generator.load_state_dict(payload["state"]["generator"])
    disc_global.load_state_dict(payload["state"]["disc_global"])
    disc_local.load_state_dict(payload["state"]["disc_local"])
    feature_net.load_state_dict(payload["state"]["feature_net"])
    bundle = NetBundle(
        generator=generator,
        disc_global=disc_global,
        disc_local=disc_local,
        feature_net=feature_net,
        gen_spec=gen_spec,
        disc_global_spec=dg_spec,
        disc_local_spec=dl_spec,
        step_count=payload["step_count"],
        seed=payload["seed"],
    )
    return bundle, payload.get("extra", {})
