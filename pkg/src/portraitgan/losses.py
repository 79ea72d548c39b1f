"""Adversarial, perceptual and feature-matching objectives.

All cross-entropies are computed in numerically stable logit form; the
expectation over patch logit maps is the mean over batch and spatial
positions, summed across discriminator scales.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch
import torch.nn.functional as F

from .errors import ContractError, NumericError, ShapeError


@dataclass(frozen=True)
class LossWeights:
    """Per-layer weights for the perceptual and feature-matching terms plus
    their global multipliers."""

    lambda_vgg_layers: tuple[float, ...]
    lambda_fm_layers: tuple[float, ...]
    w_vgg: float = 10.0
    w_fm: float = 10.0


def geometric_layer_weights(n_layers: int) -> tuple[float, ...]:
    """1/2^(L-i) for layer i, normalized to sum 1: deeper layers weigh more."""
    raw = np.array([2.0 ** (i - n_layers + 1) for i in range(n_layers)])
    return tuple(raw / raw.sum())


def default_loss_weights(n_vgg_layers: int, n_fm_layers: int,
                         w_vgg: float = 10.0, w_fm: float = 10.0) -> LossWeights:
    return LossWeights(
        lambda_vgg_layers=geometric_layer_weights(n_vgg_layers),
        lambda_fm_layers=geometric_layer_weights(n_fm_layers),
        w_vgg=w_vgg,
        w_fm=w_fm,
    )


def _as_tensor(x) -> torch.Tensor:
    if isinstance(x, torch.Tensor):
        return x
    return torch.from_numpy(np.asarray(x, dtype=np.float32))


def _check_finite(t: torch.Tensor, what: str) -> None:
    if not torch.isfinite(t).all():
        raise NumericError(f"non-finite values in {what}")


def _scale_logits(out) -> list[torch.Tensor]:
    """Per-scale logit maps from a multiscale forward dict or a plain pair."""
    if isinstance(out, dict):
        pairs = [out["full"], out["down"]]
        logits = [p[0] if isinstance(p, (tuple, list)) else p for p in pairs]
    else:
        logits = list(out)
    tensors = []
    for item in logits:
        t = _as_tensor(item)
        _check_finite(t, "patch logits")
        tensors.append(t)
    return tensors


def gan_loss_disc(real_out, fake_out) -> torch.Tensor:
    """Discriminator objective: real patches toward 1, fake toward 0, mean
    over patches, summed over both scales. 2*ln2 per scale at p = 0.5."""
    loss = None
    for real_logits, fake_logits in zip(_scale_logits(real_out),
                                        _scale_logits(fake_out), strict=True):
        term = (
            F.binary_cross_entropy_with_logits(
                real_logits, torch.ones_like(real_logits))
            + F.binary_cross_entropy_with_logits(
                fake_logits, torch.zeros_like(fake_logits))
        )
        loss = term if loss is None else loss + term
    _check_finite(loss, "discriminator loss")
    return loss


def gan_loss_gen(fake_outs) -> torch.Tensor:
    """Non-saturating generator objective: fake patches toward 1, summed
    over every discriminator and scale passed in."""
    loss = None
    for out in fake_outs:
        for fake_logits in _scale_logits(out):
            term = F.binary_cross_entropy_with_logits(
                fake_logits, torch.ones_like(fake_logits))
            loss = term if loss is None else loss + term
    if loss is None:
        raise ContractError("no discriminator outputs given")
    _check_finite(loss, "generator GAN loss")
    return loss


def _image_pair(real, fake) -> tuple[torch.Tensor, torch.Tensor]:
    real_t, fake_t = _as_tensor(real), _as_tensor(fake)
    if real_t.shape != fake_t.shape:
        raise ShapeError(f"image shapes differ: {tuple(real_t.shape)} vs {tuple(fake_t.shape)}")
    if real_t.ndim == 3:
        real_t, fake_t = real_t.unsqueeze(0), fake_t.unsqueeze(0)
    return real_t, fake_t


def perceptual_loss(feature_net, real, fake, weights: LossWeights) -> torch.Tensor:
    """Weighted mean absolute distance between feature-net activations of
    the real and generated images."""
    real_t, fake_t = _image_pair(real, fake)
    real_feats = feature_net(real_t)
    fake_feats = feature_net(fake_t)
    lambdas = weights.lambda_vgg_layers
    if len(lambdas) != len(real_feats):
        raise ContractError(
            f"{len(lambdas)} layer weights for {len(real_feats)} feature maps"
        )
    loss = None
    for lam, rf, ff in zip(lambdas, real_feats, fake_feats):
        term = lam * (ff - rf).abs().mean()
        loss = term if loss is None else loss + term
    _check_finite(loss, "perceptual loss")
    return loss


def _scale_features(out) -> list[list[torch.Tensor]]:
    if not isinstance(out, dict) or not {"full", "down"} <= set(out):
        raise ContractError("expected a multiscale forward dict with full/down scales")
    if out.get("kind", "global") != "global":
        raise ContractError(
            "feature matching consumes the global discriminator's features, "
            f"got kind {out['kind']!r}")
    return [[_as_tensor(f) for f in out[scale][1]] for scale in ("full", "down")]


def feature_matching_loss(real_out, fake_out, weights: LossWeights) -> torch.Tensor:
    """Layer-weighted L1 between global-discriminator features on real and
    generated inputs, over both of its scale networks. Real features are
    treated as constants; only the generator should receive gradients."""
    real_scales = _scale_features(real_out)
    fake_scales = _scale_features(fake_out)
    lambdas = weights.lambda_fm_layers
    loss = None
    for real_feats, fake_feats in zip(real_scales, fake_scales):
        if len(real_feats) != len(fake_feats) or len(lambdas) != len(real_feats):
            raise ContractError(
                f"feature lists misaligned: {len(real_feats)} real / "
                f"{len(fake_feats)} fake / {len(lambdas)} weights"
            )
        for lam, rf, ff in zip(lambdas, real_feats, fake_feats):
            if rf.shape != ff.shape:
                raise ContractError(
                    f"feature shapes differ: {tuple(rf.shape)} vs {tuple(ff.shape)}"
                )
            term = lam * (ff - rf.detach()).abs().mean()
            loss = term if loss is None else loss + term
    _check_finite(loss, "feature matching loss")
    return loss


def total_generator_objective(
    dg_fake_out,
    dl_fake_out,
    dg_real_out,
    feature_net,
    real_image,
    fake_image,
    weights: LossWeights,
) -> tuple[torch.Tensor, dict]:
    """GAN term + weighted perceptual + weighted feature matching.

    Returns the total plus the unweighted component terms.
    """
    gan = gan_loss_gen([dg_fake_out, dl_fake_out])
    perceptual = perceptual_loss(feature_net, real_image, fake_image, weights)
    matching = feature_matching_loss(dg_real_out, dg_fake_out, weights)
    total = gan + weights.w_vgg * perceptual + weights.w_fm * matching
    return total, {
        "gen_gan": gan,
        "gen_perceptual": perceptual,
        "gen_feature_matching": matching,
    }
