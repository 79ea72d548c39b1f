"""Objective anchors, finite-difference gradient checks, and contracts."""

import math

import numpy as np
import pytest
import torch

from portraitgan.errors import ContractError, NumericError
from portraitgan.losses import (
    LossWeights,
    default_loss_weights,
    feature_matching_loss,
    gan_loss_disc,
    gan_loss_gen,
    geometric_layer_weights,
    perceptual_loss,
    total_generator_objective,
)
from portraitgan.networks import FeatureNet, create_bundle

LN2 = math.log(2.0)


def scale_pair(value, shape=(2, 1, 4, 4), dtype=torch.float64):
    full = torch.full(shape, float(value), dtype=dtype)
    down = torch.full((shape[0], 1, 2, 2), float(value), dtype=dtype)
    return (full, down)


class TestGanLossDisc:
    def test_half_probability_anchor(self):
        loss = gan_loss_disc(scale_pair(0.0), scale_pair(0.0))
        # 2*ln2 per scale, two scales
        assert float(loss) == pytest.approx(4 * LN2, abs=1e-12)
        per_scale = gan_loss_disc((scale_pair(0.0)[0],), (scale_pair(0.0)[0],))
        assert float(per_scale) == pytest.approx(2 * LN2, abs=1e-12)

    def test_perfect_discriminator_loss_vanishes(self):
        loss = gan_loss_disc(scale_pair(30.0), scale_pair(-30.0))
        assert 0.0 <= float(loss) < 1e-10

    def test_nonfinite_rejected(self):
        bad = scale_pair(float("nan"))
        with pytest.raises(NumericError):
            gan_loss_disc(bad, scale_pair(0.0))

    def test_gradient_matches_finite_difference(self):
        logits = torch.randn(1, 1, 3, 3, dtype=torch.float64,
                             generator=torch.Generator().manual_seed(0))
        logits.requires_grad_(True)
        fake = torch.randn(1, 1, 3, 3, dtype=torch.float64)
        loss = gan_loss_disc((logits, logits * 0.5), (fake, fake))
        loss.backward()
        h = 1e-6
        for idx in [(0, 0, 0, 0), (0, 0, 1, 2), (0, 0, 2, 1)]:
            with torch.no_grad():
                up = logits.detach().clone()
                up[idx] += h
                down = logits.detach().clone()
                down[idx] -= h
                f_up = gan_loss_disc((up, up * 0.5), (fake, fake))
                f_down = gan_loss_disc((down, down * 0.5), (fake, fake))
            numeric = float(f_up - f_down) / (2 * h)
            analytic = float(logits.grad[idx])
            assert numeric == pytest.approx(analytic, rel=1e-4)


class TestGanLossGen:
    def test_fooled_discriminators_vanish(self):
        outs = [
            {"full": (scale_pair(30.0)[0], []), "down": (scale_pair(30.0)[1], [])},
            {"full": (scale_pair(30.0)[0], []), "down": (scale_pair(30.0)[1], [])},
        ]
        assert 0.0 <= float(gan_loss_gen(outs)) < 1e-10

    def test_half_probability_anchor_four_maps(self):
        outs = [scale_pair(0.0), scale_pair(0.0)]
        assert float(gan_loss_gen(outs)) == pytest.approx(4 * LN2, abs=1e-12)

    def test_monotone_in_each_logit(self):
        base = torch.zeros(1, 1, 2, 2, dtype=torch.float64)
        loss0 = float(gan_loss_gen([(base, base)]))
        for idx in [(0, 0, 0, 0), (0, 0, 1, 1)]:
            bumped = base.clone()
            bumped[idx] += 0.3
            assert float(gan_loss_gen([(bumped, base)])) < loss0


@pytest.fixture(scope="module")
def feature_net8():
    return FeatureNet(channels=(8, 12), seed=99, resolution=8).double()


class TestPerceptualLoss:
    def test_identical_images_zero(self, feature_net8):
        weights = default_loss_weights(feature_net8.num_layers, 4)
        img = torch.rand(1, 3, 8, 8, dtype=torch.float64)
        assert float(perceptual_loss(feature_net8, img, img, weights)) == 0.0

    def test_symmetry(self, feature_net8):
        weights = default_loss_weights(feature_net8.num_layers, 4)
        gen = torch.Generator().manual_seed(1)
        a = torch.rand(1, 3, 8, 8, dtype=torch.float64, generator=gen)
        b = torch.rand(1, 3, 8, 8, dtype=torch.float64, generator=gen)
        assert float(perceptual_loss(feature_net8, a, b, weights)) == pytest.approx(
            float(perceptual_loss(feature_net8, b, a, weights)), rel=1e-12)

    def test_gradient_matches_finite_difference(self, feature_net8):
        weights = default_loss_weights(feature_net8.num_layers, 4)
        gen = torch.Generator().manual_seed(2)
        real = torch.rand(1, 3, 8, 8, dtype=torch.float64, generator=gen)
        fake = torch.rand(1, 3, 8, 8, dtype=torch.float64, generator=gen)
        fake.requires_grad_(True)
        perceptual_loss(feature_net8, real, fake, weights).backward()
        h = 1e-6
        for idx in [(0, 0, 2, 3), (0, 1, 5, 5), (0, 2, 7, 0)]:
            with torch.no_grad():
                up = fake.detach().clone()
                up[idx] += h
                down = fake.detach().clone()
                down[idx] -= h
                numeric = float(
                    perceptual_loss(feature_net8, real, up, weights)
                    - perceptual_loss(feature_net8, real, down, weights)) / (2 * h)
            analytic = float(fake.grad[idx])
            assert numeric == pytest.approx(analytic, rel=1e-4, abs=1e-12)

    def test_weight_length_contract(self, feature_net8):
        weights = LossWeights(lambda_vgg_layers=(1.0,), lambda_fm_layers=(1.0,))
        img = torch.rand(1, 3, 8, 8, dtype=torch.float64)
        with pytest.raises(ContractError):
            perceptual_loss(feature_net8, img, img, weights)


def _disc_out(disc, x):
    return disc(x)


@pytest.fixture(scope="module")
def tiny_disc_bundle():
    return create_bundle(resolution=64, seed=21, base_width=4, disc_base_width=4)


class TestFeatureMatching:
    def test_identical_features_zero(self, tiny_disc_bundle):
        weights = default_loss_weights(5, 4)
        x = torch.rand(1, 9, 64, 64)
        out = _disc_out(tiny_disc_bundle.disc_global, x)
        assert float(feature_matching_loss(out, out, weights)) == 0.0

    def test_difference_scaling_doubles_loss(self):
        weights = default_loss_weights(5, 2)
        real = {"full": (None, [torch.zeros(1, 4, 8, 8, dtype=torch.float64),
                                torch.zeros(1, 4, 4, 4, dtype=torch.float64)]),
                "down": (None, [torch.zeros(1, 4, 4, 4, dtype=torch.float64),
                                torch.zeros(1, 4, 2, 2, dtype=torch.float64)])}
        delta = [torch.rand_like(f) for f in real["full"][1]]
        delta_down = [torch.rand_like(f) for f in real["down"][1]]

        def fake(scale_factor):
            return {
                "full": (None, [d * scale_factor for d in delta]),
                "down": (None, [d * scale_factor for d in delta_down]),
            }

        one = float(feature_matching_loss(real, fake(1.0), weights))
        two = float(feature_matching_loss(real, fake(2.0), weights))
        assert two == pytest.approx(2.0 * one, rel=1e-12)

    def test_local_discriminator_features_rejected(self, tiny_disc_bundle):
        weights = default_loss_weights(5, 4)
        x = torch.rand(1, 12, 64, 64)
        out = _disc_out(tiny_disc_bundle.disc_local, x)
        with pytest.raises(ContractError):
            feature_matching_loss(out, out, weights)

    def test_misaligned_lists_rejected(self, tiny_disc_bundle):
        weights = default_loss_weights(5, 3)  # disc has 4 layers
        x = torch.rand(1, 9, 64, 64)
        out = _disc_out(tiny_disc_bundle.disc_global, x)
        with pytest.raises(ContractError):
            feature_matching_loss(out, out, weights)

    def test_real_features_receive_no_gradient(self, tiny_disc_bundle):
        weights = default_loss_weights(5, 4)
        x_real = torch.rand(1, 9, 64, 64, requires_grad=True)
        x_fake = torch.rand(1, 9, 64, 64, requires_grad=True)
        out_real = _disc_out(tiny_disc_bundle.disc_global, x_real)
        out_fake = _disc_out(tiny_disc_bundle.disc_global, x_fake)
        feature_matching_loss(out_real, out_fake, weights).backward()
        assert x_real.grad is None
        assert x_fake.grad is not None


class TestTotalObjective:
    def test_zero_weights_reduce_to_gan_term(self, tiny_disc_bundle):
        weights = default_loss_weights(
            tiny_disc_bundle.feature_net.num_layers, 4, w_vgg=0.0, w_fm=0.0)
        real = torch.rand(1, 3, 64, 64)
        fake = torch.rand(1, 3, 64, 64)
        dg_fake = _disc_out(tiny_disc_bundle.disc_global, torch.rand(1, 9, 64, 64))
        dl_fake = _disc_out(tiny_disc_bundle.disc_local, torch.rand(1, 12, 64, 64))
        dg_real = _disc_out(tiny_disc_bundle.disc_global, torch.rand(1, 9, 64, 64))
        total, parts = total_generator_objective(
            dg_fake, dl_fake, dg_real, tiny_disc_bundle.feature_net,
            real, fake, weights)
        assert float(total) == pytest.approx(float(parts["gen_gan"]), rel=1e-7)

    def test_identity_and_half_probability_anchor(self, tiny_disc_bundle):
        # fake == real and all logits at 0.5 probability: only the GAN term
        weights = default_loss_weights(tiny_disc_bundle.feature_net.num_layers, 4)
        img = torch.rand(1, 3, 64, 64)
        zeros = scale_pair(0.0, (1, 1, 4, 4))
        dg = {"full": (zeros[0], []), "down": (zeros[1], []), "kind": "global"}
        dl = {"full": (zeros[0], []), "down": (zeros[1], []), "kind": "global"}
        dg_feats = _disc_out(tiny_disc_bundle.disc_global, torch.rand(1, 9, 64, 64))
        dg_for_fm = {"full": (zeros[0], dg_feats["full"][1]),
                     "down": (zeros[1], dg_feats["down"][1]), "kind": "global"}
        total, _ = total_generator_objective(
            dg_for_fm, dl, dg_for_fm, tiny_disc_bundle.feature_net,
            img, img.clone(), weights)
        assert float(total) == pytest.approx(4 * LN2, abs=1e-6)

    def test_generator_step_leaves_disc_and_feature_net_untouched(self):
        bundle = create_bundle(resolution=64, seed=77, base_width=4,
                               disc_base_width=4)
        weights = default_loss_weights(bundle.feature_net.num_layers, 4)
        opt_g = torch.optim.Adam(bundle.generator.parameters(), lr=1e-3)
        before_d = [p.detach().clone() for p in bundle.disc_global.parameters()]
        before_f = [p.detach().clone() for p in bundle.feature_net.parameters()]

        fake = bundle.generator(torch.rand(1, 6, 64, 64))
        nine = torch.cat([torch.rand(1, 6, 64, 64), fake], dim=1)
        twelve = torch.cat([torch.rand(1, 6, 64, 64), fake, fake], dim=1)
        total, _ = total_generator_objective(
            bundle.disc_global(nine), bundle.disc_local(twelve),
            bundle.disc_global(torch.rand(1, 9, 64, 64)),
            bundle.feature_net, torch.rand(1, 3, 64, 64), fake, weights)
        opt_g.zero_grad()
        total.backward()
        opt_g.step()

        for before, after in zip(before_d, bundle.disc_global.parameters()):
            assert torch.equal(before, after)
        for before, after in zip(before_f, bundle.feature_net.parameters()):
            assert torch.equal(before, after)

    def test_gradient_reaches_generator_parameters(self, tiny_disc_bundle):
        bundle = tiny_disc_bundle
        weights = default_loss_weights(bundle.feature_net.num_layers, 4)
        gen_in = torch.rand(1, 6, 64, 64)
        real = torch.rand(1, 3, 64, 64)
        fake = bundle.generator(gen_in)
        nine = torch.cat([torch.rand(1, 6, 64, 64), fake], dim=1)
        twelve = torch.cat([torch.rand(1, 6, 64, 64), fake, fake], dim=1)
        total, _ = total_generator_objective(
            bundle.disc_global(nine), bundle.disc_local(twelve),
            bundle.disc_global(torch.rand(1, 9, 64, 64)),
            bundle.feature_net, real, fake, weights)
        total.backward()
        grad_norm = sum(
            float(p.grad.abs().sum()) for p in bundle.generator.parameters()
            if p.grad is not None)
        assert grad_norm > 0.0
        bundle.generator.zero_grad()


class TestWeights:
    def test_geometric_schedule_normalized(self):
        w = geometric_layer_weights(5)
        assert sum(w) == pytest.approx(1.0, abs=1e-12)
        assert w[4] / w[3] == pytest.approx(2.0, rel=1e-12)
        assert w[0] == pytest.approx((1 / 16) / (31 / 16), rel=1e-12)

    def test_every_loss_nonnegative_on_random_inputs(self, tiny_disc_bundle):
        weights = default_loss_weights(tiny_disc_bundle.feature_net.num_layers, 4)
        for seed in range(5):
            gen = torch.Generator().manual_seed(seed)
            logits = torch.randn(1, 1, 4, 4, generator=gen)
            pair = (logits, torch.randn(1, 1, 2, 2, generator=gen))
            assert float(gan_loss_disc(pair, pair)) >= 0.0
            assert float(gan_loss_gen([pair])) >= 0.0
            a = torch.rand(1, 3, 64, 64, generator=gen)
            b = torch.rand(1, 3, 64, 64, generator=gen)
            assert float(perceptual_loss(
                tiny_disc_bundle.feature_net, a, b, weights)) >= 0.0
