"""Edge-noising corruptions: rectangle bounds, seeded reproducibility,
pointwise contracts, and uniform method selection."""

import numpy as np
import pytest

from portraitgan.errors import ParameterError
from portraitgan.noising import (
    METHOD_NAMES,
    NoiseConfig,
    _sample_destination,
    apply_named_noising,
    choose_method,
    noise_random_lines,
    noise_random_removal,
    noise_random_shift,
    sample_noising,
    sample_rectangle,
)
from portraitgan.raster import Raster

# chi-square critical value at p = 0.01 for 3 degrees of freedom
CHI2_99_DF3 = 11.3449


def random_edge(seed=0, size=32):
    return Raster(np.random.default_rng(seed).random((size, size)), "unit")


class TestNoiseConfig:
    def test_alpha_bounds(self):
        with pytest.raises(ParameterError):
            NoiseConfig(alpha=1.0)
        with pytest.raises(ParameterError):
            NoiseConfig(alpha=0.0)

    def test_weights_must_sum_to_one(self):
        with pytest.raises(ParameterError):
            NoiseConfig(method_weights=(0.5, 0.5, 0.5, 0.5))


class TestRectangleSampling:
    def test_dims_strictly_below_alpha_fraction(self):
        rng = np.random.default_rng(0)
        for _ in range(2000):
            _, _, h, w = sample_rectangle(300, 300, 0.33, rng)
            assert h < 99 and w < 99
            assert h >= 1 and w >= 1

    def test_rectangle_fully_inside(self):
        rng = np.random.default_rng(1)
        for _ in range(500):
            top, left, h, w = sample_rectangle(40, 24, 0.33, rng)
            assert 0 <= top and top + h <= 40
            assert 0 <= left and left + w <= 24


class TestRandomRemoval:
    def test_zero_edge_unchanged(self):
        edge = Raster(np.zeros((16, 16)), "unit")
        out = noise_random_removal(edge, NoiseConfig(), 3)
        assert not out.data.any()

    def test_never_increases(self):
        edge = random_edge(2)
        for seed in range(30):
            out = noise_random_removal(edge, NoiseConfig(), seed)
            assert (out.data <= edge.data).all()

    def test_exactly_one_cleared_rectangle(self):
        edge = Raster(np.ones((24, 24)), "unit")
        rng = np.random.default_rng(8)
        out = noise_random_removal(edge, NoiseConfig(), rng)
        # replay the documented draw order for the expected rectangle
        replay = np.random.default_rng(8)
        top, left, h, w = sample_rectangle(24, 24, 0.33, replay)
        expected = np.ones((24, 24))
        expected[top:top + h, left:left + w] = 0.0
        assert np.array_equal(out.data, expected)

    def test_fixed_seed_reproducible(self):
        edge = random_edge(4)
        a = noise_random_removal(edge, NoiseConfig(), 123)
        b = noise_random_removal(edge, NoiseConfig(), 123)
        assert np.array_equal(a.data, b.data)


class TestRandomShift:
    def test_zero_displacement_is_identity(self):
        # seed 4 draws destination == source on an 8x8 grid at alpha 0.9
        edge = random_edge(7, 8)
        out = noise_random_shift(edge, NoiseConfig(alpha=0.9), 4)
        assert np.array_equal(out.data, edge.data)

    def test_zero_edge_unchanged(self):
        edge = Raster(np.zeros((16, 16)), "unit")
        out = noise_random_shift(edge, NoiseConfig(), 5)
        assert not out.data.any()

    def test_line_moves_and_source_clears(self):
        edge = Raster(np.zeros((32, 32)), "unit")
        seed = 21
        replay = np.random.default_rng(seed)
        top, left, h, w = sample_rectangle(32, 32, 0.33, replay)
        dst_top, dst_left = _sample_destination(32, 32, h, w, replay)
        # paint a vertical line through the source rectangle
        col = left + w // 2
        data = edge.data.copy()
        data[top:top + h, col] = 1.0
        edge = Raster(data, "unit")

        out = noise_random_shift(edge, NoiseConfig(), seed)
        expected = data.copy()
        buf = expected[top:top + h, left:left + w].copy()
        expected[top:top + h, left:left + w] = 0.0
        expected[dst_top:dst_top + h, dst_left:dst_left + w] = buf
        assert np.array_equal(out.data, expected)
        # the line reappears displaced by (dst - src), original cleared
        if (dst_top, dst_left) != (top, left):
            assert out.data[dst_top:dst_top + h, dst_left + w // 2].all()


class TestRandomLines:
    def test_pointwise_not_below_input(self):
        edge = random_edge(9)
        for seed in range(30):
            out = noise_random_lines(edge, NoiseConfig(), seed)
            assert (out.data >= edge.data).all()

    def test_copying_zero_region_is_identity(self):
        # seed 0 on 16x16 draws a source rectangle missing pixel (15, 15)
        data = np.zeros((16, 16))
        data[15, 15] = 1.0
        edge = Raster(data, "unit")
        out = noise_random_lines(edge, NoiseConfig(), 0)
        assert np.array_equal(out.data, edge.data)

    def test_union_of_lines(self):
        edge = Raster(np.zeros((32, 32)), "unit")
        seed = 33
        replay = np.random.default_rng(seed)
        top, left, h, w = sample_rectangle(32, 32, 0.33, replay)
        dst_top, dst_left = _sample_destination(32, 32, h, w, replay)
        data = edge.data.copy()
        data[top:top + h, left:left + w] = 0.7   # source block
        data[dst_top:dst_top + h, dst_left] = 1.0  # existing line at target
        edge = Raster(data, "unit")
        out = noise_random_lines(edge, NoiseConfig(), seed)
        expected = data.copy()
        buf = data[top:top + h, left:left + w]
        region = expected[dst_top:dst_top + h, dst_left:dst_left + w]
        expected[dst_top:dst_top + h, dst_left:dst_left + w] = np.maximum(region, buf)
        assert np.array_equal(out.data, expected)
        assert (out.data >= data).all()


class TestSampleNoising:
    def test_identity_branch_returns_input(self):
        edge = random_edge(10)
        cfg = NoiseConfig(method_weights=(0.0, 0.0, 0.0, 1.0))
        out = sample_noising(edge, cfg, 0)
        assert np.array_equal(out.data, edge.data)

    def test_method_frequencies_uniform(self):
        cfg = NoiseConfig()
        rng = np.random.default_rng(77)
        counts = {name: 0 for name in METHOD_NAMES}
        n = 10_000
        for _ in range(n):
            counts[choose_method(cfg, rng)] += 1
        expected = n / 4
        chi2 = sum((c - expected) ** 2 / expected for c in counts.values())
        assert chi2 < CHI2_99_DF3

    def test_fixed_seed_sequence_reproducible(self):
        cfg = NoiseConfig()
        seq_a = [choose_method(cfg, np.random.default_rng([55, i])) for i in range(64)]
        seq_b = [choose_method(cfg, np.random.default_rng([55, i])) for i in range(64)]
        assert seq_a == seq_b

    def test_output_dims_and_range_preserved(self):
        edge = random_edge(11, 24)
        for seed in range(16):
            out = sample_noising(edge, NoiseConfig(), seed)
            assert out.data.shape == edge.data.shape
            assert out.range_tag == "unit"

    def test_apply_named_rejects_unknown(self):
        with pytest.raises(ParameterError):
            apply_named_noising(random_edge(), "blur", NoiseConfig(), 0)
