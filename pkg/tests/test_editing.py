"""Edit operations, scripts, and deterministic generation."""

import numpy as np
import pytest

from conftest import synthetic_portrait
from portraitgan.conditioning import (
    black_palette,
    extract_conditions,
    extract_distribution_palette,
    rasterize_palette,
)
from portraitgan.editing import (
    BatchItemResult,
    EditScript,
    apply_color_transfer,
    apply_edit_script,
    batch_edit,
    decode_mask_png,
    encode_gray_png,
    encode_mask_png,
    generate,
    mask_boolean,
    replace_edge_region,
    set_distribution_row,
    set_row_color,
    slider_blend,
    stripe_pattern,
)
from portraitgan.errors import ParameterError, ShapeError
from portraitgan.labels import PALETTE_ROW_NAMES
from portraitgan.raster import BinaryMask, Raster


class TestPaletteOps:
    def test_set_row_color_locality(self, cond64):
        edited = set_row_color(cond64.palette, "lip", (255, 0, 0))
        assert edited.row("lip").single_color() == (255, 0, 0)
        for name in PALETTE_ROW_NAMES:
            if name != "lip":
                assert edited.row(name) == cond64.palette.row(name)

    def test_set_row_color_idempotent(self, cond64):
        once = set_row_color(cond64.palette, "hair", (5, 6, 7))
        twice = set_row_color(once, "hair", (5, 6, 7))
        assert once == twice

    def test_unknown_row_rejected(self, cond64):
        with pytest.raises(ParameterError):
            set_row_color(cond64.palette, "beard", (0, 0, 0))

    def test_all_rows_editable(self, cond64):
        palette = cond64.palette
        for name in PALETTE_ROW_NAMES:
            palette = set_row_color(palette, name, (1, 2, 3))
        for name in PALETTE_ROW_NAMES:
            assert palette.row(name).single_color() == (1, 2, 3)

    def test_slider_extremes_collapse(self):
        base = black_palette()
        zero = slider_blend(base, "hair", (10, 0, 0), (0, 10, 0), 0.0)
        assert zero == set_row_color(base, "hair", (10, 0, 0))
        one = slider_blend(base, "hair", (10, 0, 0), (0, 10, 0), 1.0)
        assert one == set_row_color(base, "hair", (0, 10, 0))

    def test_slider_ratio_is_second_color_share(self):
        base = black_palette()
        blended = slider_blend(base, "hair", (10, 0, 0), (0, 10, 0), 0.25)
        entries = blended.row("hair").entries
        assert entries[0] == ((10, 0, 0), 0.75)
        assert entries[1] == ((0, 10, 0), 0.25)

    def test_vertical_slider_pixel_counts(self):
        base = black_palette()
        blended = slider_blend(base, "eyes", (200, 0, 0), (0, 0, 200), 0.25,
                               "vertical")
        out = rasterize_palette(blended, 60, 16)
        band = out.data[24:36]  # eyes band, height 12
        b_pixels = int((band == (0, 0, 200)).all(axis=2).sum())
        assert b_pixels == round(0.25 * 12) * 16
        assert (band[0] == (200, 0, 0)).all()   # color A on top

    def test_slider_ratio_out_of_range(self):
        with pytest.raises(ParameterError):
            slider_blend(black_palette(), "hair", (0, 0, 0), (1, 1, 1), 1.5)

    def test_stripe_single_color_equals_set_row(self):
        base = black_palette()
        assert stripe_pattern(base, "hair", [(9, 9, 9)]) == \
            set_row_color(base, "hair", (9, 9, 9))

    def test_stripe_two_colors_alternate(self):
        base = stripe_pattern(black_palette(), "hair", [(250, 0, 0), (0, 0, 250)])
        out = rasterize_palette(base, 50, 8)
        row = out.data[0]
        assert np.array_equal(row[0], (250, 0, 0))
        assert np.array_equal(row[1], (0, 0, 250))
        assert np.array_equal(row[2], (250, 0, 0))

    def test_stripes_vs_slider_same_histogram_different_raster(self):
        a = (250, 0, 0)
        b = (0, 0, 250)
        stripes = stripe_pattern(black_palette(), "hair", [a, b])
        slider = slider_blend(black_palette(), "hair", a, b, 0.5)
        r_stripes = rasterize_palette(stripes, 50, 32)
        r_slider = rasterize_palette(slider, 50, 32)
        assert not np.array_equal(r_stripes.data, r_slider.data)
        band_s = r_stripes.data[:10]
        band_l = r_slider.data[:10]
        for color in (a, b):
            count_s = int((band_s == color).all(axis=2).sum())
            count_l = int((band_l == color).all(axis=2).sum())
            assert count_s == count_l

    def test_ops_preserve_palette_invariants(self, cond64):
        palette = cond64.palette
        palette = slider_blend(palette, "eyes", (1, 2, 3), (4, 5, 6), 0.3)
        palette = stripe_pattern(palette, "hair", [(1, 1, 1), (2, 2, 2), (3, 3, 3)])
        palette = set_distribution_row(palette, "lip", [(7, 7, 7)] * 5)
        assert len(palette.rows) == 5
        for row in palette.rows:
            assert sum(f for _, f in row.entries) == pytest.approx(1.0, abs=1e-9)


class TestMaskBoolean:
    def test_or_with_zero_identity(self, cond64):
        zero = BinaryMask(np.zeros((64, 64), dtype=np.uint8))
        out = mask_boolean(cond64.light, zero, "OR")
        assert np.array_equal(out.data, cond64.light.data)

    def test_and_with_zero_clears(self, cond64):
        zero = BinaryMask(np.zeros((64, 64), dtype=np.uint8))
        out = mask_boolean(cond64.light, zero, "AND")
        assert not out.data.any()

    def test_andnot_removes_exactly_brush(self):
        rng = np.random.default_rng(0)
        base = BinaryMask((rng.random((16, 16)) < 0.5).astype(np.uint8))
        brush = BinaryMask((rng.random((16, 16)) < 0.3).astype(np.uint8))
        out = mask_boolean(base, brush, "ANDNOT")
        expected = base.data.astype(bool) & ~brush.data.astype(bool)
        assert np.array_equal(out.data.astype(bool), expected)

    def test_dim_mismatch(self, cond64):
        with pytest.raises(ShapeError):
            mask_boolean(cond64.light, BinaryMask(np.zeros((8, 8), dtype=np.uint8)),
                         "OR")

    def test_unknown_op(self, cond64):
        with pytest.raises(ParameterError):
            mask_boolean(cond64.light, cond64.light, "XOR")


class TestEdgeRegion:
    def test_patch_pasted(self, cond64):
        patch = Raster(np.ones((8, 8)), "unit")
        out = replace_edge_region(cond64.edge, patch, 10, 12)
        assert out.data[10:18, 12:20].all()

    def test_out_of_bounds_rejected(self, cond64):
        with pytest.raises(ParameterError):
            replace_edge_region(cond64.edge, Raster(np.ones((8, 8)), "unit"), 60, 60)


class TestColorTransfer:
    def test_self_transfer_is_own_distribution_palette(self, portrait64, cond64):
        image, seg = portrait64
        out = apply_color_transfer(cond64, (image, seg), strip_width=8)
        assert out.palette == extract_distribution_palette(image, seg, 8)

    def test_other_conditions_unchanged(self, portrait64, cond64):
        image, seg = portrait64
        out = apply_color_transfer(cond64, (image, seg), strip_width=8)
        assert np.array_equal(out.edge.data, cond64.edge.data)
        assert np.array_equal(out.light.data, cond64.light.data)
        assert np.array_equal(out.shadow.data, cond64.shadow.data)
        assert np.array_equal(out.color_map.data, cond64.color_map.data)

    def test_sampled_colors_originate_from_reference_component(self, cond64):
        ref_image, ref_seg = synthetic_portrait(64, seed=500)
        out = apply_color_transfer(cond64, (ref_image, ref_seg), strip_width=6)
        from portraitgan.labels import DEFAULT_LABELS

        for name in PALETTE_ROW_NAMES:
            mask = np.isin(ref_seg.labels, DEFAULT_LABELS.palette_ids(name))
            if not mask.any():
                continue
            component = {tuple(int(c) for c in px) for px in ref_image.data[mask]}
            for color, _ in out.palette.row(name).entries:
                assert color in component


class TestEditScript:
    def test_json_round_trip(self):
        script = EditScript((
            {"op": "set_row_color", "row": "lip", "color": [255, 0, 0]},
            {"op": "slider_blend", "row": "hair", "color_a": [1, 2, 3],
             "color_b": [4, 5, 6], "ratio": 0.5, "orientation": "vertical"},
        ))
        assert EditScript.from_json(script.to_json()) == script

    def test_unknown_op_rejected(self):
        with pytest.raises(ParameterError):
            EditScript(({"op": "teleport"},))

    def test_unknown_row_rejected(self):
        with pytest.raises(ParameterError):
            EditScript(({"op": "set_row_color", "row": "nose", "color": [1, 1, 1]},))

    def test_apply_in_order(self, cond64):
        script = EditScript((
            {"op": "set_row_color", "row": "lip", "color": [10, 10, 10]},
            {"op": "set_row_color", "row": "lip", "color": [20, 20, 20]},
        ))
        out = apply_edit_script(cond64, script)
        assert out.palette.row("lip").single_color() == (20, 20, 20)

    def test_mask_boolean_via_script(self, cond64):
        brush = np.zeros((64, 64), dtype=np.uint8)
        brush[:4] = 1
        script = EditScript(({
            "op": "mask_boolean", "target": "light", "bool_op": "OR",
            "brush_png": encode_mask_png(BinaryMask(brush)),
        },))
        out = apply_edit_script(cond64, script)
        assert out.light.data[:4].all()

    def test_replace_edge_region_via_script(self, cond64):
        patch = Raster(np.ones((6, 6)), "unit")
        script = EditScript(({
            "op": "replace_edge_region", "top": 2, "left": 3,
            "patch_png": encode_gray_png(patch),
        },))
        out = apply_edit_script(cond64, script)
        assert out.edge.data[2:8, 3:9].all()

    def test_mask_png_round_trip(self):
        mask = BinaryMask((np.random.default_rng(0).random((32, 32)) < 0.5)
                          .astype(np.uint8))
        assert np.array_equal(decode_mask_png(encode_mask_png(mask)).data, mask.data)


class TestGenerate:
    def test_deterministic(self, small_bundle, cond64):
        a = generate(small_bundle, cond64)
        b = generate(small_bundle, cond64)
        assert np.array_equal(a.data, b.data)

    def test_output_shape_and_range(self, small_bundle, cond64):
        out = generate(small_bundle, cond64)
        assert (out.height, out.width, out.channels) == (64, 64, 3)
        assert out.range_tag == "unit"

    def test_resolution_mismatch_no_silent_resampling(self, small_bundle):
        image, seg = synthetic_portrait(32, seed=0)
        small_cond = extract_conditions(image, seg)
        with pytest.raises(ShapeError):
            generate(small_bundle, small_cond)

    def test_inference_path_feeds_the_clean_edge(self, small_bundle, cond64):
        # noising is a training-only transform: generation must equal a
        # forward pass assembled from the untouched edge map
        from portraitgan.networks import (
            assemble_generator_input,
            from_signed_chw,
            generator_forward,
        )

        direct = from_signed_chw(generator_forward(
            small_bundle, assemble_generator_input(cond64, cond64.edge)))
        assert np.array_equal(generate(small_bundle, cond64).data, direct.data)

    def test_palette_edit_changes_output_with_same_edges(self, small_bundle, cond64):
        base = generate(small_bundle, cond64)
        edited_cond = cond64.with_palette(
            set_row_color(cond64.palette, "hair", (255, 255, 0)))
        assert np.array_equal(edited_cond.edge.data, cond64.edge.data)
        edited = generate(small_bundle, edited_cond)
        assert not np.array_equal(base.data, edited.data)


class TestBatchEdit:
    def test_empty_script_reconstructs(self, small_bundle, cond64):
        results = batch_edit(small_bundle, [cond64], EditScript())
        assert results[0].ok
        assert np.array_equal(results[0].image.data,
                              generate(small_bundle, cond64).data)

    def test_order_preserved_and_matches_single(self, small_bundle):
        conds = []
        for i in range(3):
            image, seg = synthetic_portrait(64, seed=200 + i)
            conds.append(extract_conditions(image, seg))
        script = EditScript((
            {"op": "set_row_color", "row": "hair", "color": [0, 200, 0]},))
        results = batch_edit(small_bundle, conds, script)
        assert [r.index for r in results] == [0, 1, 2]
        for cond, result in zip(conds, results):
            single = generate(small_bundle, apply_edit_script(cond, script))
            assert np.array_equal(result.image.data, single.data)

    def test_per_item_errors_do_not_stop_batch(self, small_bundle, cond64):
        image, seg = synthetic_portrait(32, seed=1)
        bad = extract_conditions(image, seg)
        results = batch_edit(small_bundle, [cond64, bad, cond64], EditScript())
        assert results[0].ok and results[2].ok
        assert not results[1].ok
        assert "ShapeError" in results[1].error
