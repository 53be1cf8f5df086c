"""Metrics, the weighted composite loss, and the log radiance codec."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from relightkit import (
    LOSS_WEIGHTS,
    Mask,
    composite_loss,
    l1,
    log_decode,
    log_encode,
    mae,
    mse,
    specular_weighted_l1,
    ssim,
)


class TestL1:
    def test_identical_is_zero(self):
        x = np.random.default_rng(0).random((8, 8, 3))
        assert l1(x, x) == 0.0

    def test_hand_value(self):
        x = np.zeros((2, 2))
        y = np.array([[1.0, 0.0], [0.0, 3.0]])
        assert l1(x, y) == 1.0  # (1 + 0 + 0 + 3) / 4

    def test_mask_averages_hidden_region_only(self):
        x = np.zeros((2, 2))
        y = np.array([[1.0, 5.0], [9.0, 3.0]])
        m = np.array([[True, False], [False, True]])
        assert l1(x, y, mask=m) == 2.0  # (|1| + |3|) / 2

    def test_mask_object_and_rgb(self):
        x = np.zeros((2, 2, 3))
        y = np.ones((2, 2, 3)) * np.array([1.0, 2.0, 3.0])
        m = Mask(np.array([[1, 0], [0, 0]]), kind="patch", seed=0)
        assert l1(x, y, mask=m) == 2.0  # mean of (1, 2, 3)

    def test_empty_mask_rejected(self):
        with pytest.raises(ValueError):
            l1(np.zeros((2, 2)), np.ones((2, 2)), mask=np.zeros((2, 2)))

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            l1(np.zeros((2, 2)), np.zeros((3, 3)))
        with pytest.raises(ValueError):
            l1(np.zeros((4, 4)), np.ones((4, 4)), mask=np.ones((2, 2)))

    def test_mae_alias(self):
        rng = np.random.default_rng(1)
        x, y = rng.random((5, 5, 3)), rng.random((5, 5, 3))
        assert mae(x, y) == l1(x, y)


class TestMse:
    def test_hand_value(self):
        x = np.zeros((2, 2))
        y = np.full((2, 2), 0.5)
        assert mse(x, y) == 0.25

    def test_dominated_by_outliers(self):
        x = np.zeros(4)
        y = np.array([2.0, 0.0, 0.0, 0.0])
        assert mse(x, y) == 1.0
        assert mae(x, y) == 0.5


class TestSpecularWeighted:
    def test_zero_weight_kills_error(self):
        x = np.zeros((4, 4))
        y = np.ones((4, 4))
        assert specular_weighted_l1(x, y, np.zeros((4, 4))) == 0.0

    def test_unit_weight_is_plain_l1(self):
        rng = np.random.default_rng(2)
        x, y = rng.random((4, 4)), rng.random((4, 4))
        assert specular_weighted_l1(x, y, np.ones((4, 4))) == l1(x, y)

    def test_constant_weight_homogeneous(self):
        rng = np.random.default_rng(3)
        x, y = rng.random((4, 4)), rng.random((4, 4))
        w = np.full((4, 4), 0.5)
        assert specular_weighted_l1(x, y, w) == pytest.approx(0.5 * l1(x, y),
                                                              rel=1e-12)

    def test_scalar_weight_broadcast_to_rgb(self):
        rng = np.random.default_rng(4)
        x, y = rng.random((4, 4, 3)), rng.random((4, 4, 3))
        w = rng.random((4, 4))
        got = specular_weighted_l1(x, y, w)
        want = np.abs(x * w[..., None] - y * w[..., None]).mean()
        assert got == pytest.approx(want, rel=1e-12)


class TestCompositeLoss:
    def test_weight_table(self):
        assert len(LOSS_WEIGHTS) == 13
        assert LOSS_WEIGHTS["normal"] == 10.0
        assert LOSS_WEIGHTS["src_hdri"] == 10.0
        assert LOSS_WEIGHTS["spec_neural"] == 0.2
        for k in ("vgg_src_diffuse", "vgg_albedo", "vgg_pbr", "vgg_neural",
                  "adv_pbr", "adv_neural"):
            assert LOSS_WEIGHTS[k] == 1.0
        for k in ("src_diffuse", "albedo", "pbr", "neural"):
            assert LOSS_WEIGHTS[k] == 0.2

    def test_all_ones_probe(self):
        report = composite_loss({k: 1.0 for k in LOSS_WEIGHTS})
        assert report.total == 27.0

    def test_unit_probes(self):
        for key, weight in LOSS_WEIGHTS.items():
            terms = {k: 0.0 for k in LOSS_WEIGHTS}
            terms[key] = 1.0
            report = composite_loss(terms)
            assert report.total == pytest.approx(weight, abs=1e-12), key
            assert report.weighted[key] == pytest.approx(weight, abs=1e-12)

    def test_missing_term_rejected(self):
        terms = {k: 1.0 for k in LOSS_WEIGHTS}
        del terms["albedo"]
        with pytest.raises(ValueError):
            composite_loss(terms)

    def test_unknown_term_rejected(self):
        terms = {k: 1.0 for k in LOSS_WEIGHTS}
        terms["mystery"] = 1.0
        with pytest.raises(ValueError):
            composite_loss(terms)

    def test_report_round_trip(self):
        rng = np.random.default_rng(5)
        terms = {k: float(v) for k, v in
                 zip(LOSS_WEIGHTS, rng.random(len(LOSS_WEIGHTS)))}
        report = composite_loss(terms)
        assert report.terms == terms
        want = sum(LOSS_WEIGHTS[k] * terms[k] for k in LOSS_WEIGHTS)
        assert report.total == pytest.approx(want, rel=1e-12)


class TestSsim:
    def test_identical_images_score_one(self):
        rng = np.random.default_rng(6)
        x = rng.random((16, 16, 3))
        assert ssim(x, x) == 1.0

    def test_symmetric(self):
        rng = np.random.default_rng(7)
        x = rng.random((16, 16))
        y = rng.random((16, 16))
        assert ssim(x, y) == pytest.approx(ssim(y, x), rel=1e-12)

    def test_bounded_and_discriminative(self):
        rng = np.random.default_rng(8)
        x = rng.random((24, 24))
        noisy = np.clip(x + rng.normal(0, 0.05, x.shape), 0, 1)
        very_noisy = np.clip(x + rng.normal(0, 0.5, x.shape), 0, 1)
        s_small = ssim(x, noisy)
        s_big = ssim(x, very_noisy)
        assert -1.0 <= s_big < s_small < 1.0

    def test_uniform_shift_penalized_by_luminance_term(self):
        x = np.full((16, 16), 0.2)
        y = np.full((16, 16), 0.8)
        assert ssim(x, y) < 0.5

    def test_too_small_image_rejected(self):
        with pytest.raises(ValueError):
            ssim(np.zeros((8, 8)), np.zeros((8, 8)))

    def test_bad_data_range(self):
        with pytest.raises(ValueError):
            ssim(np.zeros((16, 16)), np.zeros((16, 16)), data_range=0.0)


class TestLogCodec:
    def test_hand_values(self):
        np.testing.assert_allclose(log_encode(0.0), 0.0)
        np.testing.assert_allclose(log_encode(np.e - 1.0), 1.0, rtol=1e-12)
        np.testing.assert_allclose(log_decode(1.0), np.e - 1.0, rtol=1e-12)
        np.testing.assert_allclose(log_decode(np.log(2.0)), 1.0, rtol=1e-12)

    def test_round_trip(self):
        x = np.geomspace(1e-6, 1e4, 100)
        np.testing.assert_allclose(log_decode(log_encode(x)), x, rtol=1e-12)

    @given(st.floats(0.0, 1e6))
    def test_round_trip_hypothesis(self, v):
        assert log_decode(log_encode(v)) == pytest.approx(v, rel=1e-9, abs=1e-12)

    def test_monotone(self):
        x = np.linspace(0, 10, 50)
        assert np.all(np.diff(log_encode(x)) > 0)

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            log_encode(-0.1)
        with pytest.raises(ValueError):
            log_decode(np.array([0.5, -0.5]))
