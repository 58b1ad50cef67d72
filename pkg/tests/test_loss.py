import math

import numpy as np
import pytest

from tomkit import (
    DepthMap,
    InsufficientMaskError,
    LossConfig,
    gradient_magnitude,
    loss_gradient,
    lstsq_tom_loss,
    make_mirror_scene,
    ssi_loss,
    tom_loss,
    total_loss,
    trimmed_mae,
)

from oracles import fd_check_instance, oracle_grad_mag, oracle_tom_loss

EPS = 1e-6


def random_instance(rng, h=6, w=6, mask_pixels=None):
    pred = rng.uniform(0.5, 4.0, (h, w))
    gt = rng.uniform(0.5, 4.0, (h, w))
    mask = np.zeros((h, w), dtype=bool)
    n = mask_pixels if mask_pixels is not None else int(rng.integers(3, 13))
    idx = rng.choice(h * w, size=n, replace=False)
    mask.ravel()[idx] = True
    return DepthMap(pred), DepthMap(gt), mask


# ---------------------------------------------------------------------------
# gradient magnitude
# ---------------------------------------------------------------------------

class TestGradientMagnitude:
    def test_constant_depth_all_zero(self):
        g = gradient_magnitude(DepthMap(np.full((4, 5), 3.0)))
        assert np.array_equal(g.magnitude, np.zeros((4, 5)))
        assert g.validity.all()

    def test_horizontal_ramp(self):
        h, w = 4, 6
        d = DepthMap(np.tile(np.arange(w, dtype=np.float64), (h, 1)))
        g = gradient_magnitude(d)
        assert np.array_equal(g.magnitude[:, :-1], np.ones((h, w - 1)))
        # last column: gx padded to zero, gy zero on a row-constant ramp
        assert np.array_equal(g.magnitude[:, -1], np.zeros(h))

    def test_brute_force_oracle(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            values = rng.normal(size=(4, 4))
            validity = rng.random((4, 4)) < 0.8
            g = gradient_magnitude(DepthMap(values, np.ones((4, 4), bool)))
            mag, val = oracle_grad_mag(values, np.ones((4, 4), bool))
            assert np.allclose(g.magnitude, mag, rtol=1e-15)
            g2 = gradient_magnitude(DepthMap(values, validity))
            _, val2 = oracle_grad_mag(values, validity)
            assert np.array_equal(g2.validity, val2)

    def test_validity_requires_all_reads(self):
        validity = np.ones((3, 3), dtype=bool)
        validity[1, 1] = False
        g = gradient_magnitude(DepthMap(np.ones((3, 3)), validity))
        # (1,1) itself, plus the two pixels whose differences read it
        assert not g.validity[1, 1]
        assert not g.validity[1, 0]
        assert not g.validity[0, 1]
        assert g.validity[0, 0]


# ---------------------------------------------------------------------------
# trimmed mean absolute error
# ---------------------------------------------------------------------------

class TestTrimmedMae:
    def test_all_zero(self):
        assert trimmed_mae(np.zeros(8), 8) == 0.0

    def test_hand_enumeration(self):
        assert trimmed_mae(np.array([1.0, 2, 3, 4, 10]), 5, 0.2) == pytest.approx(1.0, rel=1e-15)

    def test_equal_residuals_formula(self):
        for n in [1, 2, 5, 7, 10, 13, 25]:
            r = 0.7
            expected = max(1, math.floor(0.8 * n)) * r / (2 * n)
            assert trimmed_mae(np.full(n, r), n, 0.2) == pytest.approx(expected, rel=1e-15)

    def test_keep_at_least_one(self):
        assert trimmed_mae(np.array([5.0]), 1, 0.2) == pytest.approx(2.5)

    def test_zero_trim_is_half_mean(self):
        rng = np.random.default_rng(1)
        r = rng.uniform(0, 2, 11)
        assert trimmed_mae(r, 11, 0.0) == pytest.approx(r.sum() / 22, rel=1e-13)

    def test_trim_monotonicity(self):
        rng = np.random.default_rng(2)
        r = rng.uniform(0, 3, 17)
        vals = [trimmed_mae(r, 17, f) for f in np.linspace(0.0, 0.95, 30)]
        assert all(a >= b - 1e-15 for a, b in zip(vals, vals[1:]))

    def test_errors(self):
        with pytest.raises(ValueError):
            trimmed_mae(np.array([]), 0)
        with pytest.raises(ValueError):
            trimmed_mae(np.array([1.0]), 2)
        with pytest.raises(ValueError):
            trimmed_mae(np.array([-0.1]), 1)


# ---------------------------------------------------------------------------
# regional gradient loss
# ---------------------------------------------------------------------------

class TestTomLoss:
    def test_zero_when_equal(self):
        rng = np.random.default_rng(3)
        pred, _, mask = random_instance(rng, mask_pixels=12)
        cfg = LossConfig(min_mask_pixels=3)
        assert tom_loss(pred, pred, mask, cfg) == 0.0

    def test_affine_invariance_of_prediction(self):
        rng = np.random.default_rng(4)
        pred, gt, mask = random_instance(rng, h=8, w=8, mask_pixels=12)
        cfg = LossConfig(min_mask_pixels=3)
        base = tom_loss(pred, gt, mask, cfg)
        scaled = DepthMap(2.0 * pred.values + 3.0)
        assert abs(tom_loss(scaled, gt, mask, cfg) - base) < 1e-9

    def test_invariance_in_gt_including_negative_scale(self):
        rng = np.random.default_rng(5)
        pred, gt, mask = random_instance(rng, h=8, w=8, mask_pixels=12)
        cfg = LossConfig(min_mask_pixels=3)
        base = tom_loss(pred, gt, mask, cfg)
        for a, b in [(2.0, 3.0), (-1.0, 0.0), (-0.5, 4.0)]:
            tweaked = DepthMap(a * gt.values + b)
            assert abs(tom_loss(pred, tweaked, mask, cfg) - base) < 1e-9

    def test_oracle_equivalence_small_masks(self):
        rng = np.random.default_rng(6)
        cfg = LossConfig(min_mask_pixels=3)
        for _ in range(100):
            pred, gt, mask = random_instance(rng)
            got = tom_loss(pred, gt, mask, cfg)
            want = oracle_tom_loss(pred.values, gt.values, mask)
            assert abs(got - want) < 1e-12

    def test_synth_scene_separation(self):
        scene = make_mirror_scene()
        clean = tom_loss(scene.gt_depth, scene.gt_depth, scene.tom_mask)
        dirty = tom_loss(scene.contaminated_depth, scene.gt_depth, scene.tom_mask)
        assert clean == 0.0
        assert dirty > 0.0

    def test_undersized_mask_rejected(self):
        rng = np.random.default_rng(7)
        pred, gt, mask = random_instance(rng, mask_pixels=5)
        with pytest.raises(InsufficientMaskError):
            tom_loss(pred, gt, mask, LossConfig(min_mask_pixels=10))

    def test_nonnegative(self):
        rng = np.random.default_rng(8)
        cfg = LossConfig(min_mask_pixels=3)
        for _ in range(20):
            pred, gt, mask = random_instance(rng)
            assert tom_loss(pred, gt, mask, cfg) >= 0.0


class TestLstsqTomLoss:
    def test_zero_when_equal(self):
        rng = np.random.default_rng(9)
        pred, _, mask = random_instance(rng, mask_pixels=12)
        cfg = LossConfig(min_mask_pixels=3)
        assert lstsq_tom_loss(pred, pred, mask, cfg) == pytest.approx(0.0, abs=1e-14)

    def test_exact_affine_masked_gradients(self):
        # single-row maps whose masked gradient magnitudes are {0,1,2} and {1,3,5}
        pred = DepthMap(np.array([[0.0, 0.0, 1.0, 3.0]]))
        gt = DepthMap(np.array([[0.0, 1.0, 4.0, 9.0]]))
        mask = np.array([[True, True, True, False]])
        cfg = LossConfig(min_mask_pixels=2)
        assert lstsq_tom_loss(pred, gt, mask, cfg) == pytest.approx(0.0, abs=1e-13)

    def test_direct_formula_oracle(self):
        rng = np.random.default_rng(10)
        cfg = LossConfig(min_mask_pixels=3)
        for _ in range(30):
            pred, gt, mask = random_instance(rng, h=5, w=5)
            got = lstsq_tom_loss(pred, gt, mask, cfg)
            mp, _ = oracle_grad_mag(pred.values, np.ones_like(mask))
            mg, _ = oracle_grad_mag(gt.values, np.ones_like(mask))
            x = mp[mask]
            y = mg[mask]
            mx, my = x.mean(), y.mean()
            s = np.dot(x - mx, y - my) / np.dot(x - mx, x - mx)
            t = my - s * mx
            want = np.abs(s * x + t - y).mean()
            assert abs(got - want) < 1e-9


class TestSsiLoss:
    def test_zero_when_equal(self):
        rng = np.random.default_rng(11)
        pred = DepthMap(rng.uniform(1, 5, (6, 6)))
        assert ssi_loss(pred, pred) == 0.0

    def test_scale_shift_invariance(self):
        rng = np.random.default_rng(12)
        gt = DepthMap(rng.uniform(1, 5, (6, 6)))
        for a, b in [(2.0, 0.0), (0.3, 1.5), (5.0, -2.0)]:
            pred = DepthMap(a * gt.values + b)
            assert ssi_loss(pred, gt) < 1e-9

    def test_hand_instance_same_normalized_field(self):
        pred = DepthMap(np.array([[1.0, 2.0, 3.0, 4.0, 100.0]]))
        gt = DepthMap(np.array([[2.0, 4.0, 6.0, 8.0, 200.0]]))
        cfg = LossConfig(min_mask_pixels=1)
        assert ssi_loss(pred, gt, cfg=cfg) == pytest.approx(0.0, abs=1e-15)

    def test_valid_mask_restricts(self):
        rng = np.random.default_rng(13)
        gt = DepthMap(rng.uniform(1, 5, (6, 6)))
        pred_values = 2.0 * gt.values + 1.0
        pred_values[0, 0] = 50.0  # outlier outside the valid mask
        valid = np.ones((6, 6), dtype=bool)
        valid[0, 0] = False
        assert ssi_loss(DepthMap(pred_values), gt, valid) < 1e-9


class TestTotalLoss:
    def test_zero_when_equal(self):
        rng = np.random.default_rng(14)
        pred, _, mask = random_instance(rng, h=8, w=8, mask_pixels=12)
        assert total_loss(pred, pred, mask) == 0.0

    def test_empty_tom_mask_falls_back_to_ssi(self):
        rng = np.random.default_rng(15)
        pred = DepthMap(rng.uniform(1, 5, (6, 6)))
        gt = DepthMap(rng.uniform(1, 5, (6, 6)))
        mask = np.zeros((6, 6), dtype=bool)
        assert total_loss(pred, gt, mask) == ssi_loss(pred, gt)

    def test_recomposition(self):
        scene = make_mirror_scene()
        pred, gt, mask = scene.contaminated_depth, scene.gt_depth, scene.tom_mask
        total = total_loss(pred, gt, mask)
        parts = tom_loss(pred, gt, mask) + ssi_loss(pred, gt)
        assert abs(total - parts) < 1e-12


# ---------------------------------------------------------------------------
# analytic gradient under frozen-constant semantics
# ---------------------------------------------------------------------------

class TestLossGradient:
    def test_zero_field_when_equal(self):
        rng = np.random.default_rng(16)
        pred, _, mask = random_instance(rng, h=8, w=8, mask_pixels=12)
        grad = loss_gradient(pred, pred, mask)
        assert np.array_equal(grad, np.zeros((8, 8)))

    def test_locality_outside_masks_and_footprint(self):
        rng = np.random.default_rng(17)
        h, w = 10, 10
        pred = DepthMap(rng.uniform(1, 3, (h, w)))
        gt = DepthMap(rng.uniform(1, 3, (h, w)))
        tom_mask = np.zeros((h, w), dtype=bool)
        tom_mask[1:4, 1:4] = True
        valid = np.zeros((h, w), dtype=bool)
        valid[:6, :6] = True
        grad = loss_gradient(pred, gt, tom_mask, valid, LossConfig(min_mask_pixels=3))
        # pixels outside the valid region and outside the mask's read footprint
        assert np.array_equal(grad[7:, :], np.zeros((3, w)))
        assert np.array_equal(grad[:, 7:], np.zeros((h, 3)))

    def test_finite_difference_oracle(self):
        rng = np.random.default_rng(18)
        total_checked = total_passed = 0
        for _ in range(5):
            checked, passed = fd_check_instance(rng)
            total_checked += checked
            total_passed += passed
        assert total_checked > 50
        assert total_passed / total_checked >= 0.95
