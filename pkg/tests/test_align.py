import numpy as np
import pytest

from tomkit import (
    DegenerateInputError,
    InsufficientSamplesError,
    lstsq_scale_shift,
    normalize_field,
    robust_center_scale,
)


def sum_sq_residual(x, y, s, t):
    r = s * x + t - y
    return float(np.dot(r, r))


class TestLstsqScaleShift:
    def test_identity_when_equal(self):
        x = np.array([1.0, 2.0, 5.0, 9.0])
        s, t = lstsq_scale_shift(x, x)
        assert s == pytest.approx(1.0, abs=1e-14)
        assert t == pytest.approx(0.0, abs=1e-13)

    def test_exact_affine_relation(self):
        x = np.array([0.0, 1.0, 2.0])
        y = np.array([1.0, 3.0, 5.0])
        s, t = lstsq_scale_shift(x, y)
        assert s == pytest.approx(2.0, abs=1e-14)
        assert t == pytest.approx(1.0, abs=1e-14)
        assert sum_sq_residual(x, y, s, t) == pytest.approx(0.0, abs=1e-25)

    def test_grid_search_oracle(self):
        rng = np.random.default_rng(0)
        for _ in range(10):
            x = rng.normal(size=16)
            y = rng.normal(size=16)
            s, t = lstsq_scale_shift(x, y)
            best = sum_sq_residual(x, y, s, t)
            for ds in np.linspace(-0.5, 0.5, 201):
                for dt in np.linspace(-0.5, 0.5, 201):
                    assert best <= sum_sq_residual(x, y, s + ds, t + dt) + 1e-12

    def test_masked_fit_ignores_unmasked(self):
        x = np.array([[0.0, 1.0], [2.0, 999.0]])
        y = np.array([[1.0, 3.0], [5.0, -123.0]])
        mask = np.array([[True, True], [True, False]])
        s, t = lstsq_scale_shift(x, y, mask)
        assert (s, t) == pytest.approx((2.0, 1.0), abs=1e-13)

    def test_affine_equivariance(self):
        rng = np.random.default_rng(1)
        x = rng.normal(size=40)
        y = rng.normal(size=40)
        s, t = lstsq_scale_shift(x, y)
        for a, b in [(2.0, 3.0), (-1.5, 0.0), (0.25, -7.0)]:
            s2, t2 = lstsq_scale_shift(a * x + b, y)
            assert s2 == pytest.approx(s / a, rel=1e-10)
            assert t2 == pytest.approx(t - s * b / a, rel=1e-9, abs=1e-11)
            r1 = sum_sq_residual(x, y, s, t)
            r2 = sum_sq_residual(a * x + b, y, s2, t2)
            assert r2 == pytest.approx(r1, rel=1e-10)

    def test_constant_x_degenerate(self):
        with pytest.raises(DegenerateInputError):
            lstsq_scale_shift(np.full(5, 2.0), np.arange(5.0))

    def test_too_few_samples(self):
        with pytest.raises(InsufficientSamplesError):
            lstsq_scale_shift(np.array([1.0]), np.array([2.0]))


class TestRobustCenterScale:
    def test_symmetric_pair(self):
        s, t = robust_center_scale(np.array([-1.0, 1.0]))
        assert t == 0.0
        assert s == 1.0

    def test_hand_computed_outlier_case(self):
        s, t = robust_center_scale(np.array([1.0, 2.0, 3.0, 4.0, 100.0]))
        assert t == 3.0
        assert s == pytest.approx((2 + 1 + 0 + 1 + 97) / 5, rel=1e-15)
        assert s == pytest.approx(20.2, rel=1e-15)

    def test_constant_field(self):
        s, t = robust_center_scale(np.full(7, 5.5))
        assert t == 5.5
        assert s == 0.0

    def test_even_count_median_averages_central_pair(self):
        s, t = robust_center_scale(np.array([1.0, 2.0, 10.0, 20.0]))
        assert t == 6.0

    def test_permutation_and_unmasked_invariance(self):
        rng = np.random.default_rng(2)
        x = rng.normal(size=(4, 5))
        mask = rng.random((4, 5)) < 0.6
        base = robust_center_scale(x, mask)
        # permuting masked samples: estimator works on the value multiset
        perm = x.copy()
        vals = perm[mask]
        perm[mask] = rng.permutation(vals)
        assert robust_center_scale(perm, mask) == pytest.approx(base, rel=1e-12)
        # unmasked samples are irrelevant
        poked = x.copy()
        poked[~mask] = 1e9
        assert robust_center_scale(poked, mask) == base

    def test_empty_mask_rejected(self):
        with pytest.raises(InsufficientSamplesError):
            robust_center_scale(np.ones((2, 2)), np.zeros((2, 2), bool))


class TestNormalizeField:
    def test_already_normalized_pair(self):
        out = normalize_field(np.array([-1.0, 1.0]))
        assert np.allclose(out, [-1.0, 1.0], rtol=1e-15)

    def test_constant_field_zeros(self):
        out = normalize_field(np.full(6, 3.3), eps=1e-6)
        assert np.array_equal(out, np.zeros(6))

    def test_hand_computed_values(self):
        out = normalize_field(np.array([1.0, 2.0, 3.0, 4.0, 100.0]))
        expected = [-0.0990, -0.0495, 0.0, 0.0495, 4.8020]
        assert np.allclose(out, expected, atol=1e-4)

    def test_unmasked_samples_unchanged(self):
        x = np.array([[1.0, 2.0], [3.0, -50.0]])
        mask = np.array([[True, True], [True, False]])
        out = normalize_field(x, mask)
        assert out[1, 1] == -50.0

    def test_affine_equivariance(self):
        rng = np.random.default_rng(3)
        x = rng.normal(size=25)
        base = normalize_field(x)
        for a, b in [(2.0, 5.0), (0.1, -3.0), (7.5, 0.0)]:
            out = normalize_field(a * x + b)
            assert np.allclose(out, base, atol=1e-9)
        for a, b in [(-2.0, 1.0), (-0.5, -4.0)]:
            out = normalize_field(a * x + b)
            assert np.allclose(out, -base, atol=1e-9)
