import numpy as np
import pytest

from tomkit import (
    MaskGenConfig,
    SceneConfig,
    evaluate,
    make_mirror_scene,
    reflectance_to_mask,
    tom_loss,
)


class TestMakeMirrorScene:
    def test_gt_is_slanted_wall(self):
        cfg = SceneConfig()
        scene = make_mirror_scene(cfg)
        want = np.float32(cfg.wall_depth) + np.float32(cfg.wall_slant) * np.arange(cfg.width)
        got = scene.gt_depth.values
        assert np.allclose(got, np.tile(want, (cfg.height, 1)), rtol=1e-6)
        assert scene.gt_depth.validity.all()

    def test_deterministic_bitwise(self):
        cfg = SceneConfig(noise_sigma=0.05)
        a = make_mirror_scene(cfg, seed=11)
        b = make_mirror_scene(cfg, seed=11)
        assert np.array_equal(a.gt_depth.values, b.gt_depth.values)
        assert np.array_equal(a.contaminated_depth.values, b.contaminated_depth.values)
        assert np.array_equal(a.tom_mask, b.tom_mask)
        assert np.array_equal(a.reflectance, b.reflectance)

    def test_different_seed_changes_noise(self):
        cfg = SceneConfig(noise_sigma=0.05)
        a = make_mirror_scene(cfg, seed=1)
        b = make_mirror_scene(cfg, seed=2)
        assert not np.array_equal(a.contaminated_depth.values, b.contaminated_depth.values)

    def test_zero_offset_no_noise_is_bitwise_clean(self):
        cfg = SceneConfig(virtual_offset=0.0, noise_sigma=0.0)
        scene = make_mirror_scene(cfg)
        assert np.array_equal(scene.contaminated_depth.values, scene.gt_depth.values)

    def test_contamination_confined_to_rect(self):
        cfg = SceneConfig()
        scene = make_mirror_scene(cfg)
        outside = ~scene.tom_mask
        assert np.array_equal(
            scene.contaminated_depth.values[outside], scene.gt_depth.values[outside]
        )
        assert (scene.contaminated_depth.values[scene.tom_mask]
                > scene.gt_depth.values[scene.tom_mask]).all()

    def test_mask_pixel_count_matches_rect(self):
        cfg = SceneConfig(mirror_rect=(10, 20, 30, 40))
        scene = make_mirror_scene(cfg)
        assert scene.tom_mask.sum() == 30 * 40
        assert scene.tom_mask[10:40, 20:60].all()

    def test_reflectance_consistent_with_mask(self):
        scene = make_mirror_scene()
        derived = reflectance_to_mask(scene.reflectance, MaskGenConfig())
        assert np.array_equal(derived, scene.tom_mask)

    def test_loss_separation_across_offsets(self):
        for offset in [0.2, 1.0, 3.0]:
            cfg = SceneConfig(virtual_offset=offset)
            scene = make_mirror_scene(cfg)
            clean = tom_loss(scene.gt_depth, scene.gt_depth, scene.tom_mask)
            dirty = tom_loss(scene.contaminated_depth, scene.gt_depth, scene.tom_mask)
            assert clean == 0.0 < dirty

    def test_metric_separation_when_offset_dominates(self):
        cfg = SceneConfig(virtual_offset=0.5, wall_depth=2.0)  # 2*off/depth = 0.5 > 0.05
        scene = make_mirror_scene(cfg)
        report = evaluate(scene.contaminated_depth, scene.gt_depth, scene.tom_mask)
        assert report.regions["tom"].delta_105 < report.regions["other"].delta_105

    def test_rect_bounds_validated(self):
        with pytest.raises(ValueError):
            SceneConfig(height=100, width=100, mirror_rect=(50, 50, 60, 10))
        with pytest.raises(ValueError):
            SceneConfig(virtual_offset=-1.0)
