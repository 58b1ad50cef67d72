"""Synthetic mirror-room scenes with analytically known ground truth.

Each scene is a slanted wall (a linear depth ramp across columns, so the
gradient field is non-degenerate) with a rectangular mirror lying flush in
the wall plane. The ground-truth depth is the wall everywhere; the
contaminated depth reproduces the classic reflection failure inside the
mirror: depth pushed behind the plane by twice the virtual offset, plus a
fixed sinusoidal ripple standing in for reflected scene structure, plus
optional seeded Gaussian noise. A matching ToM mask and a two-level
reflectance map (0.02 on the mirror, 0.8 on the wall) round out the scene.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .imagegrid import DepthMap

__all__ = ["SceneConfig", "MirrorScene", "make_mirror_scene"]

_RIPPLE_PERIOD_Y = 9.0
_RIPPLE_PERIOD_X = 7.0
_MIRROR_REFLECTANCE = 0.02
_WALL_REFLECTANCE = 0.8


@dataclass(frozen=True)
class SceneConfig:
    height: int = 240
    width: int = 320
    wall_depth: float = 2.0
    wall_slant: float = 0.002  # depth units per column
    mirror_rect: tuple = (80, 120, 80, 80)  # top, left, height, width
    virtual_offset: float = 1.0
    noise_sigma: float = 0.0
    ripple: bool = True

    def __post_init__(self):
        if self.height < 1 or self.width < 1:
            raise ValueError("scene dimensions must be positive")
        if self.wall_depth <= 0:
            raise ValueError("wall_depth must be positive")
        if self.virtual_offset < 0:
            raise ValueError("virtual_offset must be non-negative")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be non-negative")
        top, left, h, w = self.mirror_rect
        if h < 1 or w < 1 or top < 0 or left < 0 or top + h > self.height or left + w > self.width:
            raise ValueError(f"mirror_rect {self.mirror_rect} out of bounds")

    def to_dict(self) -> dict:
        return {
            "height": self.height,
            "width": self.width,
            "wall_depth": self.wall_depth,
            "wall_slant": self.wall_slant,
            "mirror_rect": list(self.mirror_rect),
            "virtual_offset": self.virtual_offset,
            "noise_sigma": self.noise_sigma,
            "ripple": self.ripple,
        }


@dataclass
class MirrorScene:
    gt_depth: DepthMap
    contaminated_depth: DepthMap
    tom_mask: np.ndarray
    reflectance: np.ndarray  # (H, W, 3) float32


def make_mirror_scene(cfg: SceneConfig = SceneConfig(), seed: int = 0) -> MirrorScene:
    """Build a scene deterministically from (cfg, seed).

    The contaminated map equals the ground truth outside the mirror
    rectangle; inside it reads ``gt + 2 * virtual_offset + ripple + noise``
    with ripple amplitude ``virtual_offset / 10``. With zero offset and noise
    the two maps are bitwise identical.
    """
    top, left, rh, rw = cfg.mirror_rect
    cols = np.arange(cfg.width, dtype=np.float64)
    gt = np.broadcast_to(
        cfg.wall_depth + cfg.wall_slant * cols, (cfg.height, cfg.width)
    ).astype(np.float32)

    contaminated = gt.copy()
    rect = (slice(top, top + rh), slice(left, left + rw))
    ii, jj = np.meshgrid(
        np.arange(top, top + rh, dtype=np.float64),
        np.arange(left, left + rw, dtype=np.float64),
        indexing="ij",
    )
    bump = np.full((rh, rw), 2.0 * cfg.virtual_offset)
    if cfg.ripple:
        amplitude = cfg.virtual_offset / 10.0
        bump += amplitude * np.sin(2.0 * np.pi * ii / _RIPPLE_PERIOD_Y) * np.sin(
            2.0 * np.pi * jj / _RIPPLE_PERIOD_X
        )
    if cfg.noise_sigma > 0:
        rng = np.random.default_rng(seed)
        bump += rng.normal(0.0, cfg.noise_sigma, size=(rh, rw))
    contaminated[rect] = (gt[rect].astype(np.float64) + bump).astype(np.float32)

    tom_mask = np.zeros((cfg.height, cfg.width), dtype=bool)
    tom_mask[rect] = True

    reflectance = np.full((cfg.height, cfg.width, 3), _WALL_REFLECTANCE, dtype=np.float32)
    reflectance[rect] = _MIRROR_REFLECTANCE

    return MirrorScene(
        gt_depth=DepthMap(gt, np.ones_like(tom_mask)),
        contaminated_depth=DepthMap(contaminated, np.ones_like(tom_mask)),
        tom_mask=tom_mask,
        reflectance=reflectance,
    )
