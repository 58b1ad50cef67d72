"""Derive transparent-or-mirror surface masks from reflectance coefficient maps.

Synthetic renderers expose a per-pixel diffuse reflectance map; glass and
mirror materials carry near-zero diffuse reflectance there, so thresholding
the channel-pooled map yields the surface mask directly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .imagegrid import as_grid

__all__ = ["MaskGenConfig", "reflectance_to_mask"]


@dataclass(frozen=True)
class MaskGenConfig:
    threshold: float = 0.1
    direction: str = "below"  # "below": ToM where pooled < threshold; "above": >
    erode_radius: int = 0

    def __post_init__(self):
        if not 0.0 <= self.threshold <= 1.0:
            raise ValueError(f"threshold must be in [0, 1], got {self.threshold}")
        if self.direction not in ("below", "above"):
            raise ValueError(f"direction must be 'below' or 'above', got {self.direction!r}")
        if self.erode_radius < 0:
            raise ValueError("erode_radius must be non-negative")


def reflectance_to_mask(reflectance, cfg: MaskGenConfig = MaskGenConfig()) -> np.ndarray:
    """Threshold the channel-mean reflectance into a boolean ToM mask.

    Comparison is strict in both directions, so flipping ``direction``
    complements the mask except at pixels exactly equal to the threshold.
    Optional square erosion (side ``2 * erode_radius + 1``) cleans up noisy
    maps; the default applies none.
    """
    arr = as_grid(reflectance)
    if not np.isfinite(arr).all():
        raise ValueError("reflectance map contains non-finite samples")
    pooled = arr.mean(axis=2) if arr.ndim == 3 else arr
    if cfg.direction == "below":
        mask = pooled < cfg.threshold
    else:
        mask = pooled > cfg.threshold
    if cfg.erode_radius > 0:
        size = 2 * cfg.erode_radius + 1
        mask = ndimage.binary_erosion(mask, structure=np.ones((size, size), dtype=bool))
    return mask
