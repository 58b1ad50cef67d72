"""Percentile-anchored gamma tone mapping and the random lighting augmentation.

The map is ``out = alpha * in ** gamma`` with ``alpha`` chosen so that the
nearest-rank p-th percentile of the pooled channel intensities lands exactly
on ``target_value`` (0.8 by default). Pooling is over all finite channel
samples of the image, not per-channel and not luminance-weighted.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import DegenerateImageError
from .imagegrid import as_grid, percentile

__all__ = ["TonemapParams", "AugmentSpec", "compute_scale", "apply_tonemap", "random_augment"]


@dataclass(frozen=True)
class TonemapParams:
    gamma: float = 1.0 / 2.2
    target_value: float = 0.8
    percentile: float = 90.0
    clip: bool = True

    def __post_init__(self):
        if self.gamma <= 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if self.target_value <= 0:
            raise ValueError(f"target_value must be positive, got {self.target_value}")
        if not 0.0 <= self.percentile <= 100.0:
            raise ValueError(f"percentile must be in [0, 100], got {self.percentile}")


@dataclass(frozen=True)
class AugmentSpec:
    """Sampling range for the anchored percentile, plus the generator seed.

    ``integer_grid`` restricts draws to whole-number percentiles; the default
    draws from the continuous uniform distribution on the range.
    """

    percentile_low: float = 70.0
    percentile_high: float = 99.0
    seed: int = 0
    integer_grid: bool = False

    def __post_init__(self):
        if not 0.0 <= self.percentile_low <= self.percentile_high <= 100.0:
            raise ValueError(
                f"need 0 <= low <= high <= 100, got [{self.percentile_low}, {self.percentile_high}]"
            )


def compute_scale(image, params: TonemapParams = TonemapParams()) -> float:
    """Scale factor that maps the p-th percentile intensity onto the target.

    The percentile is taken over all finite channel values pooled across
    pixels. Raises ``DegenerateImageError`` when the anchor intensity is zero
    (all-black image at/below the percentile).
    """
    arr = as_grid(image)
    vals = arr[np.isfinite(arr)]
    if vals.size == 0:
        raise DegenerateImageError("image has no finite samples")
    if (vals < 0).any():
        raise ValueError("image samples must be non-negative")
    anchor = percentile(vals, params.percentile)
    if anchor == 0.0:
        raise DegenerateImageError(
            f"percentile {params.percentile} intensity is zero; scale undefined"
        )
    return params.target_value / anchor ** params.gamma


def apply_tonemap(image, alpha: float, gamma: float = 1.0 / 2.2, clip: bool = True) -> np.ndarray:
    """Apply ``alpha * image ** gamma`` per channel, clamping to [0, 1] if ``clip``."""
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    if gamma <= 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    arr = as_grid(image)
    finite = np.isfinite(arr)
    if (arr[finite] < 0).any():
        raise ValueError("image samples must be non-negative")
    out = alpha * np.power(arr.astype(np.float64), gamma)
    if clip:
        np.clip(out, 0.0, 1.0, out=out)
    dtype = arr.dtype if np.issubdtype(arr.dtype, np.floating) else np.float32
    return out.astype(dtype)


def random_augment(
    image,
    spec: AugmentSpec,
    params: TonemapParams = TonemapParams(),
) -> tuple[np.ndarray, float]:
    """Tone-map with a randomly drawn anchor percentile.

    Returns the augmented image and the sampled percentile. The draw is
    uniform on [low, high] from a generator seeded with ``spec.seed``, so
    identical (image, spec, params) produce identical outputs.
    """
    rng = np.random.default_rng(spec.seed)
    if spec.integer_grid:
        lo, hi = int(spec.percentile_low), int(spec.percentile_high)
        p = float(rng.integers(lo, hi, endpoint=True))
    elif spec.percentile_low == spec.percentile_high:
        p = spec.percentile_low
    else:
        p = float(rng.uniform(spec.percentile_low, spec.percentile_high))
    anchored = replace(params, percentile=p)
    alpha = compute_scale(image, anchored)
    return apply_tonemap(image, alpha, gamma=params.gamma, clip=params.clip), p
