"""Regional guidance losses for depth supervision on reflective surfaces.

The ToM (transparent-or-mirror) loss compares prediction and ground truth in
the gradient-magnitude domain over a surface mask: both gradient fields are
brought to zero robust center and unit robust scale, and the mean absolute
residual is taken after trimming the largest 20% of residuals. The divisor
stays the full masked count, so trimming only removes outlier mass. The SSI
loss runs the identical robust pipeline on depth values over the valid
region, and the total loss is their sum.

``loss_gradient`` provides the analytic derivative of the total loss under
frozen-constant semantics: the alignment statistics (median, MAD) of both
fields and the trim selection set are held fixed at their current values, so
the gradient is the exact derivative of that partially-frozen function.
Subgradient 0 is used at the two kinks (zero residual, zero gradient
magnitude).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .align import lstsq_scale_shift, robust_center_scale
from .errors import InsufficientMaskError
from .imagegrid import DepthMap

__all__ = [
    "LossConfig",
    "GradField",
    "gradient_magnitude",
    "trimmed_mae",
    "tom_loss",
    "lstsq_tom_loss",
    "ssi_loss",
    "total_loss",
    "loss_gradient",
    "tom_region_count",
]


@dataclass(frozen=True)
class LossConfig:
    trim_fraction: float = 0.2
    min_mask_pixels: int = 10
    eps: float = 1e-6

    def __post_init__(self):
        if not 0.0 <= self.trim_fraction < 1.0:
            raise ValueError(f"trim_fraction must be in [0, 1), got {self.trim_fraction}")
        if self.min_mask_pixels < 1:
            raise ValueError("min_mask_pixels must be at least 1")
        if self.eps <= 0:
            raise ValueError("eps must be positive")


@dataclass
class GradField:
    """Per-pixel gradient magnitude plus validity of each magnitude sample."""

    magnitude: np.ndarray
    validity: np.ndarray


def _grad_mag(values: np.ndarray, validity: np.ndarray) -> GradField:
    v = np.ascontiguousarray(values)
    gx = np.zeros_like(v)
    gy = np.zeros_like(v)
    np.subtract(v[:, 1:], v[:, :-1], out=gx[:, :-1])
    np.subtract(v[1:, :], v[:-1, :], out=gy[:-1, :])
    gx *= gx
    gy *= gy
    gx += gy
    mag = np.sqrt(gx, out=gx)
    val = validity.copy()
    val[:, :-1] &= validity[:, 1:]
    val[:-1, :] &= validity[1:, :]
    if not val.all():
        # invalid source samples may be NaN/inf; keep magnitudes clean there
        mag[~val] = 0.0
    return GradField(mag, val)


def gradient_magnitude(depth: DepthMap) -> GradField:
    """Forward-difference gradient magnitude with zero padding on the last row/column.

    ``gx(i,j) = D(i,j+1) - D(i,j)`` (0 in the last column), ``gy`` likewise
    down rows; magnitude is ``sqrt(gx^2 + gy^2)``. A magnitude sample is valid
    iff every depth sample it reads is valid.
    """
    return _grad_mag(depth.values, depth.validity)


def _keep_count(n: int, trim_fraction: float) -> int:
    # tiny bump so decimal trim fractions (0.2, 0.3, ...) floor as intended
    k = int(math.floor((1.0 - trim_fraction) * n + 1e-9))
    return min(max(k, 1), n)


def trimmed_mae(residuals, full_count: int, trim_fraction: float = 0.2) -> float:
    """Mean of the smallest ``floor((1 - trim) * n)`` residuals over ``2 * n``.

    The divisor is the full count, not the kept count. Ties at the cut are
    broken by original index, which cannot change the value (tied residuals
    are equal); it matters only for the gradient's selection set.
    """
    r = np.asarray(residuals).ravel()
    if r.size == 0:
        raise ValueError("trimmed_mae of an empty residual list")
    if r.size != full_count:
        raise ValueError(f"residual count {r.size} does not match full_count {full_count}")
    if (r < 0).any():
        raise ValueError("residuals must be non-negative")
    k = _keep_count(full_count, trim_fraction)
    if k >= r.size:
        total = float(r.sum(dtype=np.float64))
    else:
        part = np.partition(r, k)
        total = float(part[:k].sum(dtype=np.float64))
    return total / (2.0 * full_count)


def _mask_bbox(mask: np.ndarray) -> tuple[slice, slice] | None:
    rows = np.flatnonzero(mask.any(axis=1))
    if rows.size == 0:
        return None
    cols = np.flatnonzero(mask.any(axis=0))
    # +1 keeps the forward-difference neighbors of masked pixels in the slice
    return (
        slice(rows[0], min(rows[-1] + 2, mask.shape[0])),
        slice(cols[0], min(cols[-1] + 2, mask.shape[1])),
    )


def _tom_region_values(pred: DepthMap, gt: DepthMap, tom_mask):
    """Masked, mutually valid gradient magnitudes of pred and gt (row-major order)."""
    if pred.shape != gt.shape:
        raise ValueError(f"depth shapes differ: {pred.shape} vs {gt.shape}")
    mask = np.asarray(tom_mask, dtype=bool)
    if mask.shape != pred.shape:
        raise ValueError(f"mask shape {mask.shape} does not match depth shape {pred.shape}")
    box = _mask_bbox(mask)
    if box is None:
        return np.empty(0), np.empty(0)
    # the +1-padded bounding box sees every sample the masked magnitudes read,
    # so cropping before differencing changes nothing but the work done
    gp = _grad_mag(pred.values[box], pred.validity[box])
    gg = _grad_mag(gt.values[box], gt.validity[box])
    region = mask[box] & gp.validity & gg.validity
    return gp.magnitude[region], gg.magnitude[region]


def tom_region_count(pred: DepthMap, gt: DepthMap, tom_mask, valid=None) -> int:
    """Number of masked pixels whose gradient magnitudes are defined on both maps."""
    mask = np.asarray(tom_mask, dtype=bool)
    if valid is not None:
        mask = mask & np.asarray(valid, dtype=bool)
    xs, _ = _tom_region_values(pred, gt, mask)
    return int(xs.size)


def _normalized(values: np.ndarray, eps: float) -> np.ndarray:
    params = robust_center_scale(values)
    denom = max(params.scale, eps)
    return (values.astype(np.float64, copy=False) - params.shift) / denom


def tom_loss(pred: DepthMap, gt: DepthMap, tom_mask, cfg: LossConfig = LossConfig()) -> float:
    """Trimmed mean absolute residual between robustly normalized gradient magnitudes.

    Both magnitude fields are restricted to the masked pixels where they are
    defined, each is normalized to zero median and unit MAD (floored at
    ``cfg.eps``), and the residuals ``|x - y|`` feed ``trimmed_mae``. The
    value is invariant to affine reparametrization of either depth map.
    """
    xs, ys = _tom_region_values(pred, gt, tom_mask)
    m = xs.size
    if m < cfg.min_mask_pixels:
        raise InsufficientMaskError(
            f"ToM region has {m} usable pixels, need {cfg.min_mask_pixels}"
        )
    r = np.abs(_normalized(xs, cfg.eps) - _normalized(ys, cfg.eps))
    return trimmed_mae(r, m, cfg.trim_fraction)


def lstsq_tom_loss(pred: DepthMap, gt: DepthMap, tom_mask, cfg: LossConfig = LossConfig()) -> float:
    """Mean L1 residual after least-squares alignment of masked gradient magnitudes."""
    xs, ys = _tom_region_values(pred, gt, tom_mask)
    m = xs.size
    if m < max(cfg.min_mask_pixels, 2):
        raise InsufficientMaskError(
            f"ToM region has {m} usable pixels, need {max(cfg.min_mask_pixels, 2)}"
        )
    s, t = lstsq_scale_shift(xs, ys)
    resid = np.abs(s * xs.astype(np.float64, copy=False) + t - ys)
    return float(resid.sum(dtype=np.float64)) / m


def _ssi_region(pred: DepthMap, gt: DepthMap, valid):
    if pred.shape != gt.shape:
        raise ValueError(f"depth shapes differ: {pred.shape} vs {gt.shape}")
    region = pred.validity & gt.validity
    if valid is not None:
        v = np.asarray(valid, dtype=bool)
        if v.shape != pred.shape:
            raise ValueError(f"valid mask shape {v.shape} does not match {pred.shape}")
        region = region & v
    return region


def ssi_loss(pred: DepthMap, gt: DepthMap, valid=None, cfg: LossConfig = LossConfig()) -> float:
    """Scale-shift-invariant trimmed loss on depth values over the valid region.

    Same pipeline as ``tom_loss`` applied to the raw depth values: robust
    normalization of both fields, absolute residuals, trimmed mean with the
    full-count divisor.
    """
    region = _ssi_region(pred, gt, valid)
    xs = pred.values[region]
    ys = gt.values[region]
    m = xs.size
    if m < cfg.min_mask_pixels:
        raise InsufficientMaskError(
            f"valid region has {m} pixels, need {cfg.min_mask_pixels}"
        )
    r = np.abs(_normalized(xs, cfg.eps) - _normalized(ys, cfg.eps))
    return trimmed_mae(r, m, cfg.trim_fraction)


def total_loss(
    pred: DepthMap,
    gt: DepthMap,
    tom_mask,
    valid=None,
    cfg: LossConfig = LossConfig(),
) -> float:
    """ToM gradient loss plus SSI value loss.

    The ToM term falls back to 0 when its usable region is below
    ``cfg.min_mask_pixels`` so batch pipelines over mixed data never abort.
    When ``valid`` is given it restricts both terms.
    """
    ssi = ssi_loss(pred, gt, valid, cfg)
    tmask = np.asarray(tom_mask, dtype=bool)
    if valid is not None:
        tmask = tmask & np.asarray(valid, dtype=bool)
    try:
        tom = tom_loss(pred, gt, tmask, cfg)
    except InsufficientMaskError:
        tom = 0.0
    return tom + ssi


# ---------------------------------------------------------------------------
# Analytic gradient (frozen-constant semantics)
# ---------------------------------------------------------------------------

def _frozen_kept_weights(x_hat, y_hat, m, trim_fraction):
    """Kept-set indices (stable ties by position) and d(loss)/d(x_hat) signs."""
    diff = x_hat - y_hat
    r = np.abs(diff)
    k = _keep_count(m, trim_fraction)
    kept = np.argsort(r, kind="stable")[:k]
    return kept, np.sign(diff[kept])


def loss_gradient(
    pred: DepthMap,
    gt: DepthMap,
    tom_mask,
    valid=None,
    cfg: LossConfig = LossConfig(),
) -> np.ndarray:
    """Derivative of ``total_loss`` w.r.t. each prediction sample, frozen-constant.

    The medians, MADs and trim selection sets of both terms are treated as
    constants evaluated at the current prediction; the chain rule then runs
    through normalization, the absolute residual (subgradient 0 at zero) and
    the forward-difference magnitude operator (subgradient 0 at zero
    magnitude). Terms whose region is undersized contribute zero, matching
    ``total_loss``.
    """
    h, w = pred.shape
    grad = np.zeros((h, w), dtype=np.float64)
    flat = grad.ravel()

    # SSI term: direct dependence of each valid pixel on its own residual.
    region = _ssi_region(pred, gt, valid)
    idx = np.flatnonzero(region.ravel())
    m = idx.size
    if m >= cfg.min_mask_pixels:
        xs = pred.values.ravel()[idx].astype(np.float64)
        ys = gt.values.ravel()[idx].astype(np.float64)
        px = robust_center_scale(xs)
        py = robust_center_scale(ys)
        sp = max(px.scale, cfg.eps)
        x_hat = (xs - px.shift) / sp
        y_hat = (ys - py.shift) / max(py.scale, cfg.eps)
        kept, signs = _frozen_kept_weights(x_hat, y_hat, m, cfg.trim_fraction)
        np.add.at(flat, idx[kept], signs / (2.0 * m * sp))

    # ToM term: chain through the gradient-magnitude operator.
    tmask = np.asarray(tom_mask, dtype=bool)
    if valid is not None:
        tmask = tmask & np.asarray(valid, dtype=bool)
    gp = gradient_magnitude(pred)
    gg = gradient_magnitude(gt)
    tregion = tmask & gp.validity & gg.validity
    tidx = np.flatnonzero(tregion.ravel())
    mt = tidx.size
    if mt >= cfg.min_mask_pixels:
        xs = gp.magnitude.ravel()[tidx].astype(np.float64)
        ys = gg.magnitude.ravel()[tidx].astype(np.float64)
        px = robust_center_scale(xs)
        py = robust_center_scale(ys)
        sp = max(px.scale, cfg.eps)
        x_hat = (xs - px.shift) / sp
        y_hat = (ys - py.shift) / max(py.scale, cfg.eps)
        kept, signs = _frozen_kept_weights(x_hat, y_hat, mt, cfg.trim_fraction)
        weights = signs / (2.0 * mt * sp)

        kidx = tidx[kept]
        rows, cols = np.unravel_index(kidx, (h, w))
        mag = xs[kept]
        nonzero = mag > 0.0
        rows, cols, weights, mag = rows[nonzero], cols[nonzero], weights[nonzero], mag[nonzero]
        v = pred.values.astype(np.float64, copy=False)

        has_x = cols < w - 1
        if has_x.any():
            r0, c0 = rows[has_x], cols[has_x]
            gx = v[r0, c0 + 1] - v[r0, c0]
            wx = weights[has_x] * gx / mag[has_x]
            np.add.at(grad, (r0, c0 + 1), wx)
            np.add.at(grad, (r0, c0), -wx)
        has_y = rows < h - 1
        if has_y.any():
            r0, c0 = rows[has_y], cols[has_y]
            gy = v[r0 + 1, c0] - v[r0, c0]
            wy = weights[has_y] * gy / mag[has_y]
            np.add.at(grad, (r0 + 1, c0), wy)
            np.add.at(grad, (r0, c0), -wy)

    return grad
