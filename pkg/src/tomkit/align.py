"""Scale/shift estimators and robust field normalization.

Two alignment routes are provided: the closed-form least-squares fit of
``s * x + t`` to ``y``, and the outlier-robust center/scale pair (median and
mean absolute deviation from the median). ``normalize_field`` maps a field to
zero robust center and unit robust scale, the canonical form both sides of a
scale-shift-invariant comparison are brought to.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import DegenerateInputError, InsufficientSamplesError

__all__ = ["AffineParams", "lstsq_scale_shift", "robust_center_scale", "normalize_field"]

_CHUNK = 1 << 18


class AffineParams(NamedTuple):
    scale: float
    shift: float


def _masked_flat(x, mask) -> np.ndarray:
    arr = np.asarray(x)
    if mask is None:
        return arr.ravel()
    m = np.asarray(mask, dtype=bool)
    if m.shape != arr.shape:
        raise ValueError(f"mask shape {m.shape} does not match field shape {arr.shape}")
    if m.all():
        return arr.ravel()
    return arr[m]


def lstsq_scale_shift(x, y, mask=None) -> AffineParams:
    """Closed-form least-squares fit of ``s * x + t`` to ``y`` over a mask.

    ``s = cov(x, y) / var(x)``, ``t = mean(y) - s * mean(x)``. Raises
    ``InsufficientSamplesError`` below 2 masked samples and
    ``DegenerateInputError`` when the masked x values are constant.
    """
    ax, ay = np.asarray(x), np.asarray(y)
    if ax.shape != ay.shape:
        raise ValueError(f"field shapes differ: {ax.shape} vs {ay.shape}")
    xs = _masked_flat(ax, mask)
    ys = _masked_flat(ay, mask)
    n = xs.size
    if n < 2:
        raise InsufficientSamplesError(f"need at least 2 masked samples, got {n}")
    # chunked float64 accumulation: exact enough for the fit, no large temporaries
    sx = sy = sxx = sxy = 0.0
    for i in range(0, n, _CHUNK):
        xc = xs[i : i + _CHUNK].astype(np.float64, copy=False)
        yc = ys[i : i + _CHUNK].astype(np.float64, copy=False)
        sx += float(xc.sum())
        sy += float(yc.sum())
        sxx += float(np.dot(xc, xc))
        sxy += float(np.dot(xc, yc))
    mx, my = sx / n, sy / n
    var = sxx - n * mx * mx
    if var <= 0.0:
        raise DegenerateInputError("masked x field is constant; scale is undefined")
    s = (sxy - n * mx * my) / var
    t = my - s * mx
    return AffineParams(float(s), float(t))


def robust_center_scale(x, mask=None) -> AffineParams:
    """Robust center/scale of a masked field: median and mean absolute deviation.

    ``shift`` is the median (even counts average the two central order
    statistics); ``scale`` is the mean of ``|x - median|`` over the masked
    samples. The scale of a constant field is 0; callers that divide by it
    apply a floor (see ``normalize_field``).
    """
    xs = _masked_flat(np.asarray(x), mask)
    if xs.size == 0:
        raise InsufficientSamplesError("mask selects no samples")
    t = float(np.median(xs))
    s = 0.0
    for i in range(0, xs.size, _CHUNK):
        s += float(np.abs(xs[i : i + _CHUNK].astype(np.float64, copy=False) - t).sum())
    return AffineParams(s / xs.size, t)


def normalize_field(x, mask=None, eps: float = 1e-6) -> np.ndarray:
    """Map masked samples to zero robust center and unit robust scale.

    Returns ``(x - median) / max(mad, eps)`` at masked samples; unmasked
    samples are copied through unchanged. The ``eps`` floor keeps the result
    finite on constant fields.
    """
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    arr = np.asarray(x, dtype=np.float64)
    params = robust_center_scale(arr, mask)
    denom = max(params.scale, eps)
    out = arr.copy()
    if mask is None:
        out -= params.shift
        out /= denom
    else:
        m = np.asarray(mask, dtype=bool)
        out[m] = (arr[m] - params.shift) / denom
    return out
