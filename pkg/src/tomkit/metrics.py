"""Masked-region depth evaluation: delta accuracies, Abs Rel, RMSE, Log MAE.

Evaluation splits the valid pixels into three regions (All, the ToM
transparent-or-mirror surface region, everything Other) and reports
six metrics per region. Predictions in affine-invariant units can be aligned
to the ground truth with a single least-squares scale/shift fitted once on
the All region and reused for the sub-regions.

Conventions, declared so independent implementations agree exactly:

* delta_tau counts ``max(pred/gt, gt/pred) < tau`` with strict inequality;
* pixels with non-positive ground truth are excluded from all metrics;
* prediction samples are clamped to ``>= 1e-6`` for the ratio and log
  metrics, so failures stay finite and penalized; Abs Rel and RMSE see the
  raw prediction;
* ``log_mae`` uses base-10 logarithms by default (``log_base`` configures).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .align import AffineParams, lstsq_scale_shift
from .errors import EmptyRegionError
from .imagegrid import DepthMap

__all__ = [
    "RegionMetrics",
    "MetricsReport",
    "region_partition",
    "compute_metrics",
    "evaluate",
    "PRED_CLAMP_MIN",
]

PRED_CLAMP_MIN = 1e-6
_CHUNK = 1 << 18
_TAUS = (1.05, 1.15, 1.25)


@dataclass(frozen=True)
class RegionMetrics:
    delta_105: float
    delta_115: float
    delta_125: float
    abs_rel: float
    rmse: float
    log_mae: float
    count: int

    def to_dict(self) -> dict:
        return {
            "delta_105": self.delta_105,
            "delta_115": self.delta_115,
            "delta_125": self.delta_125,
            "abs_rel": self.abs_rel,
            "rmse": self.rmse,
            "log_mae": self.log_mae,
            "count": self.count,
        }


@dataclass
class MetricsReport:
    align_mode: str
    affine: AffineParams | None
    regions: dict  # "all" / "tom" / "other" -> RegionMetrics or None (region absent)

    def to_dict(self) -> dict:
        return {
            "align": self.align_mode,
            "s": self.affine.scale if self.affine else None,
            "t": self.affine.shift if self.affine else None,
            "regions": {
                name: (rm.to_dict() if rm is not None else None)
                for name, rm in self.regions.items()
            },
        }


def region_partition(gt_valid, tom_mask):
    """Split validity into (All, ToM, Other); the latter two partition the first."""
    gv = np.asarray(gt_valid, dtype=bool)
    tm = np.asarray(tom_mask, dtype=bool)
    if gv.shape != tm.shape:
        raise ValueError(f"mask shapes differ: {gv.shape} vs {tm.shape}")
    return gv, gv & tm, gv & ~tm


class _Sums:
    __slots__ = ("n", "d105", "d115", "d125", "abs_rel", "sq", "log")

    def __init__(self):
        self.n = 0
        self.d105 = self.d115 = self.d125 = 0
        self.abs_rel = self.sq = self.log = 0.0

    def add(self, other: "_Sums"):
        self.n += other.n
        self.d105 += other.d105
        self.d115 += other.d115
        self.d125 += other.d125
        self.abs_rel += other.abs_rel
        self.sq += other.sq
        self.log += other.log


def _accumulate(p: np.ndarray, g: np.ndarray, log_base: float, affine=None) -> _Sums:
    """Per-pixel metric sums, chunked so the temporaries stay cache-resident.

    With ``affine`` the prediction chunk is replaced by
    ``max(scale * p + shift, PRED_CLAMP_MIN)`` on the fly, the form every
    metric sees after least-squares alignment.
    """
    out = _Sums()
    out.n = p.size
    log_fn = np.log10 if log_base == 10.0 else np.log
    log_scale = 1.0 if log_base in (10.0, math.e) else 1.0 / math.log(log_base)
    if affine is not None:
        scale = p.dtype.type(affine.scale) if p.dtype.kind == "f" else affine.scale
        shift = p.dtype.type(affine.shift) if p.dtype.kind == "f" else affine.shift
    for i in range(0, p.size, _CHUNK):
        pc = p[i : i + _CHUNK]
        gc = g[i : i + _CHUNK]
        if affine is not None:
            pc = np.maximum(scale * pc + shift, PRED_CLAMP_MIN)
            pcl = pc
        else:
            pcl = np.maximum(pc, PRED_CLAMP_MIN)
        r1 = pcl / gc
        r2 = gc / pcl
        m = np.maximum(r1, r2)
        out.d105 += int(np.count_nonzero(m < _TAUS[0]))
        out.d115 += int(np.count_nonzero(m < _TAUS[1]))
        out.d125 += int(np.count_nonzero(m < _TAUS[2]))
        d = pc - gc
        out.sq += float(np.sum(d * d, dtype=np.float64))
        out.abs_rel += float(np.sum(np.abs(d) / gc, dtype=np.float64))
        ld = np.abs(log_fn(pcl) - log_fn(gc))
        out.log += float(np.sum(ld, dtype=np.float64)) * log_scale
    return out


def _to_metrics(s: _Sums) -> RegionMetrics:
    n = s.n
    return RegionMetrics(
        delta_105=s.d105 / n,
        delta_115=s.d115 / n,
        delta_125=s.d125 / n,
        abs_rel=s.abs_rel / n,
        rmse=math.sqrt(s.sq / n),
        log_mae=s.log / n,
        count=n,
    )


def compute_metrics(pred, gt, region, log_base: float = 10.0) -> RegionMetrics:
    """Six metrics over the region pixels with positive ground truth.

    ``pred`` and ``gt`` are value grids; validity must already be folded into
    ``region``. Raises ``EmptyRegionError`` when no pixel qualifies.
    """
    p = np.asarray(pred)
    g = np.asarray(gt)
    r = np.asarray(region, dtype=bool)
    if p.shape != g.shape or p.shape != r.shape:
        raise ValueError(f"shapes differ: {p.shape}, {g.shape}, {r.shape}")
    sel = r & (g > 0)
    if not sel.any():
        raise EmptyRegionError("region contains no pixels with positive ground truth")
    return _to_metrics(_accumulate(p[sel], g[sel], log_base))


def evaluate(
    pred: DepthMap,
    gt: DepthMap,
    tom_mask,
    align_mode: str = "none",
    log_base: float = 10.0,
) -> MetricsReport:
    """Per-region evaluation of a prediction against ground truth.

    With ``align_mode="lstsq"`` a single scale/shift is fitted on the All
    region (mutual validity), applied to the prediction (clamped to
    ``>= 1e-6``), and reused for every region. Empty ToM/Other regions are
    reported as absent rather than zero. The All row aggregates the partial
    sums of the ToM/Other partition, which equals computing it directly up to
    float summation order.
    """
    if align_mode not in ("none", "lstsq"):
        raise ValueError(f"align_mode must be 'none' or 'lstsq', got {align_mode!r}")
    if pred.shape != gt.shape:
        raise ValueError(f"depth shapes differ: {pred.shape} vs {gt.shape}")
    base_valid = pred.validity & gt.validity
    all_m, tom_m, other_m = region_partition(base_valid, tom_mask)

    affine = None
    if align_mode == "lstsq":
        affine = lstsq_scale_shift(pred.values, gt.values, all_m)

    pv = pred.values
    gv = gt.values
    pos = gv > 0
    regions: dict[str, RegionMetrics | None] = {}
    sums: dict[str, _Sums | None] = {}
    for name, m in (("tom", tom_m), ("other", other_m)):
        sel = m & pos
        if sel.any():
            sums[name] = _accumulate(pv[sel], gv[sel], log_base, affine=affine)
        else:
            sums[name] = None
    if sums["tom"] is None and sums["other"] is None:
        raise EmptyRegionError("no valid pixels with positive ground truth")
    total = _Sums()
    for s in sums.values():
        if s is not None:
            total.add(s)
    regions["all"] = _to_metrics(total)
    regions["tom"] = _to_metrics(sums["tom"]) if sums["tom"] is not None else None
    regions["other"] = _to_metrics(sums["other"]) if sums["other"] is not None else None
    return MetricsReport(align_mode=align_mode, affine=affine, regions=regions)
