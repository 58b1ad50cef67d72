"""Core grid conventions, bit-exact file I/O and the shared percentile utility.

Grids are plain numpy arrays: shape ``(H, W)`` for single-channel data and
``(H, W, 3)`` for RGB, row-major, channel-interleaved. Files store 32-bit
floats; in-memory math may use any float dtype. Depth maps pair a value grid
with a boolean validity mask (``True`` where the sample is defined and
finite).

Supported formats:

* PFM: ``PF`` (3-channel) / ``Pf`` (1-channel) magic, ``<width> <height>``
  dims line, scale line whose sign selects endianness (negative =
  little-endian), rows stored bottom-up. The writer always emits
  little-endian with scale line ``-1.0``; round trips are bitwise.
* 8-bit grayscale PNG masks: pixel > 127 reads as True, writer emits 255/0.
* 16-bit grayscale PNG depth with a ``<name>.meta.json`` sidecar holding
  ``{"scale": <float>, "invalid_value": 0}``; stored value =
  ``round(depth * scale)``, pixels equal to ``invalid_value`` are invalid.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import FileFormatError

__all__ = [
    "DepthMap",
    "as_grid",
    "read_pfm",
    "write_pfm",
    "read_mask_png",
    "write_mask_png",
    "read_depth",
    "write_depth",
    "read_depth_png",
    "write_depth_png",
    "percentile",
]

_WHITESPACE = b" \t\n\r\f\v"


def as_grid(data) -> np.ndarray:
    """Validate and return an array under the grid convention.

    Accepts ``(H, W)``, ``(H, W, 1)`` (squeezed to 2-D) or ``(H, W, 3)``
    float data. Raises ``ValueError`` for anything else.
    """
    arr = np.asarray(data)
    if arr.ndim == 3 and arr.shape[2] == 1:
        arr = arr[:, :, 0]
    if arr.ndim not in (2, 3):
        raise ValueError(f"grid must be 2-D or 3-D, got shape {arr.shape}")
    if arr.ndim == 3 and arr.shape[2] != 3:
        raise ValueError(f"grid channel count must be 1 or 3, got {arr.shape[2]}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"grid must have positive height and width, got {arr.shape}")
    if not np.issubdtype(arr.dtype, np.floating):
        arr = arr.astype(np.float32)
    return arr


@dataclass
class DepthMap:
    """A single-channel depth grid plus per-pixel validity.

    Every valid sample must be finite; invalid samples may hold anything
    (NaN by convention when written to disk).
    """

    values: np.ndarray
    validity: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        self.values = np.asarray(self.values)
        if self.values.ndim != 2:
            raise ValueError(f"depth values must be 2-D, got shape {self.values.shape}")
        if not np.issubdtype(self.values.dtype, np.floating):
            self.values = self.values.astype(np.float32)
        if self.validity is None:
            self.validity = np.isfinite(self.values)
        else:
            self.validity = np.asarray(self.validity, dtype=bool)
            if self.validity.shape != self.values.shape:
                raise ValueError("validity shape must match values shape")
            if not np.isfinite(self.values[self.validity]).all():
                raise ValueError("valid depth samples must be finite")

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape  # type: ignore[return-value]


# ---------------------------------------------------------------------------
# PFM
# ---------------------------------------------------------------------------

def _next_token(buf: bytes, pos: int) -> tuple[bytes, int]:
    n = len(buf)
    while pos < n and buf[pos] in _WHITESPACE:
        pos += 1
    start = pos
    while pos < n and buf[pos] not in _WHITESPACE:
        pos += 1
    if start == pos:
        raise FileFormatError("truncated PFM header")
    return buf[start:pos], pos


def read_pfm(path) -> np.ndarray:
    """Read a PFM file into a top-down ``(H, W)`` or ``(H, W, 3)`` float32 grid."""
    buf = Path(path).read_bytes()
    magic, pos = _next_token(buf, 0)
    if magic == b"PF":
        channels = 3
    elif magic == b"Pf":
        channels = 1
    else:
        raise FileFormatError(f"not a PFM file (magic {magic!r})")
    wtok, pos = _next_token(buf, pos)
    htok, pos = _next_token(buf, pos)
    stok, pos = _next_token(buf, pos)
    try:
        width, height = int(wtok), int(htok)
        scale = float(stok)
    except ValueError as exc:
        raise FileFormatError(f"malformed PFM header: {exc}") from None
    if width < 1 or height < 1:
        raise FileFormatError(f"invalid PFM dimensions {width}x{height}")
    if scale == 0.0 or not math.isfinite(scale):
        raise FileFormatError(f"invalid PFM scale line {scale!r}")
    pos += 1  # single whitespace byte after the scale token
    payload = buf[pos:]
    count = width * height * channels
    if len(payload) != count * 4:
        raise FileFormatError(
            f"PFM payload holds {len(payload)} bytes, expected {count * 4}"
        )
    dtype = "<f4" if scale < 0 else ">f4"
    data = np.frombuffer(payload, dtype=dtype, count=count)
    if channels == 3:
        grid = data.reshape(height, width, 3)
    else:
        grid = data.reshape(height, width)
    # rows are stored bottom-up
    return np.ascontiguousarray(np.flipud(grid)).astype(np.float32, copy=False)


def write_pfm(grid, path, allow_nonfinite: bool = False) -> None:
    """Write a grid as little-endian PFM (scale line ``-1.0``).

    Non-finite samples are refused unless ``allow_nonfinite`` is set (used by
    the depth writer, which encodes invalid pixels as NaN).
    """
    arr = as_grid(grid)
    if not allow_nonfinite and not np.isfinite(arr).all():
        raise ValueError("grid contains non-finite samples")
    channels = 1 if arr.ndim == 2 else 3
    magic = "PF" if channels == 3 else "Pf"
    height, width = arr.shape[0], arr.shape[1]
    header = f"{magic}\n{width} {height}\n-1.0\n".encode("ascii")
    payload = np.flipud(arr).astype("<f4").tobytes()
    Path(path).write_bytes(header + payload)


# ---------------------------------------------------------------------------
# PNG masks and 16-bit depth
# ---------------------------------------------------------------------------

def read_mask_png(path) -> np.ndarray:
    """Read an 8-bit grayscale PNG as a boolean mask (value > 127 is True)."""
    with Image.open(path) as im:
        if im.format != "PNG":
            raise FileFormatError(f"expected a PNG file, got {im.format}")
        if im.mode != "L":
            raise FileFormatError(
                f"mask PNG must be 8-bit grayscale, got mode {im.mode!r}"
            )
        return np.asarray(im) > 127


def write_mask_png(mask, path) -> None:
    """Write a boolean mask as an 8-bit grayscale PNG (255 for True, 0 for False)."""
    arr = np.asarray(mask)
    if arr.ndim != 2:
        raise ValueError(f"mask must be 2-D, got shape {arr.shape}")
    img = np.where(arr.astype(bool), 255, 0).astype(np.uint8)
    Image.fromarray(img, mode="L").save(path, format="PNG")


def _sidecar_path(path) -> Path:
    return Path(path).with_suffix(".meta.json")


def read_depth_png(path) -> DepthMap:
    """Read 16-bit grayscale PNG depth with its ``<name>.meta.json`` sidecar."""
    sidecar = _sidecar_path(path)
    if not sidecar.exists():
        raise FileFormatError(f"missing depth sidecar {sidecar}")
    meta = json.loads(sidecar.read_text())
    scale = float(meta["scale"])
    invalid_value = int(meta.get("invalid_value", 0))
    if scale <= 0:
        raise FileFormatError(f"depth sidecar scale must be positive, got {scale}")
    with Image.open(path) as im:
        if im.mode not in ("I", "I;16"):
            raise FileFormatError(
                f"depth PNG must be 16-bit grayscale, got mode {im.mode!r}"
            )
        raw = np.asarray(im).astype(np.int64)
    validity = raw != invalid_value
    values = (raw / scale).astype(np.float32)
    return DepthMap(values, validity)


def write_depth_png(depth: DepthMap, path, scale: float = 1000.0) -> None:
    """Write depth as 16-bit PNG (stored = round(depth * scale)) plus sidecar.

    Invalid pixels are stored as 0. Valid pixels that quantize to 0 or exceed
    65535 are out of the representable range and rejected.
    """
    if scale <= 0:
        raise ValueError("scale must be positive")
    q = np.rint(depth.values.astype(np.float64) * scale)
    valid = depth.validity
    if valid.any():
        qv = q[valid]
        if (qv < 1).any() or (qv > 65535).any():
            raise ValueError("valid depth values out of 16-bit range at this scale")
    q = np.where(valid, q, 0).astype(np.uint16)
    Image.fromarray(q).save(path, format="PNG")
    _sidecar_path(path).write_text(
        json.dumps({"scale": scale, "invalid_value": 0}, sort_keys=True) + "\n"
    )


def read_depth(path) -> DepthMap:
    """Read a depth map from ``.pfm`` (non-finite marked invalid) or 16-bit ``.png``."""
    p = Path(path)
    if p.suffix.lower() == ".pfm":
        grid = read_pfm(p)
        if grid.ndim != 2:
            raise FileFormatError(f"depth PFM must be single-channel: {p}")
        return DepthMap(grid, np.isfinite(grid))
    if p.suffix.lower() == ".png":
        return read_depth_png(p)
    raise FileFormatError(f"unsupported depth format {p.suffix!r}")


def write_depth(depth: DepthMap, path, png_scale: float = 1000.0) -> None:
    """Write a depth map; invalid pixels become NaN in PFM, 0 in 16-bit PNG."""
    p = Path(path)
    if p.suffix.lower() == ".pfm":
        values = depth.values.astype(np.float32, copy=True)
        values[~depth.validity] = np.nan
        write_pfm(values, p, allow_nonfinite=True)
    elif p.suffix.lower() == ".png":
        write_depth_png(depth, p, scale=png_scale)
    else:
        raise FileFormatError(f"unsupported depth format {p.suffix!r}")


# ---------------------------------------------------------------------------
# Percentile
# ---------------------------------------------------------------------------

def percentile(values, p: float) -> float:
    """Nearest-rank percentile of a sample set.

    Sorting ascending, returns the element at 1-based rank
    ``ceil(p * N / 100)`` clamped to ``[1, N]``; ``p = 0`` returns the
    minimum. Nearest-rank (rather than interpolated) semantics commute
    exactly with strictly increasing transforms of the samples.
    """
    v = np.asarray(values).ravel()
    if v.size == 0:
        raise ValueError("percentile of an empty sample set")
    if not np.isfinite(v).all():
        raise ValueError("percentile requires finite samples")
    if not 0.0 <= p <= 100.0:
        raise ValueError(f"percentile must be in [0, 100], got {p}")
    n = v.size
    k = math.ceil(p * n / 100.0)
    k = min(max(k, 1), n)
    return float(np.partition(v, k - 1)[k - 1])
