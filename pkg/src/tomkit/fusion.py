"""Multi-exposure fusion by averaging latent representations behind a codec.

Images of the same scene under different lighting are encoded into latents,
the latents are averaged elementwise, and the mean is decoded back into a
single image. The codec is pluggable: the built-in identity codec makes
fusion an exact pixelwise mean, while an external codec is any executable
honoring the subprocess/file protocol

    <command...> encode <in.pfm> <out.lat>
    <command...> decode <in.lat> <out.pfm>

with exit code 0 on success. The ``.lat`` container is normative so codecs
can be written in any language: ASCII line ``TOMLAT1``, ASCII line
``<channels> <height> <width>``, then little-endian 32-bit floats in C,H,W
row-major order.
"""

from __future__ import annotations

import subprocess
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import CodecError, FileFormatError
from .imagegrid import as_grid, read_pfm, write_pfm

__all__ = ["CodecSpec", "read_lat", "write_lat", "encode", "decode", "fuse_images"]

LAT_MAGIC = b"TOMLAT1\n"
_PROCESS_TIMEOUT = 600.0


@dataclass(frozen=True)
class CodecSpec:
    kind: str = "identity"  # "identity" | "external"
    command: tuple = ()
    workdir: str | None = None

    def __post_init__(self):
        if self.kind not in ("identity", "external"):
            raise ValueError(f"codec kind must be 'identity' or 'external', got {self.kind!r}")
        if self.kind == "external" and not self.command:
            raise ValueError("external codec requires a non-empty command")

    @classmethod
    def identity(cls) -> "CodecSpec":
        return cls()

    @classmethod
    def external(cls, command, workdir=None) -> "CodecSpec":
        return cls(kind="external", command=tuple(command), workdir=workdir)


def write_lat(latent, path) -> None:
    """Write a (C, H, W) float32 latent in the normative container format."""
    arr = np.asarray(latent, dtype=np.float32)
    if arr.ndim != 3:
        raise ValueError(f"latent must be 3-D (C, H, W), got shape {arr.shape}")
    c, h, w = arr.shape
    header = LAT_MAGIC + f"{c} {h} {w}\n".encode("ascii")
    Path(path).write_bytes(header + np.ascontiguousarray(arr).astype("<f4").tobytes())


def read_lat(path) -> np.ndarray:
    """Read a ``.lat`` file into a (C, H, W) float32 array."""
    buf = Path(path).read_bytes()
    if not buf.startswith(LAT_MAGIC):
        raise FileFormatError(f"{path}: missing latent magic line")
    nl = buf.find(b"\n", len(LAT_MAGIC))
    if nl < 0:
        raise FileFormatError(f"{path}: truncated latent header")
    try:
        c, h, w = (int(tok) for tok in buf[len(LAT_MAGIC) : nl].split())
    except ValueError:
        raise FileFormatError(f"{path}: malformed latent dims line") from None
    if c < 1 or h < 1 or w < 1:
        raise FileFormatError(f"{path}: invalid latent dims {c}x{h}x{w}")
    payload = buf[nl + 1 :]
    if len(payload) != c * h * w * 4:
        raise FileFormatError(
            f"{path}: latent payload holds {len(payload)} bytes, expected {c * h * w * 4}"
        )
    return np.frombuffer(payload, dtype="<f4").reshape(c, h, w).astype(np.float32, copy=False)


def _run_codec(codec: CodecSpec, args: list) -> None:
    cmd = [*codec.command, *args]
    try:
        proc = subprocess.run(
            cmd, capture_output=True, text=True, timeout=_PROCESS_TIMEOUT
        )
    except OSError as exc:
        raise CodecError(f"failed to launch codec {cmd[0]!r}: {exc}") from None
    except subprocess.TimeoutExpired:
        raise CodecError(f"codec {cmd[0]!r} timed out") from None
    if proc.returncode != 0:
        detail = proc.stderr.strip() or proc.stdout.strip()
        raise CodecError(f"codec exited with {proc.returncode}: {detail}")


def encode(image, codec: CodecSpec = CodecSpec()) -> np.ndarray:
    """Encode an image into a (C, H, W) float32 latent via the codec."""
    arr = as_grid(image)
    if codec.kind == "identity":
        if arr.ndim == 2:
            return arr[np.newaxis].astype(np.float32)
        return np.ascontiguousarray(arr.transpose(2, 0, 1)).astype(np.float32)
    with tempfile.TemporaryDirectory(dir=codec.workdir) as tmp:
        src = Path(tmp) / "in.pfm"
        dst = Path(tmp) / "out.lat"
        write_pfm(arr, src)
        _run_codec(codec, ["encode", str(src), str(dst)])
        if not dst.exists():
            raise CodecError("codec reported success but wrote no latent file")
        return read_lat(dst)


def decode(latent, codec: CodecSpec = CodecSpec()) -> np.ndarray:
    """Decode a (C, H, W) float32 latent back into an image via the codec."""
    arr = np.asarray(latent, dtype=np.float32)
    if arr.ndim != 3:
        raise ValueError(f"latent must be 3-D (C, H, W), got shape {arr.shape}")
    if codec.kind == "identity":
        if arr.shape[0] == 1:
            return arr[0].copy()
        if arr.shape[0] == 3:
            return np.ascontiguousarray(arr.transpose(1, 2, 0))
        raise ValueError(f"identity codec latent must have 1 or 3 channels, got {arr.shape[0]}")
    with tempfile.TemporaryDirectory(dir=codec.workdir) as tmp:
        src = Path(tmp) / "in.lat"
        dst = Path(tmp) / "out.pfm"
        write_lat(arr, src)
        _run_codec(codec, ["decode", str(src), str(dst)])
        if not dst.exists():
            raise CodecError("codec reported success but wrote no image file")
        return read_pfm(dst)


def fuse_images(images, codec: CodecSpec = CodecSpec()) -> np.ndarray:
    """Encode every image, average the latents, decode the mean.

    Accumulation runs in float64 in ascending input order and the mean is
    cast back to float32, so the result is reproducible bit-for-bit and, for
    the identity codec, equals the pixelwise mean exactly.
    """
    imgs = [as_grid(im) for im in images]
    if not imgs:
        raise ValueError("fuse_images requires at least one image")
    shape = imgs[0].shape
    for i, im in enumerate(imgs[1:], start=1):
        if im.shape != shape:
            raise ValueError(f"image {i} shape {im.shape} differs from {shape}")
    latents = [encode(im, codec) for im in imgs]
    dims = latents[0].shape
    for i, lat in enumerate(latents[1:], start=1):
        if lat.shape != dims:
            raise CodecError(f"latent {i} dims {lat.shape} differ from {dims}")
    acc = np.zeros(dims, dtype=np.float64)
    for lat in latents:
        acc += lat
    mean = (acc / len(latents)).astype(np.float32)
    return decode(mean, codec)
