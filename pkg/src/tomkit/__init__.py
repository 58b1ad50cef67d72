"""tomkit: depth-estimation tooling for transparent and mirror surfaces.

Provides percentile-anchored tone-mapping augmentation, gradient-domain
regional guidance losses with robust scale/shift alignment, masked-region
depth metrics, reflectance-based mask generation, latent-mean multi-exposure
fusion with a pluggable codec, and a synthetic mirror-scene generator for
verification.
"""

__version__ = "0.1.0"

from .align import AffineParams, lstsq_scale_shift, normalize_field, robust_center_scale
from .errors import (
    CodecError,
    DegenerateImageError,
    DegenerateInputError,
    EmptyRegionError,
    FileFormatError,
    InsufficientMaskError,
    InsufficientSamplesError,
    TomkitError,
)
from .fusion import CodecSpec, decode, encode, fuse_images, read_lat, write_lat
from .imagegrid import (
    DepthMap,
    as_grid,
    percentile,
    read_depth,
    read_depth_png,
    read_mask_png,
    read_pfm,
    write_depth,
    write_depth_png,
    write_mask_png,
    write_pfm,
)
from .loss import (
    GradField,
    LossConfig,
    gradient_magnitude,
    loss_gradient,
    lstsq_tom_loss,
    ssi_loss,
    tom_loss,
    tom_region_count,
    total_loss,
    trimmed_mae,
)
from .maskgen import MaskGenConfig, reflectance_to_mask
from .metrics import MetricsReport, RegionMetrics, compute_metrics, evaluate, region_partition
from .synth import MirrorScene, SceneConfig, make_mirror_scene
from .tonemap import AugmentSpec, TonemapParams, apply_tonemap, compute_scale, random_augment

__all__ = [
    "__version__",
    "AffineParams",
    "AugmentSpec",
    "CodecError",
    "CodecSpec",
    "DegenerateImageError",
    "DegenerateInputError",
    "DepthMap",
    "EmptyRegionError",
    "FileFormatError",
    "GradField",
    "InsufficientMaskError",
    "InsufficientSamplesError",
    "LossConfig",
    "MaskGenConfig",
    "MetricsReport",
    "MirrorScene",
    "RegionMetrics",
    "SceneConfig",
    "TomkitError",
    "TonemapParams",
    "apply_tonemap",
    "as_grid",
    "compute_metrics",
    "compute_scale",
    "decode",
    "encode",
    "evaluate",
    "fuse_images",
    "gradient_magnitude",
    "loss_gradient",
    "lstsq_scale_shift",
    "lstsq_tom_loss",
    "make_mirror_scene",
    "normalize_field",
    "percentile",
    "random_augment",
    "read_depth",
    "read_depth_png",
    "read_lat",
    "read_mask_png",
    "read_pfm",
    "reflectance_to_mask",
    "region_partition",
    "robust_center_scale",
    "ssi_loss",
    "tom_loss",
    "tom_region_count",
    "total_loss",
    "trimmed_mae",
    "write_depth",
    "write_depth_png",
    "write_lat",
    "write_mask_png",
    "write_pfm",
]
