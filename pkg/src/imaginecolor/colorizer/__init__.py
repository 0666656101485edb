from .features import VGGFeatures, default_extractor
from .model import (
    CheckpointError,
    ColorizerConfig,
    ColorizerModel,
    colorize,
    load_checkpoint,
    predict_chroma,
    read_manifest,
    save_checkpoint,
)
from .warp import WarpedReference, warp_reference, warp_tensors

__all__ = [
    "CheckpointError",
    "ColorizerConfig",
    "ColorizerModel",
    "VGGFeatures",
    "WarpedReference",
    "colorize",
    "default_extractor",
    "load_checkpoint",
    "predict_chroma",
    "read_manifest",
    "save_checkpoint",
    "warp_reference",
    "warp_tensors",
]
