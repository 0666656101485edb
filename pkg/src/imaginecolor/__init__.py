"""Automatic image colorization guided by synthesized references."""
from .colorspace import lab_to_rgb, luminance_of, rgb_to_lab
from .composition import (
    EXCLUDED,
    CompositionAssignment,
    ComposedReference,
    assemble_reference,
    assign_segments,
    edit_assignment,
)
from .estimator import ImaginationColorizer
from .imagination import LatentCode, ReferenceSet, SegmentationMap, extract_context, sample_references
from .metrics import colorfulness, diversity_report, evaluate_directory
from .pipeline import PipelineError, PipelineResult, run_pipeline

__version__ = "0.1.0"

__all__ = [
    "EXCLUDED",
    "ComposedReference",
    "CompositionAssignment",
    "ImaginationColorizer",
    "LatentCode",
    "PipelineError",
    "PipelineResult",
    "ReferenceSet",
    "SegmentationMap",
    "assemble_reference",
    "assign_segments",
    "colorfulness",
    "diversity_report",
    "edit_assignment",
    "evaluate_directory",
    "extract_context",
    "lab_to_rgb",
    "luminance_of",
    "rgb_to_lab",
    "run_pipeline",
    "sample_references",
]
