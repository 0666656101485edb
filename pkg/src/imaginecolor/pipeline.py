"""Imagine -> compose -> colorize, with every intermediate kept for audit."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .colorizer import colorize
from .colorspace import lightness_of
from .composition import CompositionAssignment, ComposedReference, assemble_reference, assign_segments
from .imagination import DEFAULT_N_REFERENCES, ReferenceSet, SegmentationMap, extract_context, sample_references

STAGES = ("input", "imagination", "composition", "colorization")


class PipelineError(RuntimeError):
    def __init__(self, stage, message):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage
        self.message = message

    def to_dict(self):
        return {"code": "pipeline_error", "stage": self.stage, "message": self.message}


@dataclass
class PipelineResult:
    result: np.ndarray
    composed: ComposedReference
    segmentation: SegmentationMap
    assignment: CompositionAssignment
    references: ReferenceSet
    lightness: np.ndarray
    clipped: np.ndarray | None = None  # pixels whose predicted color left the sRGB gamut


def default_seeds(n, base=0):
    return list(range(base, base + n))


def imagine(gray, n=DEFAULT_N_REFERENCES, seeds=None, segmenter="toy", generator="toy"):
    """Segment ``gray`` and sample ``n`` references.  Returns (L, ReferenceSet)."""
    seeds = default_seeds(n) if seeds is None else list(seeds)
    try:
        L = lightness_of(gray)
    except Exception as exc:
        raise PipelineError("input", str(exc)) from exc
    try:
        seg = extract_context(L, segmenter)
        refs = sample_references(seg, len(seeds), seeds, generator)
    except Exception as exc:
        raise PipelineError("imagination", str(exc)) from exc
    return L, refs


def compose(L, refs, assignment=None):
    try:
        if assignment is None:
            assignment = assign_segments(L / 100.0, refs)
        composed = assemble_reference(assignment, refs, gray_lum=L / 100.0)
    except Exception as exc:
        raise PipelineError("composition", str(exc)) from exc
    return assignment, composed


def run_colorization(gray, composed, model, return_clipped=False):
    try:
        rgb, details = colorize(gray, composed.image, model, return_details=True)
    except Exception as exc:
        raise PipelineError("colorization", str(exc)) from exc
    return (rgb, details["clipped"]) if return_clipped else rgb


def run_pipeline(gray, n=DEFAULT_N_REFERENCES, seeds=None, segmenter="toy", generator="toy", model=None):
    if model is None:
        raise PipelineError("colorization", "no colorization model loaded")
    L, refs = imagine(gray, n, seeds, segmenter, generator)
    assignment, composed = compose(L, refs)
    result, clipped = run_colorization(gray, composed, model, return_clipped=True)
    return PipelineResult(result, composed, refs.segmentation, assignment, refs, L, clipped)
