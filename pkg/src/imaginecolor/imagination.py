"""Context extraction and reference sampling.

A segmenter turns a grayscale image into a :class:`SegmentationMap`; a
generator turns that map plus a latent code into a color reference.  Both are
pluggable (see :mod:`imaginecolor.backends`).
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

logger = logging.getLogger(__name__)

FALLBACK_SEGMENT = 0
DEFAULT_N_REFERENCES = 6
LATENT_DIM = 256


class BackendError(RuntimeError):
    """A segmenter or generator backend failed."""

    def __init__(self, message, diagnostics=""):
        super().__init__(message)
        self.diagnostics = diagnostics


class DegenerateSegmentationError(BackendError):
    pass


@dataclass(frozen=True)
class SegmentationMap:
    """Per-pixel segment ids plus the semantic class of every segment.

    ``segments`` holds segment ids (0 is the fallback segment for unlabeled
    pixels); ``class_of`` maps each present segment id to a class id.
    """

    segments: np.ndarray
    class_of: dict

    def __post_init__(self):
        seg = np.asarray(self.segments)
        if seg.ndim != 2 or seg.size == 0:
            raise DegenerateSegmentationError(f"segmentation must be a non-empty 2-D map, got {seg.shape}")
        if not np.issubdtype(seg.dtype, np.integer):
            raise ValueError("segment ids must be integers")
        if seg.min() < 0:
            raise ValueError("segment ids must be non-negative")
        seg = seg.astype(np.int64)
        seg.setflags(write=False)
        object.__setattr__(self, "segments", seg)
        missing = set(np.unique(seg).tolist()) - set(self.class_of)
        if missing:
            raise ValueError(f"segments without a class: {sorted(missing)}")

    @property
    def shape(self):
        return self.segments.shape

    @property
    def segment_ids(self) -> list:
        return np.unique(self.segments).tolist()

    @property
    def labels(self) -> np.ndarray:
        """Per-pixel class ids."""
        lut = np.zeros(self.segments.max() + 1, dtype=np.int64)
        for j, c in self.class_of.items():
            if j < lut.size:
                lut[j] = c
        return lut[self.segments]

    def segment_index(self) -> dict:
        """Map segment id -> flat pixel indices."""
        flat = self.segments.ravel()
        order = np.argsort(flat, kind="stable")
        ids, starts = np.unique(flat[order], return_index=True)
        bounds = list(starts[1:]) + [flat.size]
        return {int(j): order[s:e] for j, s, e in zip(ids, starts, bounds)}

    def mask(self, segment_id) -> np.ndarray:
        return self.segments == segment_id

    def bbox(self, segment_id):
        """(top, left, bottom, right), bottom/right exclusive."""
        rows, cols = np.nonzero(self.segments == segment_id)
        if rows.size == 0:
            raise KeyError(segment_id)
        return int(rows.min()), int(cols.min()), int(rows.max()) + 1, int(cols.max()) + 1


def segmentation_from_labels(labels, split_components=False, min_size=0) -> SegmentationMap:
    """Build a :class:`SegmentationMap` from a class-id label map.

    Class 0 means unlabeled and always lands in the fallback segment.  With
    ``split_components`` every connected component of a class becomes its own
    segment; components smaller than ``min_size`` pixels fall back to segment 0.
    """
    labels = np.asarray(labels)
    if labels.ndim == 3 and labels.shape[-1] == 1:
        labels = labels[..., 0]
    if labels.ndim != 2 or labels.size == 0:
        raise DegenerateSegmentationError(f"empty or malformed label map {labels.shape}")
    labels = labels.astype(np.int64)
    segments = np.zeros(labels.shape, dtype=np.int64)
    class_of = {}
    next_id = 1
    for cls in np.unique(labels):
        if cls == 0:
            continue
        region = labels == cls
        if split_components:
            comp, count = ndimage.label(region)
            sizes = np.bincount(comp.ravel(), minlength=count + 1)
            for k in range(1, count + 1):
                if sizes[k] < min_size:
                    continue
                segments[comp == k] = next_id
                class_of[next_id] = int(cls)
                next_id += 1
        elif region.sum() >= min_size:
            segments[region] = next_id
            class_of[next_id] = int(cls)
            next_id += 1
    if (segments == FALLBACK_SEGMENT).any():
        class_of[FALLBACK_SEGMENT] = 0
    return SegmentationMap(segments, class_of)


@dataclass(frozen=True)
class LatentCode:
    seed: int
    dim: int = LATENT_DIM

    @property
    def vector(self) -> np.ndarray:
        return np.random.default_rng(self.seed & 0xFFFFFFFFFFFFFFFF).standard_normal(self.dim)


@dataclass
class ReferenceSet:
    references: list
    latents: list
    segmentation: SegmentationMap
    failed: list = field(default_factory=list)

    def __post_init__(self):
        if not self.references:
            raise ValueError("a reference set needs at least one reference")
        if len(self.references) != len(self.latents):
            raise ValueError("references and latents differ in length")
        for r in self.references:
            if r.shape[:2] != self.segmentation.shape:
                raise ValueError(f"reference shape {r.shape} does not match segmentation {self.segmentation.shape}")

    def __len__(self):
        return len(self.references)


def extract_context(gray, backend) -> SegmentationMap:
    """Run a segmenter backend on a grayscale image (L in [0, 100] or RGB)."""
    from .backends import resolve_backend

    backend = resolve_backend(backend, "segmenter")
    try:
        seg = backend.segment(gray)
    except BackendError:
        raise
    except Exception as exc:
        raise BackendError(f"segmenter {backend.name!r} failed: {exc}", diagnostics=repr(exc)) from exc
    if seg is None:
        raise DegenerateSegmentationError(f"segmenter {backend.name!r} returned nothing")
    if not isinstance(seg, SegmentationMap):
        seg = segmentation_from_labels(seg)
    if seg.shape != np.asarray(gray).shape[:2]:
        raise DegenerateSegmentationError(f"segmentation shape {seg.shape} does not match input")
    return seg


def sample_references(seg, n, seeds, backend, max_workers=1) -> ReferenceSet:
    """Sample ``n`` references, one per seed.  Failed samples are recorded, not fatal."""
    from .backends import resolve_backend

    backend = resolve_backend(backend, "generator")
    seeds = [int(s) for s in seeds]
    if n < 1 or len(seeds) != n:
        raise ValueError(f"need n >= 1 and exactly n seeds, got n={n}, {len(seeds)} seeds")
    latents = [LatentCode(s) for s in seeds]

    def one(i):
        try:
            img = np.asarray(backend.generate(seg, latents[i], i), dtype=np.float64)
            if img.shape != seg.shape + (3,):
                raise BackendError(f"generator returned shape {img.shape}")
            return img, None
        except Exception as exc:
            logger.warning("reference %d (seed %d) failed: %s", i, seeds[i], exc)
            return None, str(exc)

    if max_workers > 1 and getattr(backend, "concurrent_safe", False):
        with ThreadPoolExecutor(max_workers) as pool:
            outcomes = list(pool.map(one, range(n)))
    else:
        outcomes = [one(i) for i in range(n)]

    refs, kept, failed = [], [], []
    for i, (img, err) in enumerate(outcomes):
        if err is None:
            refs.append(np.clip(img, 0.0, 1.0))
            kept.append(latents[i])
        else:
            failed.append({"index": i, "seed": seeds[i], "error": err})
    if not refs:
        raise BackendError(f"all {n} reference samples failed", diagnostics=failed[0]["error"])
    return ReferenceSet(refs, kept, seg, failed)
