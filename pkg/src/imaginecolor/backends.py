"""Segmenter and generator adapters.

Every adapter exposes ``kind`` ("segmenter" or "generator"), ``name`` and
``concurrent_safe``.  Segmenters implement ``segment(lightness)`` and
generators implement ``generate(seg, latent, index)``.

Subprocess protocol
-------------------
The child process receives on stdin one JSON header line
``{"height": H, "width": W, "mode": M, "seed": S}`` followed by PNG bytes, and
writes a PNG to stdout.  ``mode`` names the PNG it was sent:

* ``"gray"``: 8-bit single-channel grayscale (segmenter request)
* ``"rgb"``: the same grayscale replicated to 3 channels (segmenter request)
* ``"labels"``: 16-bit single-channel class-id map (generator request)

Segmenters answer with a 16-bit class-id PNG, generators with an RGB PNG.
``seed`` is ``null`` for segmenter requests.

Directory layout
----------------
``<root>/seg/<stem>.png`` holds the class-id map and
``<root>/refs/<stem>/ref_<i>.png`` the i-th pre-generated reference.
"""
from __future__ import annotations

import json
import os
import subprocess
from dataclasses import dataclass
from typing import Any

import numpy as np
from scipy import ndimage

from . import colorspace
from .imagination import BackendError, SegmentationMap, segmentation_from_labels

SEGMENTER = "segmenter"
GENERATOR = "generator"

TOY_CLASS_NAMES = {0: "unlabeled", 1: "shadow", 2: "ground", 3: "foliage", 4: "sky"}
TOY_THRESHOLDS = (25.0, 50.0, 75.0)

# class id -> palette entries (sRGB in [0, 1]); entry chosen by seed mod palette_size
TOY_PALETTE = {
    0: [(0.50, 0.50, 0.50), (0.60, 0.55, 0.50), (0.40, 0.42, 0.45), (0.70, 0.70, 0.65)],
    1: [(0.15, 0.12, 0.25), (0.25, 0.15, 0.10), (0.10, 0.20, 0.15), (0.30, 0.25, 0.35)],
    2: [(0.55, 0.40, 0.25), (0.35, 0.30, 0.20), (0.60, 0.30, 0.20), (0.45, 0.50, 0.30)],
    3: [(0.30, 0.55, 0.20), (0.60, 0.70, 0.25), (0.20, 0.40, 0.30), (0.75, 0.60, 0.30)],
    4: [(0.45, 0.65, 0.90), (0.85, 0.75, 0.60), (0.60, 0.80, 0.95), (0.95, 0.60, 0.45)],
}
TOY_NOISE_AMPLITUDE = 0.02


def _lightness(img) -> np.ndarray:
    """Accept L (H, W), (H, W, 1) or a Lab image (H, W, 3); return (H, W) L."""
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim == 3:
        arr = arr[..., 0]
    if arr.ndim != 2:
        raise ValueError(f"expected a lightness map, got shape {np.shape(img)}")
    return arr


class ToySegmenter:
    """Quantize lightness into bands; each connected band region is a segment."""

    kind = SEGMENTER
    name = "toy"
    concurrent_safe = True

    def __init__(self, thresholds=TOY_THRESHOLDS, min_fraction=0.01, smooth=5):
        self.thresholds = tuple(thresholds)
        self.min_fraction = min_fraction
        self.smooth = smooth

    def class_labels(self, lightness) -> np.ndarray:
        L = _lightness(lightness)
        if self.smooth and min(L.shape) >= self.smooth:
            L = ndimage.median_filter(L, size=self.smooth, mode="nearest")
        return np.digitize(L, self.thresholds) + 1

    def segment(self, lightness) -> SegmentationMap:
        labels = self.class_labels(lightness)
        min_size = int(np.ceil(self.min_fraction * labels.size))
        return segmentation_from_labels(labels, split_components=True, min_size=min_size)


class ToyGenerator:
    """Fill every segment with a class-and-seed indexed palette color plus faint noise."""

    kind = GENERATOR
    name = "toy"
    concurrent_safe = True

    def __init__(self, palette=None, palette_size=None, noise=TOY_NOISE_AMPLITUDE):
        self.palette = {int(k): [tuple(c) for c in v] for k, v in (palette or TOY_PALETTE).items()}
        sizes = {len(v) for v in self.palette.values()}
        if len(sizes) != 1:
            raise ValueError("all palette classes need the same number of entries")
        full = sizes.pop()
        self.palette_size = full if palette_size is None else int(palette_size)
        if not 1 <= self.palette_size <= full:
            raise ValueError(f"palette_size must be in [1, {full}]")
        self.noise = noise

    def color(self, class_id, seed):
        entries = self.palette.get(int(class_id), self.palette[0])
        return np.array(entries[int(seed) % self.palette_size])

    def generate(self, seg, latent, index=0) -> np.ndarray:
        h, w = seg.shape
        img = np.empty((h, w, 3))
        for j in seg.segment_ids:
            img[seg.segments == j] = self.color(seg.class_of[j], latent.seed)
        rng = np.random.default_rng(latent.seed & 0xFFFFFFFFFFFFFFFF)
        img += rng.uniform(-self.noise, self.noise, size=(h, w, 1))
        return np.clip(img, 0.0, 1.0)


class CallableSegmenter:
    """In-process adapter around ``fn(lightness) -> label map or SegmentationMap``."""

    kind = SEGMENTER

    def __init__(self, fn, name="callable", concurrent_safe=False):
        self.fn = fn
        self.name = name
        self.concurrent_safe = concurrent_safe

    def segment(self, lightness):
        out = self.fn(lightness)
        return out if isinstance(out, SegmentationMap) else segmentation_from_labels(out)


class CallableGenerator:
    """In-process adapter around ``fn(seg, latent) -> (H, W, 3) image``."""

    kind = GENERATOR

    def __init__(self, fn, name="callable", concurrent_safe=False):
        self.fn = fn
        self.name = name
        self.concurrent_safe = concurrent_safe

    def generate(self, seg, latent, index=0):
        return self.fn(seg, latent)


class DirectorySegmenter:
    kind = SEGMENTER
    name = "dir"
    concurrent_safe = True

    def __init__(self, root, stem):
        self.path = os.path.join(root, "seg", f"{stem}.png")

    def segment(self, lightness):
        if not os.path.exists(self.path):
            raise BackendError(f"missing segmentation {self.path}")
        return segmentation_from_labels(colorspace.decode_label_png(self.path))


class DirectoryGenerator:
    kind = GENERATOR
    name = "dir"
    concurrent_safe = True

    def __init__(self, root, stem):
        self.folder = os.path.join(root, "refs", stem)

    def generate(self, seg, latent, index=0):
        path = os.path.join(self.folder, f"ref_{index}.png")
        if not os.path.exists(path):
            raise BackendError(f"missing reference {path}")
        return colorspace.read_image(path)


def _run(cmd, header, payload, timeout):
    data = json.dumps(header).encode() + b"\n" + payload
    try:
        proc = subprocess.run(cmd, input=data, capture_output=True, timeout=timeout, check=False)
    except (OSError, subprocess.TimeoutExpired) as exc:
        raise BackendError(f"backend command {cmd!r} could not run: {exc}", diagnostics=str(exc)) from exc
    if proc.returncode != 0:
        raise BackendError(
            f"backend command exited with status {proc.returncode}",
            diagnostics=proc.stderr.decode(errors="replace"),
        )
    if not proc.stdout:
        raise BackendError("backend command produced no output", diagnostics=proc.stderr.decode(errors="replace"))
    return proc.stdout


class SubprocessSegmenter:
    kind = SEGMENTER
    name = "cmd"
    concurrent_safe = True

    def __init__(self, cmd, mode="gray", timeout=600):
        if mode not in ("gray", "rgb"):
            raise ValueError("mode must be 'gray' or 'rgb'")
        self.cmd = list(cmd)
        self.mode = mode
        self.timeout = timeout

    def segment(self, lightness):
        L = _lightness(lightness)
        gray = colorspace.achromatic(L)
        payload = colorspace.encode_png(gray if self.mode == "rgb" else gray[..., :1])
        header = {"height": L.shape[0], "width": L.shape[1], "mode": self.mode, "seed": None}
        out = _run(self.cmd, header, payload, self.timeout)
        try:
            labels = colorspace.decode_label_png(out)
        except Exception as exc:
            raise BackendError(f"segmenter output is not a PNG: {exc}") from exc
        return segmentation_from_labels(labels)


class SubprocessGenerator:
    kind = GENERATOR
    name = "cmd"
    concurrent_safe = True

    def __init__(self, cmd, timeout=600):
        self.cmd = list(cmd)
        self.timeout = timeout

    def generate(self, seg, latent, index=0):
        h, w = seg.shape
        header = {"height": h, "width": w, "mode": "labels", "seed": int(latent.seed)}
        out = _run(self.cmd, header, colorspace.encode_label_png(seg.labels), self.timeout)
        try:
            return colorspace.read_image(out)
        except Exception as exc:
            raise BackendError(f"generator output is not a PNG: {exc}") from exc


@dataclass(frozen=True)
class BackendDescriptor:
    kind: str
    name: str
    adapter: Any


_REGISTRY: dict = {}


def register_backend(kind, name, factory):
    """Register ``factory(**kwargs) -> adapter`` under ``(kind, name)``."""
    if kind not in (SEGMENTER, GENERATOR):
        raise ValueError(f"unknown backend kind {kind!r}")
    if (kind, name) in _REGISTRY:
        raise ValueError(f"{kind} {name!r} already registered")
    _REGISTRY[(kind, name)] = factory


def get_backend(kind, name, **kwargs) -> BackendDescriptor:
    try:
        factory = _REGISTRY[(kind, name)]
    except KeyError:
        raise KeyError(f"no {kind} registered as {name!r}") from None
    return BackendDescriptor(kind, name, factory(**kwargs))


def registered(kind=None):
    return sorted(n for k, n in _REGISTRY if kind is None or k == kind)


def resolve_backend(backend, kind):
    if isinstance(backend, str):
        backend = get_backend(kind, backend)
    if isinstance(backend, BackendDescriptor):
        if backend.kind != kind:
            raise ValueError(f"backend {backend.name!r} is a {backend.kind}, not a {kind}")
        backend = backend.adapter
    if getattr(backend, "kind", kind) != kind:
        raise ValueError(f"backend {getattr(backend, 'name', backend)!r} is not a {kind}")
    return backend


register_backend(SEGMENTER, "toy", ToySegmenter)
register_backend(GENERATOR, "toy", ToyGenerator)
register_backend(SEGMENTER, "dir", DirectorySegmenter)
register_backend(GENERATOR, "dir", DirectoryGenerator)
register_backend(SEGMENTER, "cmd", SubprocessSegmenter)
register_backend(GENERATOR, "cmd", SubprocessGenerator)
