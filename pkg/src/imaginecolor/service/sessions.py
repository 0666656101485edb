"""Interactive composition sessions persisted as plain directories.

Layout of ``<state_dir>/<session id>/``::

    input.png        uploaded image (written once, never modified)
    seg.png          16-bit segment-id map
    refs/ref_<i>.png candidate references
    assignment.json  current composition assignment
    result.png       latest colorization
    session.json     metadata (version, timestamps, seeds, segment classes)

Images are quantized to 8 bits when a session is created, so a session
reloaded from disk behaves exactly like the in-memory one.
"""
from __future__ import annotations

import hashlib
import json
import os
import threading
import time
import uuid
from dataclasses import dataclass, field

import numpy as np

from .. import colorspace
from ..backends import TOY_CLASS_NAMES
from ..composition import CompositionAssignment, edit_assignment
from ..imagination import LatentCode, ReferenceSet, SegmentationMap
from ..pipeline import PipelineError, compose, imagine, run_colorization

EDIT_ACTIONS = ("exclude", "reset", "set_reference")


class SessionNotFound(KeyError):
    pass


def _quantize(img):
    return colorspace.to_uint8(img).astype(np.float64) / 255.0


def _now():
    return time.time()


@dataclass
class Session:
    id: str
    image: np.ndarray
    lightness: np.ndarray
    references: ReferenceSet
    assignment: CompositionAssignment
    result: np.ndarray
    version: int = 1
    created: float = field(default_factory=_now)
    updated: float = field(default_factory=_now)
    params: dict = field(default_factory=dict)

    @property
    def segmentation(self) -> SegmentationMap:
        return self.references.segmentation

    @property
    def result_png(self) -> bytes:
        return colorspace.encode_png(self.result)

    @property
    def result_hash(self) -> str:
        return hashlib.sha256(self.result_png).hexdigest()[:16]


class SessionStore:
    """Creates, persists and edits sessions; safe for concurrent requests."""

    def __init__(self, state_dir, model, segmenter="toy", generator="toy", class_names=None):
        self.state_dir = state_dir
        self.model = model
        self.segmenter = segmenter
        self.generator = generator
        self.class_names = dict(TOY_CLASS_NAMES if class_names is None else class_names)
        self._sessions = {}
        self._locks = {}
        self._guard = threading.Lock()
        os.makedirs(state_dir, exist_ok=True)

    # -- persistence ------------------------------------------------------

    def _dir(self, sid):
        return os.path.join(self.state_dir, sid)

    def _lock(self, sid):
        with self._guard:
            return self._locks.setdefault(sid, threading.Lock())

    def _write_meta(self, s):
        meta = {
            "id": s.id,
            "version": s.version,
            "created": s.created,
            "updated": s.updated,
            "params": s.params,
            "seeds": [lat.seed for lat in s.references.latents],
            "class_of": {str(j): c for j, c in s.segmentation.class_of.items()},
            "failed": s.references.failed,
        }
        d = self._dir(s.id)
        with open(os.path.join(d, "assignment.json"), "w") as fh:
            fh.write(s.assignment.to_json())
        colorspace.write_png(os.path.join(d, "result.png"), s.result)
        tmp = os.path.join(d, "session.json.tmp")
        with open(tmp, "w") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)
        os.replace(tmp, os.path.join(d, "session.json"))

    def _save_new(self, s):
        d = self._dir(s.id)
        os.makedirs(os.path.join(d, "refs"), exist_ok=True)
        colorspace.write_png(os.path.join(d, "input.png"), s.image)
        with open(os.path.join(d, "seg.png"), "wb") as fh:
            fh.write(colorspace.encode_label_png(s.segmentation.segments))
        for i, ref in enumerate(s.references.references):
            colorspace.write_png(os.path.join(d, "refs", f"ref_{i}.png"), ref)
        self._write_meta(s)

    def load(self, sid) -> Session:
        d = self._dir(sid)
        path = os.path.join(d, "session.json")
        if not os.path.isfile(path):
            raise SessionNotFound(sid)
        with open(path) as fh:
            meta = json.load(fh)
        image = colorspace.read_image(os.path.join(d, "input.png"))
        seg = SegmentationMap(
            colorspace.decode_label_png(os.path.join(d, "seg.png")),
            {int(j): int(c) for j, c in meta["class_of"].items()},
        )
        refs = [colorspace.read_image(os.path.join(d, "refs", f"ref_{i}.png")) for i in range(len(meta["seeds"]))]
        references = ReferenceSet(refs, [LatentCode(s) for s in meta["seeds"]], seg, meta.get("failed", []))
        with open(os.path.join(d, "assignment.json")) as fh:
            assignment = CompositionAssignment.from_json(fh.read())
        L = colorspace.lightness_of(image)
        _, composed = compose(L, references, assignment)
        result = run_colorization(image, composed, self.model)
        return Session(sid, image, L, references, assignment, result, meta["version"], meta["created"],
                       meta["updated"], meta.get("params", {}))

    # -- lifecycle --------------------------------------------------------

    def create(self, image, n=6, seeds=None) -> Session:
        image = _quantize(np.asarray(image, dtype=np.float64))
        seeds = list(range(n)) if seeds is None else [int(s) for s in seeds]
        L, refs = imagine(image, len(seeds), seeds, self.segmenter, self.generator)
        refs = ReferenceSet([_quantize(r) for r in refs.references], refs.latents, refs.segmentation, refs.failed)
        assignment, composed = compose(L, refs)
        result = run_colorization(image, composed, self.model)
        sid = uuid.uuid4().hex
        s = Session(sid, image, L, refs, assignment, result, params={"n": len(seeds)})
        self._save_new(s)
        with self._guard:
            self._sessions[sid] = s
        return s

    def get(self, sid) -> Session:
        with self._guard:
            s = self._sessions.get(sid)
        if s is None:
            if not sid.isalnum():
                raise SessionNotFound(sid)
            s = self.load(sid)
            with self._guard:
                s = self._sessions.setdefault(sid, s)
        return s

    def list_ids(self):
        return sorted(d for d in os.listdir(self.state_dir) if os.path.isfile(os.path.join(self._dir(d), "session.json")))

    def apply_edit(self, sid, segment_id, action, reference=None, version=None):
        """Apply one edit.  Returns ``(session, conflict)``.

        Edits are last-writer-wins; ``conflict`` reports that ``version`` was
        stale, so the client knows its view was out of date.
        """
        if action not in EDIT_ACTIONS:
            raise ValueError(f"unknown action {action!r}")
        with self._lock(sid):
            s = self.get(sid)
            conflict = version is not None and int(version) != s.version
            assignment = edit_assignment(s.assignment, segment_id, action, reference)
            s.assignment = assignment
            s.version += 1
            s.updated = _now()
            self._write_meta(s)
            return s, conflict

    def recolorize(self, sid) -> Session:
        """Re-run assembly, warp and prediction with the cached references."""
        with self._lock(sid):
            s = self.get(sid)
            _, composed = compose(s.lightness, s.references, s.assignment)
            s.result = run_colorization(s.image, composed, self.model)
            s.updated = _now()
            self._write_meta(s)
            return s

    # -- views ------------------------------------------------------------

    def segments(self, sid):
        s = self.get(sid)
        seg = s.segmentation
        sizes = np.bincount(seg.segments.ravel())
        out = []
        for j in seg.segment_ids:
            cls = seg.class_of[j]
            out.append({
                "id": j,
                "class_id": cls,
                "class_name": self.class_names.get(cls, f"class {cls}"),
                "bbox": list(seg.bbox(j)),
                "size": int(sizes[j]),
                "beta": s.assignment.beta[j],
                "automatic": s.assignment.automatic_choice(j),
                "scores": s.assignment.scores[j],
                "candidates": [f"/api/sessions/{sid}/segments/{j}/candidates/{i}.png"
                               for i in range(len(s.references))],
            })
        return out

    def thumbnail(self, sid, segment_id, index) -> bytes:
        """Candidate ``index`` cropped to the segment's bounding box; other segments dimmed."""
        s = self.get(sid)
        if segment_id not in s.segmentation.class_of:
            raise KeyError(f"unknown segment {segment_id}")
        if not 0 <= index < len(s.references):
            raise KeyError(f"unknown candidate {index}")
        t, l, b, r = s.segmentation.bbox(segment_id)
        crop = s.references.references[index][t:b, l:r].copy()
        outside = ~s.segmentation.mask(segment_id)[t:b, l:r]
        crop[outside] = 0.25 + 0.25 * crop[outside].mean(axis=-1, keepdims=True)
        return colorspace.encode_png(crop)

    def describe(self, s) -> dict:
        base = f"/api/sessions/{s.id}"
        return {
            "id": s.id,
            "version": s.version,
            "created": s.created,
            "updated": s.updated,
            "height": int(s.image.shape[0]),
            "width": int(s.image.shape[1]),
            "n_references": len(s.references),
            "seeds": [lat.seed for lat in s.references.latents],
            "n_segments": len(s.segmentation.segment_ids),
            "assignment": s.assignment.to_dict(),
            "result_hash": s.result_hash,
            "urls": {
                "input": f"{base}/input.png",
                "result": f"{base}/result.png?v={s.result_hash}",
                "segmentation": f"{base}/segmentation.png",
                "references": [f"{base}/refs/{i}.png" for i in range(len(s.references))],
            },
        }


__all__ = ["EDIT_ACTIONS", "PipelineError", "Session", "SessionNotFound", "SessionStore"]
