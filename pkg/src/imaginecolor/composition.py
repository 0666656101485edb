"""Per-segment reference selection by luminance and interactive edits."""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

import numpy as np

from .colorspace import achromatic, luminance_of

logger = logging.getLogger(__name__)

EXCLUDED = -1


class CompositionError(ValueError):
    pass


@dataclass(frozen=True)
class CompositionAssignment:
    """Chosen reference per segment.

    ``scores[j][i]`` is the summed absolute luminance difference between
    candidate ``i`` and the input over segment ``j``.  ``beta[j]`` is a
    reference index or :data:`EXCLUDED`.
    """

    beta: dict
    scores: dict
    edit_log: tuple = ()

    def automatic_choice(self, segment_id) -> int:
        # np.argmin returns the first minimum, i.e. the lowest index on ties
        return int(np.argmin(self.scores[segment_id]))

    @property
    def n_references(self) -> int:
        return len(next(iter(self.scores.values()))) if self.scores else 0

    def edited_segments(self) -> list:
        return [j for j in self.beta if self.beta[j] != self.automatic_choice(j)]

    def to_dict(self) -> dict:
        return {
            "beta": {str(j): int(i) for j, i in sorted(self.beta.items())},
            "scores": {str(j): [float(s) for s in v] for j, v in sorted(self.scores.items())},
            "edit_log": [dict(e) for e in self.edit_log],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, data) -> "CompositionAssignment":
        return cls(
            beta={int(j): int(i) for j, i in data["beta"].items()},
            scores={int(j): [float(s) for s in v] for j, v in data["scores"].items()},
            edit_log=tuple(dict(e) for e in data.get("edit_log", [])),
        )

    @classmethod
    def from_json(cls, text) -> "CompositionAssignment":
        return cls.from_dict(json.loads(text))


@dataclass
class ComposedReference:
    image: np.ndarray
    provenance: np.ndarray
    excluded_mask: np.ndarray = field(repr=False)


def _gray_lum(gray_lum, shape):
    g = np.asarray(gray_lum, dtype=np.float64)
    if g.ndim == 3:
        g = g[..., 0]
    if g.shape != shape:
        raise CompositionError(f"luminance shape {g.shape} does not match segmentation {shape}")
    return g


def segment_scores(gray_lum, refs) -> dict:
    """Summed |lum(R_i) - gray| per segment, as {segment id: [score per candidate]}."""
    seg = refs.segmentation
    g = _gray_lum(gray_lum, seg.shape).ravel()
    flat = seg.segments.ravel()
    ids = np.unique(flat)
    table = np.empty((len(refs), ids.size))
    for i, ref in enumerate(refs.references):
        diff = np.abs(luminance_of(ref)[..., 0].ravel() - g)
        table[i] = np.bincount(flat, weights=diff, minlength=ids.max() + 1)[ids]
    return {int(j): table[:, k].tolist() for k, j in enumerate(ids)}


def assign_segments(gray_lum, refs) -> CompositionAssignment:
    """Pick, for every segment, the candidate closest to the input in luminance."""
    if len(refs) == 0:
        raise CompositionError("no candidate references")
    scores = segment_scores(gray_lum, refs)
    beta = {j: int(np.argmin(s)) for j, s in scores.items()}
    return CompositionAssignment(beta=beta, scores=scores)


def assemble_reference(assignment, refs, gray_lum=None) -> ComposedReference:
    """Copy each segment from its chosen candidate.

    Excluded segments are filled with an achromatic image carrying the input
    luminance (``gray_lum`` in [0, 1]); without it, the luminance of the
    segment's automatic choice is used.
    """
    seg = refs.segmentation
    h, w = seg.shape
    image = np.empty((h, w, 3))
    provenance = np.full((h, w), EXCLUDED, dtype=np.int64)
    excluded = np.zeros((h, w), dtype=bool)
    index = seg.segment_index()
    missing = set(index) - set(assignment.beta)
    if missing:
        raise CompositionError(f"assignment lacks segments {sorted(missing)}")
    flat_img = image.reshape(-1, 3)
    flat_prov = provenance.ravel()
    flat_excl = excluded.ravel()
    fill_cache = {}

    def achromatic_fill(source):
        # source: -1 for the input luminance, otherwise a candidate index
        if source not in fill_cache:
            lum = _gray_lum(gray_lum, (h, w)) if source == -1 else luminance_of(refs.references[source])[..., 0]
            fill_cache[source] = achromatic(lum * 100.0).reshape(-1, 3)
        return fill_cache[source]

    for j, pix in index.items():
        if pix.size == 0:
            logger.warning("segment %d is empty; skipped", j)
            continue
        i = assignment.beta[j]
        if i == EXCLUDED:
            source = -1 if gray_lum is not None else assignment.automatic_choice(j)
            flat_img[pix] = achromatic_fill(source)[pix]
            flat_excl[pix] = True
            continue
        if not 0 <= i < len(refs):
            raise CompositionError(f"segment {j}: reference index {i} out of range [0, {len(refs)})")
        flat_img[pix] = refs.references[i].reshape(-1, 3)[pix]
        flat_prov[pix] = i
    return ComposedReference(image=image, provenance=provenance, excluded_mask=excluded)


def edit_assignment(assignment, segment_id, action, reference=None) -> CompositionAssignment:
    """Return a new assignment with one segment excluded, overridden or reset.

    ``action`` is ``"exclude"``, ``"reset"`` or ``"set_reference"`` (with
    ``reference``).  Invalid edits raise and leave ``assignment`` untouched.
    """
    segment_id = int(segment_id)
    if segment_id not in assignment.beta:
        raise CompositionError(f"unknown segment {segment_id}")
    if action == "exclude":
        value = EXCLUDED
    elif action == "reset":
        value = assignment.automatic_choice(segment_id)
    elif action == "set_reference":
        if reference is None or not 0 <= int(reference) < assignment.n_references:
            raise CompositionError(f"reference index {reference} out of range [0, {assignment.n_references})")
        value = int(reference)
    else:
        raise CompositionError(f"unknown action {action!r}")
    entry = {"segment_id": segment_id, "action": action}
    if action == "set_reference":
        entry["reference"] = value
    beta = dict(assignment.beta)
    beta[segment_id] = value
    return CompositionAssignment(beta=beta, scores=assignment.scores, edit_log=assignment.edit_log + (entry,))
