"""Opponent-channel colorfulness, output diversity and directory reports.

Colorfulness is computed on RGB scaled to [0, 1] with population standard
deviations.  It is not invariant to resizing.
"""
from __future__ import annotations

import itertools
import json
import logging
import os

import numpy as np

from .colorspace import read_image, rgb_to_lab

logger = logging.getLogger(__name__)

IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg")
DEFAULT_DIVERSITY_THRESHOLD = 0.5


def colorfulness(img) -> float:
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 3 or img.shape[-1] != 3:
        raise ValueError(f"expected an (H, W, 3) image, got {img.shape}")
    r, g, b = img[..., 0].ravel(), img[..., 1].ravel(), img[..., 2].ravel()
    rg = r - g
    yb = 0.5 * (r + g) - b
    return float(np.sqrt(rg.var() + yb.var()) + 0.3 * np.sqrt(rg.mean() ** 2 + yb.mean() ** 2))


def pairwise_chroma_distance(a, b) -> float:
    """Mean absolute ab difference between two RGB images of the same size."""
    return float(np.abs(rgb_to_lab(a)[..., 1:] - rgb_to_lab(b)[..., 1:]).mean())


def diversity_report(outputs, threshold=DEFAULT_DIVERSITY_THRESHOLD) -> dict:
    """Summarize how different several colorizations of one input are."""
    if len(outputs) < 2:
        raise ValueError("diversity needs at least two outputs")
    chroma = [rgb_to_lab(o)[..., 1:] for o in outputs]
    dists = [float(np.abs(a - b).mean()) for a, b in itertools.combinations(chroma, 2)]
    mean = float(np.mean(dists))
    scores = [colorfulness(o) for o in outputs]
    return {
        "count": len(outputs),
        "mean_pairwise_chroma_distance": mean,
        "colorfulness": scores,
        "mean_colorfulness": float(np.mean(scores)),
        "diverse": bool(mean > threshold),
        "threshold": threshold,
    }


def _score_directory(path):
    scores, skipped = {}, []
    for name in sorted(os.listdir(path)):
        if not name.lower().endswith(IMAGE_SUFFIXES):
            continue
        try:
            scores[name] = colorfulness(read_image(os.path.join(path, name)))
        except Exception as exc:
            logger.warning("skipping unreadable %s: %s", name, exc)
            skipped.append(name)
    return {
        "mean": float(np.mean(list(scores.values()))) if scores else 0.0,
        "count": len(scores),
        "scores": scores,
        "skipped": skipped,
    }


def evaluate_directory(results_dirs, report_path=None) -> dict:
    """Colorfulness of every image in one or more result directories.

    Returns ``{method: {mean, count, scores, skipped}}`` where ``method`` is the
    directory basename, and writes it as JSON to ``report_path`` if given.
    """
    if isinstance(results_dirs, (str, os.PathLike)):
        results_dirs = [results_dirs]
    report = {}
    for d in results_dirs:
        method = os.path.basename(os.path.normpath(d))
        if method in report:
            raise ValueError(f"duplicate method name {method!r}")
        report[method] = _score_directory(d)
    if report_path is not None:
        with open(report_path, "w") as fh:
            fh.write(report_json(report))
    return report


def report_json(report) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


def format_table(report) -> str:
    """Plain-text comparison table, one column per method."""
    methods = list(report)
    width = max([12] + [len(m) + 2 for m in methods])
    head = "Method".ljust(14) + "".join(m.rjust(width) for m in methods)
    row = "Colorfulness".ljust(14) + "".join(f"{report[m]['mean']:.3f}".rjust(width) for m in methods)
    count = "Images".ljust(14) + "".join(str(report[m]["count"]).rjust(width) for m in methods)
    return "\n".join([head, row, count])
