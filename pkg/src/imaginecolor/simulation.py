"""Simulated training references.

A random mask selects where the ground-truth chroma of an image is replaced by
the chroma of an unrelated donor image; the lightness channel is untouched.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from skimage.transform import resize

from .colorspace import encode_png, fit_chroma_to_gamut, lab_to_rgb, merge_lab, rgb_to_lab, write_png


@dataclass(frozen=True)
class MaskConfig:
    min_regions: int = 1
    max_regions: int = 4
    min_coverage: float = 0.1
    max_coverage: float = 0.6
    shapes: tuple = ("rect", "blob")
    coverage: float | None = None  # forces an exact coverage when set

    def __post_init__(self):
        if not 1 <= self.min_regions <= self.max_regions:
            raise ValueError("need 1 <= min_regions <= max_regions")
        if not 0.0 <= self.min_coverage <= self.max_coverage <= 1.0:
            raise ValueError("need 0 <= min_coverage <= max_coverage <= 1")
        if self.coverage is not None and not 0.0 <= self.coverage <= 1.0:
            raise ValueError("coverage must be in [0, 1]")
        if not self.shapes or set(self.shapes) - {"rect", "blob"}:
            raise ValueError("shapes must be a non-empty subset of {'rect', 'blob'}")


@dataclass
class SimulationMask:
    mask: np.ndarray  # (H, W, 1) uint8 in {0, 1}
    regions: list = field(default_factory=list)

    @property
    def coverage(self) -> float:
        return float(self.mask.mean())


@dataclass
class TrainingSample:
    lightness: np.ndarray  # (H, W, 1), L in [0, 100]
    chroma: np.ndarray  # (H, W, 2) ground truth
    reference: np.ndarray  # simulated reference, RGB
    mask: SimulationMask
    donor: int  # index of the donor image in the pool
    fake_chroma: np.ndarray = field(repr=False, default=None)


def _region_field(shape, yy, xx, rng, h, w):
    cy, cx = rng.uniform(0, h), rng.uniform(0, w)
    ry = rng.uniform(0.1, 0.5) * h
    rx = rng.uniform(0.1, 0.5) * w
    dy, dx = (yy - cy) / ry, (xx - cx) / rx
    if shape == "rect":
        f = 1.0 - np.maximum(np.abs(dy), np.abs(dx))
    else:
        # ellipse with a low-frequency wobble on its boundary
        angle = np.arctan2(dy, dx)
        k = rng.integers(2, 6)
        wobble = 0.25 * np.sin(k * angle + rng.uniform(0, 2 * np.pi))
        f = 1.0 + wobble - np.hypot(dy, dx)
    return f, {"shape": shape, "center": (float(cy), float(cx)), "size": (float(2 * ry), float(2 * rx))}


def sample_mask(h, w, rng_seed, cfg=None) -> SimulationMask:
    """Union of 1-4 rectangles/blobs covering a uniformly drawn fraction of the image.

    Every region contributes a shape score field; the highest-scoring pixels
    of the pointwise maximum are selected until the drawn coverage is met, so
    the union grows as level sets of the shapes.
    """
    cfg = cfg or MaskConfig()
    if h < 1 or w < 1:
        raise ValueError("mask dimensions must be positive")
    rng = np.random.default_rng(rng_seed)
    total = h * w
    if cfg.coverage is not None:
        target = int(round(cfg.coverage * total))
    else:
        frac = rng.uniform(cfg.min_coverage, cfg.max_coverage)
        lo = int(np.ceil(cfg.min_coverage * total))
        hi = int(np.floor(cfg.max_coverage * total))
        target = int(round(frac * total))
        if lo <= hi:
            target = min(max(target, lo), hi)
    count = int(rng.integers(cfg.min_regions, cfg.max_regions + 1))
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64) + 0.5
    fields, regions = [], []
    for _ in range(count):
        f, spec = _region_field(cfg.shapes[rng.integers(len(cfg.shapes))], yy, xx, rng, h, w)
        fields.append(f)
        regions.append(spec)
    stack = np.stack(fields)
    score = stack.max(axis=0) + rng.uniform(0, 1e-9, size=(h, w))
    owner = stack.argmax(axis=0)
    mask = np.zeros(total, dtype=np.uint8)
    if target > 0:
        mask[np.argsort(-score, axis=None, kind="stable")[:target]] = 1
    mask = mask.reshape(h, w)
    for k, spec in enumerate(regions):
        spec["area_fraction"] = float(((owner == k) & (mask == 1)).sum() / total)
    return SimulationMask(mask=mask[..., None], regions=regions)


def _mask_array(mask):
    m = mask.mask if isinstance(mask, SimulationMask) else np.asarray(mask)
    if m.ndim == 2:
        m = m[..., None]
    return m.astype(np.float64)


def simulate_chroma(chroma, fake_chroma, mask) -> np.ndarray:
    """Keep ground-truth chroma outside the mask and donor chroma inside it."""
    chroma = np.asarray(chroma, dtype=np.float64)
    fake_chroma = np.asarray(fake_chroma, dtype=np.float64)
    m = _mask_array(mask)
    if chroma.shape != fake_chroma.shape or m.shape[:2] != chroma.shape[:2]:
        raise ValueError(f"shape mismatch: {chroma.shape}, {fake_chroma.shape}, mask {m.shape}")
    return chroma * (1.0 - m) + fake_chroma * m


def simulate_reference(lightness, chroma, fake_chroma, mask, gamut="fit", return_flags=False):
    """RGB reference whose chroma is spliced from the donor under ``mask``.

    Donor chroma is often out of gamut at the target lightness.  With
    ``gamut="fit"`` such pixels get their chroma scaled down at fixed L, so the
    reference keeps the input lightness exactly; ``gamut="clip"`` clips RGB
    instead.  ``return_flags`` adds ``{"mapped": mask, "clipped": mask}``.
    """
    lightness = np.asarray(lightness, dtype=np.float64)
    mixed = simulate_chroma(chroma, fake_chroma, mask)
    if lightness.shape[:2] != mixed.shape[:2]:
        raise ValueError(f"shape mismatch: L {lightness.shape} vs chroma {mixed.shape}")
    lab = merge_lab(lightness, mixed)
    if gamut == "fit":
        lab, mapped = fit_chroma_to_gamut(lab)
    elif gamut == "clip":
        mapped = np.zeros(lab.shape[:2], dtype=bool)
    else:
        raise ValueError(f"unknown gamut policy {gamut!r}")
    rgb, clipped = lab_to_rgb(lab, return_clipped=True)
    if return_flags:
        return rgb, {"mapped": mapped, "clipped": clipped}
    return rgb


def resize_chroma(chroma, shape) -> np.ndarray:
    """Bilinear resize of an (h, w, 2) chroma map to ``shape`` = (H, W)."""
    chroma = np.asarray(chroma, dtype=np.float64)
    if chroma.shape[:2] == tuple(shape):
        return chroma
    return resize(chroma, tuple(shape) + (2,), order=1, mode="edge", anti_aliasing=False, preserve_range=True)


def make_training_batch(images, rng_seed, cfg=None) -> list:
    """One simulated sample per image; each donor is a different pool image."""
    if len(images) < 2:
        raise ValueError("the image pool needs at least two images")
    rng = np.random.default_rng(rng_seed)
    labs = [rgb_to_lab(img) for img in images]
    samples = []
    for k, lab in enumerate(labs):
        donor = int(rng.integers(len(labs) - 1))
        donor += donor >= k
        fake = resize_chroma(labs[donor][..., 1:], lab.shape[:2])
        mask = sample_mask(lab.shape[0], lab.shape[1], int(rng.integers(2**63)), cfg)
        ref = simulate_reference(lab[..., :1], lab[..., 1:], fake, mask)
        samples.append(TrainingSample(lab[..., :1], lab[..., 1:], ref, mask, donor, fake))
    return samples


def encode_mask_png(mask) -> bytes:
    """8-bit single-channel PNG (0 or 255)."""
    return encode_png(_mask_array(mask))


def write_mask_png(path, mask) -> None:
    write_png(path, _mask_array(mask))
