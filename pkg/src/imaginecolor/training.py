"""Training the colorization network with a layered perceptual loss."""
from __future__ import annotations

import dataclasses
import json
import logging
import os
import time
from dataclasses import dataclass, field

import numpy as np
import torch

from . import colorspace
from .colorizer import ColorizerConfig, ColorizerModel, save_checkpoint, warp_tensors
from .colorizer.features import VGGFeatures
from .colorizer.tensor_color import lab_to_rgb as lab_to_rgb_t
from .metrics import colorfulness
from .simulation import MaskConfig, resize_chroma, sample_mask, simulate_reference

logger = logging.getLogger(__name__)

LOSS_LAYERS = ("conv1_2", "conv2_2", "conv3_2", "conv4_2", "conv5_2")


class TrainingError(RuntimeError):
    pass


@dataclass(frozen=True)
class PerceptualLossSpec:
    layers: tuple = LOSS_LAYERS
    weights: tuple = (0.2, 0.2, 0.2, 0.2, 0.2)
    extractor: VGGFeatures | None = field(default=None, compare=False)

    def __post_init__(self):
        if tuple(self.layers) != LOSS_LAYERS:
            raise ValueError(f"loss layers must be {LOSS_LAYERS}")
        if len(self.weights) != len(self.layers) or min(self.weights) <= 0:
            raise ValueError("need one positive weight per layer")


def perceptual_loss(pred_rgb, gt_rgb, spec=None, gt_features=None):
    """Sum over layers of weight * mean |phi(pred) - phi(gt)|.

    Inputs are (N, 3, H, W) tensors in [0, 1].  ``gt_features`` may carry
    precomputed activations of ``gt_rgb``.
    """
    spec = spec or PerceptualLossSpec()
    if pred_rgb.shape != gt_rgb.shape:
        raise ValueError(f"shape mismatch: {tuple(pred_rgb.shape)} vs {tuple(gt_rgb.shape)}")
    extractor = spec.extractor
    if extractor is None:
        from .colorizer import default_extractor

        extractor = default_extractor()
    fp = extractor(pred_rgb, spec.layers)
    if gt_features is None:
        with torch.no_grad():
            gt_features = extractor(gt_rgb, spec.layers)
    total = pred_rgb.new_zeros(())
    for name, weight in zip(spec.layers, spec.weights):
        total = total + weight * (fp[name] - gt_features[name]).abs().mean()
    return total


@dataclass
class TrainConfig:
    learning_rate: float = 2e-4
    batch_size: int = 2
    iterations: int = 2000
    seed: int = 0
    crop_size: int = 256
    checkpoint_every: int = 500
    checkpoint_dir: str | None = None
    log_path: str | None = None
    base_width: int = 64
    depth: int = 4
    temperature: float = 0.01
    min_regions: int = 1
    max_regions: int = 4
    min_coverage: float = 0.1
    max_coverage: float = 0.6
    loss_weights: tuple = (0.2, 0.2, 0.2, 0.2, 0.2)

    def __post_init__(self):
        for name in ("learning_rate", "batch_size", "crop_size", "checkpoint_every"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.iterations < 0:
            raise ValueError("iterations must be non-negative")

    def mask_config(self) -> MaskConfig:
        return MaskConfig(self.min_regions, self.max_regions, self.min_coverage, self.max_coverage)

    def model_config(self) -> ColorizerConfig:
        return ColorizerConfig(base_width=self.base_width, depth=self.depth, temperature=self.temperature)

    @classmethod
    def from_file(cls, path, **overrides) -> "TrainConfig":
        """Read ``key = value`` lines (``#`` comments); ``overrides`` win."""
        values = {}
        with open(path) as fh:
            for lineno, raw in enumerate(fh, 1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ValueError(f"{path}:{lineno}: expected key = value")
                key, value = (s.strip() for s in line.split("=", 1))
                values[key] = value
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls.from_mapping(values)

    @classmethod
    def from_mapping(cls, values) -> "TrainConfig":
        fields = {f.name: f for f in dataclasses.fields(cls)}
        kwargs = {}
        for key, value in values.items():
            if key not in fields:
                raise ValueError(f"unknown training option {key!r}")
            default = fields[key].default
            if not isinstance(value, str):
                kwargs[key] = value
            elif key == "loss_weights":
                kwargs[key] = tuple(float(v) for v in value.replace(",", " ").split())
            elif isinstance(default, bool):
                kwargs[key] = value.lower() in ("1", "true", "yes")
            elif isinstance(default, int):
                kwargs[key] = int(value)
            elif isinstance(default, float):
                kwargs[key] = float(value)
            else:
                kwargs[key] = None if value.lower() in ("", "none") else value
        return cls(**kwargs)


def _to_tensor(arr):
    return torch.from_numpy(np.ascontiguousarray(arr, dtype=np.float32)).permute(2, 0, 1)


class _Corpus:
    """Lab versions of the training images and seeded batch construction."""

    def __init__(self, images, cfg):
        self.labs = [colorspace.rgb_to_lab(np.asarray(img, dtype=np.float64)) for img in images]
        self.cfg = cfg
        self.mask_cfg = cfg.mask_config()
        self.rng = np.random.default_rng(cfg.seed)

    def crop(self, lab):
        h, w = lab.shape[:2]
        c = self.cfg.crop_size
        if h < c or w < c:
            raise TrainingError(f"image of size {h}x{w} smaller than crop size {c}")
        y = int(self.rng.integers(h - c + 1))
        x = int(self.rng.integers(w - c + 1))
        return lab[y:y + c, x:x + c]

    def batch(self):
        n = len(self.labs)
        L, Y, R = [], [], []
        for _ in range(self.cfg.batch_size):
            k = int(self.rng.integers(n))
            donor = int(self.rng.integers(n - 1))
            donor += donor >= k
            lab = self.crop(self.labs[k])
            fake = resize_chroma(self.crop(self.labs[donor])[..., 1:], lab.shape[:2])
            mask = sample_mask(lab.shape[0], lab.shape[1], int(self.rng.integers(2**63)), self.mask_cfg)
            L.append(lab[..., :1])
            Y.append(lab[..., 1:])
            R.append(simulate_reference(lab[..., :1], lab[..., 1:], fake, mask))
        return tuple(torch.stack([_to_tensor(a) for a in group]) for group in (L, Y, R))


def train(images, cfg=None, model=None):
    """Train a colorizer on ``images`` (list of RGB arrays in [0, 1]).

    Returns ``(model, log)`` where ``log`` is a list of ``{step, loss, lr,
    wall_ms}`` records (also appended as JSON lines to ``cfg.log_path``).
    """
    cfg = cfg or TrainConfig()
    if len(images) < 2:
        raise TrainingError("training needs at least two images")
    torch.manual_seed(cfg.seed)
    if model is None:
        model = ColorizerModel(cfg.model_config(), seed=cfg.seed)
    log = []
    if cfg.iterations == 0:
        return model, log
    corpus = _Corpus(images, cfg)
    extractor = model.extractor
    spec = PerceptualLossSpec(weights=tuple(cfg.loss_weights), extractor=extractor)
    optimizer = torch.optim.Adam(model.parameters(), lr=cfg.learning_rate)
    if cfg.checkpoint_dir:
        os.makedirs(cfg.checkpoint_dir, exist_ok=True)
    log_fh = open(cfg.log_path, "a") if cfg.log_path else None
    model.train()
    try:
        for step in range(1, cfg.iterations + 1):
            t0 = time.perf_counter()
            L, Y, ref = corpus.batch()
            with torch.no_grad():
                warped, conf = warp_tensors(L, ref, extractor, cfg.temperature)
                gt = lab_to_rgb_t(torch.cat([L, Y], 1))
            pred_ab = model(L, warped, conf)
            pred = lab_to_rgb_t(torch.cat([L, pred_ab], 1))
            loss = perceptual_loss(pred, gt, spec)
            if not torch.isfinite(loss):
                if cfg.checkpoint_dir:
                    save_checkpoint(model, os.path.join(cfg.checkpoint_dir, f"diverged_step{step}.ckpt"))
                raise TrainingError(f"non-finite loss at step {step}")
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            record = {"step": step, "loss": loss.item(), "lr": cfg.learning_rate,
                      "wall_ms": round((time.perf_counter() - t0) * 1000.0, 3)}
            log.append(record)
            if log_fh:
                log_fh.write(json.dumps(record) + "\n")
                log_fh.flush()
            if step % 100 == 0:
                logger.info("step %d loss %.5f", step, record["loss"])
            if cfg.checkpoint_dir and step % cfg.checkpoint_every == 0:
                save_checkpoint(model, os.path.join(cfg.checkpoint_dir, f"step{step:07d}.ckpt"))
    finally:
        if log_fh:
            log_fh.close()
    model.eval()
    if cfg.checkpoint_dir:
        save_checkpoint(model, os.path.join(cfg.checkpoint_dir, "final.ckpt"))
    return model, log


def evaluate_checkpoint(model, val_images, run=None, dump_dir=None) -> dict:
    """Colorfulness and luminance preservation over a validation set.

    ``run(image, model) -> RGB`` produces one colorization; it defaults to the
    full imagine/compose/colorize pipeline with toy backends.  With
    ``dump_dir`` the 8-bit outputs are written as ``val_XXXX.png`` and the
    metrics are computed on exactly those files.
    """
    if run is None:
        from .pipeline import run_pipeline

        def run(image, m):
            return run_pipeline(image, model=m).result

    if not len(val_images):
        return {"count": 0, "scores": {}, "luminance_error": {}}
    scores, lum_err = {}, {}
    for k, image in enumerate(val_images):
        out = run(image, model)
        name = f"val_{k:04d}.png"
        if dump_dir:
            path = os.path.join(dump_dir, name)
            colorspace.write_png(path, out)
            out = colorspace.read_image(path)
        scores[name] = colorfulness(out)
        lum_err[name] = float(np.abs(colorspace.lightness_of(out) - colorspace.lightness_of(image)).mean())
    return {
        "count": len(scores),
        "mean_colorfulness": float(np.mean(list(scores.values()))),
        "mean_luminance_error": float(np.mean(list(lum_err.values()))),
        "scores": scores,
        "luminance_error": lum_err,
    }
