"""Colorization network, inference helpers and the checkpoint format.

A checkpoint is a zip archive holding ``manifest.json`` and one ``.npy`` blob
per parameter under ``params/``.  The manifest records the architecture,
normalization constants, training seed, feature-extractor identity and the
format version; loading refuses unknown versions.
"""
from __future__ import annotations

import io
import json
import zipfile
from dataclasses import asdict, dataclass, field

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn

from ..colorspace import AB_RANGE, lab_to_rgb, lightness_of, merge_lab
from .features import default_extractor
from .unet import UNet
from .warp import DEFAULT_TEMPERATURE, WarpedReference, warp_reference

CHECKPOINT_FORMAT = "imaginecolor-checkpoint"
CHECKPOINT_VERSION = 1
L_CENTER = 50.0
L_SCALE = 50.0
AB_SCALE = 110.0
MIN_SIDE = 32


class CheckpointError(ValueError):
    pass


@dataclass
class ColorizerConfig:
    base_width: int = 64
    depth: int = 4
    temperature: float = DEFAULT_TEMPERATURE
    use_confidence: bool = True
    feature_seed: int = 0
    feature_weights: str | None = field(default=None)


class ColorizerModel(nn.Module):
    """U-Net over (normalized L, warped chroma, confidence) predicting ab."""

    def __init__(self, config=None, seed=None):
        super().__init__()
        self.config = config or ColorizerConfig()
        in_channels = 4 if self.config.use_confidence else 3
        if seed is None:
            self.unet = UNet(in_channels, 2, self.config.base_width, self.config.depth)
        else:
            with torch.random.fork_rng(devices=[]):
                torch.manual_seed(seed)
                self.unet = UNet(in_channels, 2, self.config.base_width, self.config.depth)
        self.training_seed = seed

    @property
    def extractor(self):
        return default_extractor(self.config.feature_seed, self.config.feature_weights)

    @property
    def factor(self):
        return self.unet.factor

    def zero_output(self):
        """Zero the final layer so the model predicts ab = 0 everywhere."""
        with torch.no_grad():
            self.unet.out.weight.zero_()
            self.unet.out.bias.zero_()
        return self

    def forward(self, lightness, warped_ab, confidence):
        """All inputs (N, C, H, W); ``lightness`` in [0, 100].  Returns raw ab."""
        parts = [(lightness - L_CENTER) / L_SCALE, warped_ab / AB_SCALE]
        if self.config.use_confidence:
            parts.append(confidence)
        x = torch.cat(parts, dim=1)
        h, w = x.shape[-2:]
        f = self.factor
        ph = max(-(-h // f) * f, MIN_SIDE) - h
        pw = max(-(-w // f) * f, MIN_SIDE) - w
        if ph or pw:
            mode = "reflect" if ph < h and pw < w else "replicate"
            x = F.pad(x, (0, pw, 0, ph), mode=mode)
        return self.unet(x)[..., :h, :w] * AB_SCALE


def predict_chroma(lightness, warped, model) -> np.ndarray:
    """(H, W, 2) chroma for ``lightness`` (H, W[, 1]) given a :class:`WarpedReference`."""
    L = np.asarray(lightness, dtype=np.float32)
    if L.ndim == 3:
        L = L[..., 0]
    was_training = model.training
    model.eval()
    try:
        with torch.no_grad():
            out = model(
                torch.from_numpy(L)[None, None],
                torch.from_numpy(np.asarray(warped.warped_chroma, dtype=np.float32)).permute(2, 0, 1)[None],
                torch.from_numpy(np.asarray(warped.confidence, dtype=np.float32)).permute(2, 0, 1)[None],
            )
    finally:
        model.train(was_training)
    return np.clip(out[0].permute(1, 2, 0).double().numpy(), *AB_RANGE)


def colorize(gray, reference, model, return_details=False):
    """Colorize ``gray`` (RGB or single-channel, [0, 1]) guided by ``reference``.

    The output keeps the input L channel; only ab is predicted.
    """
    L = lightness_of(gray)
    warped = warp_reference(L, reference, model.extractor, model.config.temperature)
    ab = predict_chroma(L, warped, model)
    rgb, clipped = lab_to_rgb(merge_lab(L, ab), return_clipped=True)
    if return_details:
        return rgb, {"lightness": L, "chroma": ab, "warped": warped, "clipped": clipped}
    return rgb


def save_checkpoint(model, path) -> None:
    state = model.unet.state_dict()
    manifest = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "architecture": asdict(model.config),
        "normalization": {"l_center": L_CENTER, "l_scale": L_SCALE, "ab_scale": AB_SCALE},
        "training_seed": model.training_seed,
        "feature_extractor": model.extractor.identity(),
        "parameters": {k: list(v.shape) for k, v in state.items()},
    }
    with zipfile.ZipFile(path, "w", compression=zipfile.ZIP_DEFLATED) as zf:
        zf.writestr("manifest.json", json.dumps(manifest, indent=2, sort_keys=True))
        for name, tensor in state.items():
            buf = io.BytesIO()
            np.save(buf, tensor.detach().cpu().numpy(), allow_pickle=False)
            zf.writestr(f"params/{name}.npy", buf.getvalue())


def read_manifest(path) -> dict:
    try:
        with zipfile.ZipFile(path) as zf:
            return json.loads(zf.read("manifest.json"))
    except (zipfile.BadZipFile, KeyError) as exc:
        raise CheckpointError(f"{path} is not a colorizer checkpoint: {exc}") from exc


def load_checkpoint(path) -> ColorizerModel:
    manifest = read_manifest(path)
    if manifest.get("format") != CHECKPOINT_FORMAT:
        raise CheckpointError(f"unknown checkpoint format {manifest.get('format')!r}")
    if manifest.get("version") != CHECKPOINT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version {manifest.get('version')!r}")
    norm = manifest["normalization"]
    if (norm["l_center"], norm["l_scale"], norm["ab_scale"]) != (L_CENTER, L_SCALE, AB_SCALE):
        raise CheckpointError("checkpoint was trained with different normalization constants")
    model = ColorizerModel(ColorizerConfig(**manifest["architecture"]))
    model.training_seed = manifest.get("training_seed")
    expected = manifest.get("feature_extractor", {}).get("fingerprint")
    if expected and expected != model.extractor.fingerprint():
        raise CheckpointError("feature extractor differs from the one used in training")
    state = {}
    with zipfile.ZipFile(path) as zf:
        for name in manifest["parameters"]:
            state[name] = torch.from_numpy(np.load(io.BytesIO(zf.read(f"params/{name}.npy")), allow_pickle=False))
    model.unet.load_state_dict(state)
    model.eval()
    return model


__all__ = [
    "CheckpointError",
    "ColorizerConfig",
    "ColorizerModel",
    "WarpedReference",
    "colorize",
    "load_checkpoint",
    "predict_chroma",
    "save_checkpoint",
    "warp_reference",
]
