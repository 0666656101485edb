"""Reference warping by softmax-weighted dense feature correspondence.

Both images are compared as grayscale (their L channel) through VGG features
at quarter resolution; every input location gathers reference chroma from all
reference locations, weighted by a temperature softmax over cosine
similarities.  The largest weight is reported as confidence.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch
import torch.nn.functional as F

from .features import default_extractor
from .tensor_color import rgb_to_lab

WARP_LAYERS = ("relu2_2", "relu3_2")
DEFAULT_TEMPERATURE = 0.01


@dataclass
class WarpedReference:
    warped_chroma: np.ndarray  # (H, W, 2)
    confidence: np.ndarray  # (H, W, 1)


def _normalized(feat, size):
    feat = F.adaptive_avg_pool2d(feat, size) if feat.shape[-2:] != size else feat
    feat = feat - feat.mean(dim=(2, 3), keepdim=True)
    return feat / feat.norm(dim=1, keepdim=True).clamp(min=1e-8)


def correspondence_features(gray, extractor, layers=WARP_LAYERS):
    """Unit-norm per-location descriptors at quarter resolution, (N, C, h, w)."""
    h, w = gray.shape[-2:]
    size = (-(-h // 4), -(-w // 4))
    feats = extractor(gray.expand(-1, 3, -1, -1), layers)
    f = torch.cat([_normalized(feats[name], size) for name in layers], dim=1)
    return f / f.norm(dim=1, keepdim=True).clamp(min=1e-8)


def warp_tensors(lightness, ref_rgb, extractor=None, temperature=DEFAULT_TEMPERATURE, chunk=2048,
                 input_features=None):
    """Warp ``ref_rgb`` (N, 3, H, W) onto ``lightness`` (N, 1, H, W, L in [0, 100]).

    Returns ``(warped_ab, confidence)`` at full resolution.
    """
    extractor = extractor or default_extractor()
    ref_lab = rgb_to_lab(ref_rgb)
    fx = input_features if input_features is not None else correspondence_features(lightness / 100.0, extractor)
    fr = correspondence_features(ref_lab[:, :1] / 100.0, extractor)
    n, c, h, w = fx.shape
    ab_low = F.adaptive_avg_pool2d(ref_lab[:, 1:], (h, w)).flatten(2).transpose(1, 2)  # (N, hw, 2)
    q = fx.flatten(2).transpose(1, 2)  # (N, hw, C)
    k = fr.flatten(2)  # (N, C, hw)
    warped, conf = [], []
    for start in range(0, q.shape[1], chunk):
        attn = torch.softmax(torch.bmm(q[:, start:start + chunk], k) / temperature, dim=-1)
        warped.append(torch.bmm(attn, ab_low))
        conf.append(attn.max(dim=-1).values)
    warped = torch.cat(warped, dim=1).transpose(1, 2).reshape(n, 2, h, w)
    conf = torch.cat(conf, dim=1).reshape(n, 1, h, w)
    size = lightness.shape[-2:]
    warped = F.interpolate(warped, size=size, mode="bilinear", align_corners=False)
    conf = F.interpolate(conf, size=size, mode="bilinear", align_corners=False).clamp(0.0, 1.0)
    return warped, conf


def warp_reference(lightness, reference, extractor=None, temperature=DEFAULT_TEMPERATURE) -> WarpedReference:
    """Numpy front end: ``lightness`` (H, W[, 1]) in [0, 100], ``reference`` (H, W, 3) RGB."""
    L = np.asarray(lightness, dtype=np.float32)
    if L.ndim == 3:
        L = L[..., 0]
    ref = np.asarray(reference, dtype=np.float32)
    if ref.shape != L.shape + (3,):
        raise ValueError(f"reference shape {ref.shape} does not match lightness {L.shape}")
    with torch.no_grad():
        warped, conf = warp_tensors(
            torch.from_numpy(L)[None, None],
            torch.from_numpy(ref).permute(2, 0, 1)[None],
            extractor,
            temperature,
        )
    return WarpedReference(
        warped_chroma=warped[0].permute(1, 2, 0).double().numpy(),
        confidence=conf[0].permute(1, 2, 0).double().numpy(),
    )
