"""VGG-19 feature extractor shared by the warp and the perceptual loss.

Pretrained ImageNet weights are used when a torchvision ``vgg19`` state dict
is available (``weights`` argument or ``IMAGINECOLOR_VGG19_WEIGHTS``);
otherwise the network is initialized deterministically from ``seed``.
Max-pooling uses ``ceil_mode`` so tiny inputs still reach conv5_2; for even
sizes this is identical to the stock network.
"""
from __future__ import annotations

import functools
import hashlib
import os

import torch
from torch import nn
from torchvision.models import vgg19

IMAGENET_MEAN = (0.485, 0.456, 0.406)
IMAGENET_STD = (0.229, 0.224, 0.225)

LAYER_INDEX = {
    "conv1_1": 0, "relu1_1": 1, "conv1_2": 2, "relu1_2": 3,
    "conv2_1": 5, "relu2_1": 6, "conv2_2": 7, "relu2_2": 8,
    "conv3_1": 10, "relu3_1": 11, "conv3_2": 12, "relu3_2": 13,
    "conv4_1": 19, "relu4_1": 20, "conv4_2": 21, "relu4_2": 22,
    "conv5_1": 28, "relu5_1": 29, "conv5_2": 30, "relu5_2": 31,
}
WEIGHTS_ENV = "IMAGINECOLOR_VGG19_WEIGHTS"


class VGGFeatures(nn.Module):
    def __init__(self, seed=0, weights=None, last_layer="relu5_2"):
        super().__init__()
        with torch.random.fork_rng(devices=[]):
            torch.manual_seed(seed)
            body = vgg19(weights=None).features
        layers = [nn.MaxPool2d(2, 2, ceil_mode=True) if isinstance(m, nn.MaxPool2d) else m for m in body]
        self.body = nn.Sequential(*layers[: LAYER_INDEX[last_layer] + 1])
        self.seed = seed
        self.pretrained = False
        if weights is not None:
            state = torch.load(weights, map_location="cpu", weights_only=True)
            state = {k.removeprefix("features."): v for k, v in state.items() if not k.startswith("classifier")}
            self.body.load_state_dict({k: v for k, v in state.items() if k.split(".")[0].isdigit()
                                       and int(k.split(".")[0]) < len(self.body)})
            self.pretrained = True
        for m in self.body:
            if isinstance(m, nn.ReLU):
                m.inplace = False
        self.register_buffer("mean", torch.tensor(IMAGENET_MEAN).view(1, 3, 1, 1))
        self.register_buffer("std", torch.tensor(IMAGENET_STD).view(1, 3, 1, 1))
        self.requires_grad_(False)
        self.eval()

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        for name, p in sorted(self.body.state_dict().items()):
            h.update(name.encode())
            h.update(p.detach().cpu().float().numpy().tobytes())
        return h.hexdigest()[:16]

    def identity(self) -> dict:
        return {"network": "vgg19", "pretrained": self.pretrained, "seed": self.seed,
                "fingerprint": self.fingerprint()}

    def forward(self, rgb, layers):
        """Run ``rgb`` (N, 3, H, W) in [0, 1] and return {layer name: activation}."""
        wanted = {LAYER_INDEX[name]: name for name in layers}
        last = max(wanted)
        x = (rgb - self.mean.to(rgb.dtype)) / self.std.to(rgb.dtype)
        out = {}
        for idx, module in enumerate(self.body):
            x = module(x)
            if idx in wanted:
                out[wanted[idx]] = x
            if idx == last:
                break
        return out


@functools.lru_cache(maxsize=4)
def _cached(seed, weights):
    return VGGFeatures(seed=seed, weights=weights)


def default_extractor(seed=0, weights=None) -> VGGFeatures:
    """Shared, read-only extractor instance."""
    weights = weights or os.environ.get(WEIGHTS_ENV) or None
    return _cached(seed, weights)
