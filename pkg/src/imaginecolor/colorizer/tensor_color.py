"""Differentiable Lab <-> sRGB on (N, 3, H, W) tensors, same constants as the numpy path."""
import torch

from ..colorspace import EPSILON, KAPPA, RGB_TO_XYZ, WHITE_D65, XYZ_TO_RGB


def _const(arr, ref):
    return torch.as_tensor(arr, dtype=ref.dtype, device=ref.device)


def _srgb_to_linear(c):
    hi = ((c.clamp(min=0.04045) + 0.055) / 1.055) ** 2.4
    return torch.where(c <= 0.04045, c / 12.92, hi)


def _linear_to_srgb(c):
    hi = 1.055 * c.clamp(min=0.0031308) ** (1.0 / 2.4) - 0.055
    return torch.where(c <= 0.0031308, 12.92 * c, hi)


def rgb_to_lab(rgb):
    lin = _srgb_to_linear(rgb)
    xyz = torch.einsum("ij,njhw->nihw", _const(RGB_TO_XYZ, rgb), lin)
    t = xyz / _const(WHITE_D65, rgb).view(1, 3, 1, 1)
    f = torch.where(t > EPSILON, t.clamp(min=EPSILON) ** (1.0 / 3.0), (KAPPA * t + 16.0) / 116.0)
    fx, fy, fz = f[:, 0:1], f[:, 1:2], f[:, 2:3]
    return torch.cat([116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)], dim=1)


def lab_to_rgb(lab, clip=False):
    fy = (lab[:, 0:1] + 16.0) / 116.0
    fx = fy + lab[:, 1:2] / 500.0
    fz = fy - lab[:, 2:3] / 200.0
    f = torch.cat([fx, fy, fz], dim=1)
    t = torch.where(f**3 > EPSILON, f**3, (116.0 * f - 16.0) / KAPPA)
    xyz = t * _const(WHITE_D65, lab).view(1, 3, 1, 1)
    rgb = _linear_to_srgb(torch.einsum("ij,njhw->nihw", _const(XYZ_TO_RGB, lab), xyz))
    return rgb.clamp(0.0, 1.0) if clip else rgb
