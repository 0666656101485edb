"""sRGB <-> CIE Lab conversion (D65) and 8-bit image I/O.

Images are float arrays in [0, 1] of shape (H, W, 3).  Lab images are float
arrays of shape (H, W, 3) holding (L, a, b) with L in [0, 100].  Quantization
to 8 bits only happens in :func:`read_image` / :func:`write_png`.
"""
from __future__ import annotations

import io
import os

import numpy as np
from PIL import Image

# IEC 61966-2-1 primaries, D65.
RGB_TO_XYZ = np.array(
    [
        [0.4124564, 0.3575761, 0.1804375],
        [0.2126729, 0.7151522, 0.0721750],
        [0.0193339, 0.1191920, 0.9503041],
    ]
)
XYZ_TO_RGB = np.linalg.inv(RGB_TO_XYZ)
# White point taken from the matrix itself so that R=G=B maps to a=b=0 exactly.
WHITE_D65 = RGB_TO_XYZ.sum(axis=1)

EPSILON = 216.0 / 24389.0
KAPPA = 24389.0 / 27.0

L_RANGE = (0.0, 100.0)
AB_RANGE = (-128.0, 127.0)


class DomainError(ValueError):
    """Input values lie outside the domain of a color transform."""


def srgb_to_linear(c):
    c = np.asarray(c, dtype=np.float64)
    return np.where(c <= 0.04045, c / 12.92, ((c + 0.055) / 1.055) ** 2.4)


def linear_to_srgb(c):
    c = np.asarray(c, dtype=np.float64)
    safe = np.maximum(c, 0.0)
    return np.where(c <= 0.0031308, 12.92 * c, 1.055 * safe ** (1.0 / 2.4) - 0.055)


def _f(t):
    return np.where(t > EPSILON, np.cbrt(t), (KAPPA * t + 16.0) / 116.0)


def _f_inv(t):
    t3 = t**3
    return np.where(t3 > EPSILON, t3, (116.0 * t - 16.0) / KAPPA)


def _as_rgb(img):
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 3 or img.shape[-1] != 3 or img.shape[0] < 1 or img.shape[1] < 1:
        raise ValueError(f"expected an (H, W, 3) image, got shape {img.shape}")
    return img


def rgb_to_lab(img) -> np.ndarray:
    """Convert an sRGB image in [0, 1] to CIE Lab."""
    img = _as_rgb(img)
    if not np.all(np.isfinite(img)) or img.min() < 0.0 or img.max() > 1.0:
        raise DomainError("RGB values must lie in [0, 1]")
    xyz = srgb_to_linear(img) @ RGB_TO_XYZ.T
    fx, fy, fz = (_f(xyz[..., k] / WHITE_D65[k]) for k in range(3))
    lab = np.empty_like(img)
    lab[..., 0] = 116.0 * fy - 16.0
    lab[..., 1] = 500.0 * (fx - fy)
    lab[..., 2] = 200.0 * (fy - fz)
    return lab


def lab_to_rgb(lab, return_clipped: bool = False):
    """Convert CIE Lab to sRGB in [0, 1].

    Out-of-gamut colors are clipped.  With ``return_clipped=True`` a boolean
    (H, W) mask of clipped pixels is returned alongside the image.
    """
    lab = np.asarray(lab, dtype=np.float64)
    if lab.ndim != 3 or lab.shape[-1] != 3:
        raise ValueError(f"expected an (H, W, 3) Lab image, got shape {lab.shape}")
    fy = (lab[..., 0] + 16.0) / 116.0
    fx = fy + lab[..., 1] / 500.0
    fz = fy - lab[..., 2] / 200.0
    xyz = np.stack([_f_inv(fx), _f_inv(fy), _f_inv(fz)], axis=-1) * WHITE_D65
    rgb = linear_to_srgb(xyz @ XYZ_TO_RGB.T)
    # a tolerance keeps round-off at the gamut boundary from being flagged
    clipped = np.any((rgb < -1e-9) | (rgb > 1.0 + 1e-9), axis=-1)
    rgb = np.clip(rgb, 0.0, 1.0)
    if return_clipped:
        return rgb, clipped
    return rgb


def merge_lab(lightness, chroma) -> np.ndarray:
    """Stack an (H, W[, 1]) L channel with (H, W, 2) ab channels."""
    lightness = np.asarray(lightness, dtype=np.float64)
    chroma = np.asarray(chroma, dtype=np.float64)
    if lightness.ndim == 3:
        lightness = lightness[..., 0]
    if chroma.ndim != 3 or chroma.shape[-1] != 2 or chroma.shape[:2] != lightness.shape:
        raise ValueError(f"shape mismatch: L {lightness.shape} vs ab {chroma.shape}")
    return np.concatenate([lightness[..., None], chroma], axis=-1)


def split_lab(lab):
    lab = np.asarray(lab, dtype=np.float64)
    return lab[..., :1], lab[..., 1:]


def luminance_of(img) -> np.ndarray:
    """L channel of ``img`` rescaled to [0, 1], shape (H, W, 1)."""
    return rgb_to_lab(img)[..., :1] / 100.0


def gray_to_rgb(gray) -> np.ndarray:
    """Replicate a single-channel image to three channels."""
    gray = np.asarray(gray, dtype=np.float64)
    if gray.ndim == 3 and gray.shape[-1] == 1:
        gray = gray[..., 0]
    if gray.ndim != 2:
        raise ValueError(f"expected a single-channel image, got shape {gray.shape}")
    return np.repeat(gray[..., None], 3, axis=-1)


def lightness_of(img) -> np.ndarray:
    """L channel in [0, 100], shape (H, W, 1), for an RGB or single-channel image."""
    img = np.asarray(img, dtype=np.float64)
    if img.ndim == 2 or (img.ndim == 3 and img.shape[-1] == 1):
        img = gray_to_rgb(img)
    return rgb_to_lab(img)[..., :1]


def achromatic(lightness) -> np.ndarray:
    """RGB image with the given L channel (0..100) and zero chroma."""
    lightness = np.asarray(lightness, dtype=np.float64)
    if lightness.ndim == 3:
        lightness = lightness[..., 0]
    return lab_to_rgb(merge_lab(lightness, np.zeros(lightness.shape + (2,))))


# -- file I/O -----------------------------------------------------------------


def to_uint8(img) -> np.ndarray:
    return np.round(np.clip(np.asarray(img, dtype=np.float64), 0.0, 1.0) * 255.0).astype(np.uint8)


def read_image(source) -> np.ndarray:
    """Read a PNG/JPEG (path or bytes) into an (H, W, 3) float image."""
    if isinstance(source, (bytes, bytearray)):
        source = io.BytesIO(source)
    with Image.open(source) as im:
        im = im.convert("RGB")
        return np.asarray(im, dtype=np.float64) / 255.0


def encode_png(img) -> bytes:
    arr = to_uint8(img)
    if arr.ndim == 3 and arr.shape[-1] == 1:
        arr = arr[..., 0]
    buf = io.BytesIO()
    Image.fromarray(arr).save(buf, format="PNG")
    return buf.getvalue()


def write_png(path, img) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(encode_png(img))


def encode_label_png(labels) -> bytes:
    """Encode an integer label map as a 16-bit single-channel PNG."""
    labels = np.asarray(labels)
    if labels.min(initial=0) < 0 or labels.max(initial=0) > 65535:
        raise ValueError("labels must fit in 16 bits")
    buf = io.BytesIO()
    Image.fromarray(labels.astype(np.uint16)).save(buf, format="PNG")
    return buf.getvalue()


def decode_label_png(source) -> np.ndarray:
    if isinstance(source, (bytes, bytearray)):
        source = io.BytesIO(source)
    with Image.open(source) as im:
        return np.asarray(im).astype(np.int64)


def fit_chroma_to_gamut(lab, iterations=30):
    """Scale down the chroma of out-of-gamut pixels, keeping L, until they fit sRGB.

    Returns ``(lab, mapped)`` where ``mapped`` marks pixels whose chroma was
    reduced.  Bisection on the chroma scale; gray (scale 0) is always in gamut
    for L in [0, 100].
    """
    lab = np.array(lab, dtype=np.float64)
    _, mapped = lab_to_rgb(lab, return_clipped=True)
    if not mapped.any():
        return lab, mapped
    sub = lab[mapped]
    lo = np.zeros(len(sub))
    hi = np.ones(len(sub))
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        trial = np.concatenate([sub[:, :1], sub[:, 1:] * mid[:, None]], axis=1)
        _, out = lab_to_rgb(trial[None], return_clipped=True)
        ok = ~out[0]
        lo = np.where(ok, mid, lo)
        hi = np.where(ok, hi, mid)
    sub[:, 1:] *= lo[:, None]
    lab[mapped] = sub
    return lab, mapped
