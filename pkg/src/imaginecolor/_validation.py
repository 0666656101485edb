"""Input checks shared by the estimator, CLI and service."""
import numpy as np

from .colorspace import DomainError


def check_rgb_image(img, name="image"):
    """Return ``img`` as a float64 (H, W, 3) array in [0, 1], or raise."""
    arr = np.asarray(img)
    if arr.dtype == np.uint8:
        arr = arr / 255.0
    arr = np.asarray(arr, dtype=np.float64)
    if arr.ndim == 2:
        arr = np.repeat(arr[..., None], 3, axis=-1)
    elif arr.ndim == 3 and arr.shape[-1] == 1:
        arr = np.repeat(arr, 3, axis=-1)
    if arr.ndim != 3 or arr.shape[-1] != 3 or min(arr.shape[:2]) < 1:
        raise ValueError(f"{name}: expected an (H, W, 3) or (H, W) image, got shape {np.shape(img)}")
    if not np.all(np.isfinite(arr)) or arr.min() < 0.0 or arr.max() > 1.0:
        raise DomainError(f"{name}: values must lie in [0, 1]")
    return arr


def check_image_list(images, min_count=1, name="X"):
    if isinstance(images, np.ndarray) and images.ndim in (2, 3):
        images = [images]
    images = [check_rgb_image(img, f"{name}[{k}]") for k, img in enumerate(images)]
    if len(images) < min_count:
        raise ValueError(f"{name}: need at least {min_count} image(s), got {len(images)}")
    return images


def check_seeds(seeds, n):
    if seeds is None:
        return list(range(n))
    seeds = [int(s) for s in seeds]
    if len(seeds) != n:
        raise ValueError(f"expected {n} seeds, got {len(seeds)}")
    return seeds
