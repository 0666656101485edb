"""Small natural-image corpus built from images bundled with scikit-image and scikit-learn."""
from __future__ import annotations

import functools

import numpy as np
from skimage import data as skdata
from skimage.transform import resize


@functools.lru_cache(maxsize=1)
def source_images():
    """Bundled color photographs as float arrays in [0, 1]."""
    from sklearn.datasets import load_sample_images

    loaders = [skdata.astronaut, skdata.coffee, skdata.chelsea, skdata.rocket, skdata.hubble_deep_field,
               skdata.retina, skdata.immunohistochemistry, lambda: skdata.stereo_motorcycle()[0],
               lambda: skdata.stereo_motorcycle()[1]]
    images = [np.asarray(load(), dtype=np.float64)[..., :3] / 255.0 for load in loaders]
    images += [np.asarray(img, dtype=np.float64) / 255.0 for img in load_sample_images().images]
    return tuple(images)


def random_crops(count, size=128, seed=0, min_scale=0.35):
    """``count`` square crops (random scale and position) resized to ``size``."""
    sources = source_images()
    rng = np.random.default_rng(seed)
    out = []
    for k in range(count):
        src = sources[k % len(sources)] if count >= len(sources) else sources[rng.integers(len(sources))]
        h, w = src.shape[:2]
        side = int(min(h, w) * rng.uniform(min_scale, 1.0))
        y = int(rng.integers(h - side + 1))
        x = int(rng.integers(w - side + 1))
        crop = resize(src[y:y + side, x:x + side], (size, size), order=1, anti_aliasing=True)
        out.append(np.clip(crop, 0.0, 1.0))
    return out
