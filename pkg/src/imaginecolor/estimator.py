"""scikit-learn style front end to the whole colorization pipeline."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_image_list, check_rgb_image, check_seeds
from .colorizer import load_checkpoint, save_checkpoint
from .metrics import colorfulness
from .pipeline import run_pipeline
from .training import TrainConfig, train


class ImaginationColorizer(BaseEstimator):
    """Colorize grayscale images from synthesized, luminance-matched references.

    ``fit`` trains the colorization network on color images with simulated
    references; ``predict`` runs imagine -> compose -> colorize on each input.

    Parameters
    ----------
    n_references : int
        Number of candidate references sampled per image.
    seeds : sequence of int or None
        Latent seeds, one per reference; ``None`` means ``range(n_references)``.
    segmenter, generator : str or adapter
        Backends for context extraction and reference synthesis.
    base_width, depth, temperature :
        Network width, U-Net depth and warp softmax temperature.
    iterations, batch_size, crop_size, learning_rate, random_state :
        Training schedule.

    Attributes
    ----------
    model_ : ColorizerModel
    training_log_ : list of dict
    """

    def __init__(self, n_references=6, seeds=None, segmenter="toy", generator="toy", base_width=64, depth=4,
                 temperature=0.01, iterations=2000, batch_size=2, crop_size=256, learning_rate=2e-4,
                 random_state=0):
        self.n_references = n_references
        self.seeds = seeds
        self.segmenter = segmenter
        self.generator = generator
        self.base_width = base_width
        self.depth = depth
        self.temperature = temperature
        self.iterations = iterations
        self.batch_size = batch_size
        self.crop_size = crop_size
        self.learning_rate = learning_rate
        self.random_state = random_state

    def _train_config(self):
        return TrainConfig(
            learning_rate=self.learning_rate, batch_size=self.batch_size, iterations=self.iterations,
            seed=self.random_state, crop_size=self.crop_size, base_width=self.base_width, depth=self.depth,
            temperature=self.temperature,
        )

    def fit(self, X, y=None):
        images = check_image_list(X, min_count=2)
        self.model_, self.training_log_ = train(images, self._train_config())
        return self

    def predict(self, X, seeds=None):
        check_is_fitted(self, "model_")
        seeds = check_seeds(self.seeds if seeds is None else seeds, self.n_references)
        return [
            run_pipeline(img, len(seeds), seeds, self.segmenter, self.generator, self.model_).result
            for img in check_image_list(X)
        ]

    def sample(self, image, seed_sets):
        """Several colorizations of one image, one per seed set."""
        image = check_rgb_image(image)
        return [self.predict([image], seeds=s)[0] for s in seed_sets]

    def score(self, X, y=None):
        """Mean colorfulness of the predictions."""
        return float(np.mean([colorfulness(out) for out in self.predict(X)]))

    def save(self, path):
        check_is_fitted(self, "model_")
        save_checkpoint(self.model_, path)

    @classmethod
    def from_checkpoint(cls, path, **params):
        model = load_checkpoint(path)
        est = cls(base_width=model.config.base_width, depth=model.config.depth,
                  temperature=model.config.temperature, **params)
        est.model_ = model
        est.training_log_ = []
        return est
