import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from imaginecolor.colorizer import ColorizerConfig, ColorizerModel  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def natural_images():
    from imaginecolor.datasets import random_crops

    return random_crops(6, size=64, seed=99)


@pytest.fixture(scope="session")
def zero_model():
    return ColorizerModel(ColorizerConfig(base_width=8), seed=0).zero_output().eval()


@pytest.fixture(scope="session")
def small_model():
    return ColorizerModel(ColorizerConfig(base_width=8), seed=3).eval()


def two_tone(h=32, w=32, low=0.2, high=0.8):
    img = np.full((h, w, 3), low)
    img[:, w // 2:] = high
    return img


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
