import numpy as np
import pytest

from convsim.pixelio import Image


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_image(rng, width, height):
    return Image(rng.integers(0, 256, size=(height, width)))
