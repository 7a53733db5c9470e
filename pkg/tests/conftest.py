import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def disk_mask(size, cy, cx, radius):
    ys, xs = np.mgrid[0:size, 0:size]
    return (ys - cy) ** 2 + (xs - cx) ** 2 <= radius**2


def rect_mask(size, y0, y1, x0, x1):
    m = np.zeros((size, size), dtype=bool)
    m[y0:y1, x0:x1] = True
    return m


@pytest.fixture
def make_disk():
    return disk_mask


@pytest.fixture
def make_rect():
    return rect_mask
