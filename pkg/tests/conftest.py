"""Shared fixtures and small deterministic image builders."""

import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.Generator(np.random.Philox(12345))


def step_image(h=32, w=32, col=16, left=0, right=255):
    """Vertical step edge: columns < col get `left`, the rest `right`."""
    img = np.full((h, w), left, dtype=np.uint8)
    img[:, col:] = right
    return img


def checkerboard(square=32, tiles=2):
    """tiles x tiles checkerboard of `square`-px squares, values 0/255."""
    side = square * tiles
    yy, xx = np.meshgrid(np.arange(side), np.arange(side), indexing="ij")
    board = ((yy // square + xx // square) % 2) * 255
    return board.astype(np.uint8)
