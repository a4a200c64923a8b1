import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from fracsobolev import DomainMask, ExponentPack, Field, make_grid


@pytest.fixture
def grid1d():
    return make_grid(1, 512, 8.0)


@pytest.fixture
def grid2d():
    return make_grid(2, 64, 4.0)


@pytest.fixture
def interval_mask(grid1d):
    return DomainMask.from_shape(grid1d, {"kind": "interval", "bounds": [-1.0, 1.0]})


@pytest.fixture
def pack_head():
    return ExponentPack(dim=1, s=0.25, eps=0.8)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_field(grid, rng):
    return Field(grid=grid, values=rng.standard_normal(grid.shape))
