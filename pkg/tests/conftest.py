import numpy as np
import pytest

from vorticity_lab.grid import Grid, ScalarField, make_grid


@pytest.fixture
def grid9() -> Grid:
    return make_grid(9, 9)


@pytest.fixture
def grid17() -> Grid:
    return make_grid(17, 17)


@pytest.fixture
def grid33() -> Grid:
    return make_grid(33, 33)


def random_field(grid: Grid, seed: int, boundary: float | None = None) -> ScalarField:
    field = ScalarField(grid, np.random.default_rng(seed).standard_normal(grid.shape))
    return field if boundary is None else field.with_boundary(boundary)
