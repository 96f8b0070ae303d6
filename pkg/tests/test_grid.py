import numpy as np
import pytest

from vorticity_lab.errors import FieldError, GridError
from vorticity_lab.grid import Grid, ScalarField, VectorField, make_grid


def test_spacing_and_shape():
    grid = make_grid(9, 9, 1.0, 1.0)
    assert grid.dx == 0.125
    assert grid.dy == 0.125
    assert grid.shape == (9, 9)


def test_rectangular_grid_shape_is_rows_by_columns():
    grid = make_grid(17, 9, 2.0, 1.0)
    assert grid.shape == (9, 17)
    assert grid.dx == pytest.approx(0.125)
    assert grid.x[-1] == 2.0
    assert grid.y[-1] == 1.0


@pytest.mark.parametrize("nx, ny", [(4, 9), (9, 8), (2, 2)])
def test_too_few_nodes(nx, ny):
    with pytest.raises(GridError) as error:
        make_grid(nx, ny)
    assert error.value.kind == "dimension-too-small"


@pytest.mark.parametrize("lx, ly", [(0.0, 1.0), (1.0, -1.0), (float("inf"), 1.0)])
def test_non_positive_extent(lx, ly):
    with pytest.raises(GridError) as error:
        Grid(9, 9, lx, ly)
    assert error.value.kind == "non-positive-extent"


def test_weights_sum_to_area():
    grid = make_grid(13, 9, 3.0, 0.5)
    assert np.sum(grid.weights) == pytest.approx(1.5, rel=1e-14)


def test_boundary_mask_counts_perimeter_nodes(grid9):
    assert np.count_nonzero(grid9.boundary_mask) == 4 * 9 - 4


def test_field_shape_mismatch(grid9):
    with pytest.raises(FieldError) as error:
        ScalarField(grid9, np.zeros((9, 10)))
    assert error.value.kind == "shape-mismatch"


def test_field_rejects_non_finite(grid9):
    values = np.zeros(grid9.shape)
    values[3, 3] = np.nan
    with pytest.raises(FieldError) as error:
        ScalarField(grid9, values)
    assert error.value.kind == "non-finite-field"


def test_field_values_are_read_only(grid9):
    field = ScalarField.constant(grid9, 2.0)
    with pytest.raises(ValueError):
        field.values[0, 0] = 1.0


def test_with_boundary_keeps_interior(grid9):
    field = ScalarField.constant(grid9, 2.0).with_boundary(-1.0)
    assert np.all(field.boundary_values() == -1.0)
    assert np.all(field.values[1:-1, 1:-1] == 2.0)


def test_arithmetic(grid9):
    a = ScalarField.constant(grid9, 2.0)
    b = ScalarField.constant(grid9, 3.0)
    assert np.all((a + b).values == 5.0)
    assert np.all((a - b).values == -1.0)
    assert np.all((-a).values == -2.0)
    assert np.all((a * 1.5).values == 3.0)
    assert np.all((np.float64(0.5) * a).values == 1.0)
    assert isinstance(np.float64(0.5) * a, ScalarField)


def test_fields_on_different_grids_do_not_mix(grid9):
    with pytest.raises(FieldError):
        ScalarField.zeros(grid9) + ScalarField.zeros(make_grid(11, 11))


def test_vector_stream_follows_arithmetic(grid9):
    psi = ScalarField.constant(grid9, 1.0)
    v = VectorField(ScalarField.zeros(grid9), ScalarField.zeros(grid9), psi)
    assert (v - v).stream is not None
    assert (2.0 * v).stream.values[0, 0] == 2.0
    w = VectorField(ScalarField.zeros(grid9), ScalarField.zeros(grid9))
    assert (v + w).stream is None
