import numpy as np
import pytest

from conftest import random_field
from vorticity_lab.grid import NormKind, ScalarField, VectorField, make_grid
from vorticity_lab.norms import (
    centered_norm, dirichlet_energy, inner, integral, mean, norm_spatial, time_l2, time_linf,
)
from vorticity_lab.operators import laplacian


def _sine(grid):
    return ScalarField.from_function(grid, lambda x, y: np.sin(np.pi * x) * np.sin(np.pi * y))


def test_mean_of_constant_field(grid9):
    assert mean(ScalarField.constant(grid9, 3.0)) == pytest.approx(3.0, rel=1e-14)


def test_mean_of_linear_field_is_exact(grid9):
    assert mean(ScalarField.from_function(grid9, lambda x, y: x)) == pytest.approx(0.5, rel=1e-14)


def test_integral_on_rectangle():
    grid = make_grid(9, 17, 2.0, 3.0)
    assert integral(ScalarField.constant(grid, 1.0)) == pytest.approx(6.0, rel=1e-14)


def test_l2_of_sine_product(grid33):
    assert norm_spatial(_sine(grid33), NormKind.L2) == pytest.approx(0.5, rel=1e-6)


def test_grad_l2_of_sine_product():
    grid = make_grid(65, 65)
    assert norm_spatial(_sine(grid), NormKind.GRAD_L2) == pytest.approx(np.pi / np.sqrt(2.0), rel=1e-3)


def test_l4_of_sine_product():
    grid = make_grid(65, 65)
    assert norm_spatial(_sine(grid), NormKind.L4) == pytest.approx((9.0 / 64.0) ** 0.25, rel=1e-6)


def test_h1_is_l2_plus_gradient(grid17):
    f = random_field(grid17, 0)
    h1 = norm_spatial(f, NormKind.H1) ** 2
    parts = norm_spatial(f, NormKind.L2) ** 2 + norm_spatial(f, NormKind.GRAD_L2) ** 2
    assert h1 == pytest.approx(parts, rel=1e-12)


@pytest.mark.parametrize("kind", list(NormKind))
def test_norms_of_zero_field(grid9, kind):
    assert norm_spatial(ScalarField.zeros(grid9), kind) == 0.0


def test_linf(grid9):
    values = np.zeros(grid9.shape)
    values[4, 2] = -7.0
    assert norm_spatial(ScalarField(grid9, values), NormKind.LINF) == 7.0


def test_vector_norm_combines_components(grid9):
    v = VectorField(ScalarField.constant(grid9, 3.0), ScalarField.constant(grid9, 4.0))
    assert norm_spatial(v, NormKind.L2) == pytest.approx(5.0, rel=1e-14)


def test_centered_norm_ignores_the_mean(grid17):
    f = random_field(grid17, 1)
    assert centered_norm(f + 10.0) == pytest.approx(centered_norm(f), rel=1e-10)
    assert centered_norm(ScalarField.constant(grid17, 4.0)) == pytest.approx(0.0, abs=1e-14)


@pytest.mark.parametrize("c", [0.0, 2.5])
def test_dirichlet_energy_pairs_with_laplacian(grid17, c):
    f = random_field(grid17, 2, boundary=c)
    assert dirichlet_energy(f) == pytest.approx(-inner(laplacian(f), f - c), rel=1e-12)


def test_dirichlet_energy_of_constant_is_zero(grid9):
    assert dirichlet_energy(ScalarField.constant(grid9, 5.0)) == 0.0


def test_time_norms():
    values = np.ones(11)
    assert time_l2(values, 0.1) == pytest.approx(1.0, rel=1e-14)
    assert time_l2(np.array([2.0]), 0.1) == 0.0
    assert time_linf(np.array([1.0, -3.0, 2.0])) == 3.0
    assert time_linf(np.array([])) == 0.0
