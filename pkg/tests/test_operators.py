import numpy as np
import pytest

from conftest import random_field
from vorticity_lab.grid import NormKind, ScalarField, VectorField, make_grid
from vorticity_lab.norms import inner, norm_spatial
from vorticity_lab.operators import (
    advect, curl, divergence, gradient, laplacian, perpendicular_gradient,
)


def test_gradient_of_linear_field_is_exact(grid9):
    f = ScalarField.from_function(grid9, lambda x, y: 3.0 * x - 2.0 * y)
    g = gradient(f)
    np.testing.assert_allclose(g.u1.values, 3.0, rtol=1e-12)
    np.testing.assert_allclose(g.u2.values, -2.0, rtol=1e-12)


def test_laplacian_of_quadratic_is_four_everywhere(grid9):
    f = ScalarField.from_function(grid9, lambda x, y: x**2 + y**2)
    np.testing.assert_allclose(laplacian(f).values, 4.0, rtol=1e-9)


def test_curl_of_shear(grid9):
    v = VectorField(ScalarField.from_function(grid9, lambda x, y: y), ScalarField.zeros(grid9))
    np.testing.assert_allclose(curl(v).values, -1.0, rtol=1e-12)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_curl_of_gradient_vanishes_inside(grid17, seed):
    f = random_field(grid17, seed)
    scale = np.max(np.abs(f.values)) / (grid17.dx * grid17.dy)
    assert np.max(np.abs(curl(gradient(f)).values[1:-1, 1:-1])) <= 1e-12 * scale


def test_perpendicular_gradient_is_divergence_free_inside(grid17):
    psi = ScalarField.from_function(grid17, lambda x, y: np.sin(np.pi * x) * np.sin(2 * np.pi * y) * x)
    div = divergence(perpendicular_gradient(psi))
    assert np.max(np.abs(div.values[1:-1, 1:-1])) < 1e-10


def test_uniform_advection_of_x(grid9):
    v = VectorField(ScalarField.constant(grid9, 1.0), ScalarField.zeros(grid9))
    f = ScalarField.from_function(grid9, lambda x, y: x)
    np.testing.assert_allclose(advect(v, f).values[1:-1, 1:-1], 1.0, rtol=1e-12)


def _wall_velocity(grid, seed):
    # stream function vanishing on the walls gives v . n = 0
    return perpendicular_gradient(random_field(grid, seed, boundary=0.0))


def test_advection_of_own_stream_function_vanishes(grid17):
    psi = random_field(grid17, 3, boundary=0.0)
    assert np.max(np.abs(advect(perpendicular_gradient(psi), psi).values)) == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("seed", range(100))
def test_advection_is_skew_symmetric(grid17, seed):
    v = _wall_velocity(grid17, seed)
    f = random_field(grid17, 1000 + seed)
    product = inner(f, advect(v, f))
    speed = np.max(np.hypot(v.u1.values, v.u2.values))
    assert abs(product) <= 1e-12 * norm_spatial(f, NormKind.L2) ** 2 * speed


@pytest.mark.parametrize("with_stream", [True, False])
def test_advection_is_skew_symmetric_without_stream(grid17, with_stream):
    v = _wall_velocity(grid17, 7)
    if not with_stream:
        v = VectorField(v.u1, v.u2)
    f = random_field(grid17, 8)
    speed = np.max(np.hypot(v.u1.values, v.u2.values))
    assert abs(inner(f, advect(v, f))) <= 1e-12 * norm_spatial(f, NormKind.L2) ** 2 * speed


def test_advection_is_bilinear(grid17):
    v, w = _wall_velocity(grid17, 1), _wall_velocity(grid17, 2)
    f, g = random_field(grid17, 3), random_field(grid17, 4)
    combined = advect(v + 2.0 * w, f - 3.0 * g)
    expected = advect(v, f) - 3.0 * advect(v, g) + 2.0 * advect(w, f) - 6.0 * advect(w, g)
    np.testing.assert_allclose(combined.values, expected.values, atol=1e-10)


def test_laplacian_is_symmetric_for_fields_vanishing_on_the_boundary(grid17):
    f = random_field(grid17, 5, boundary=0.0)
    g = random_field(grid17, 6, boundary=0.0)
    assert inner(laplacian(f), g) == pytest.approx(inner(f, laplacian(g)), rel=1e-12, abs=1e-10)


def test_operators_on_rectangle():
    grid = make_grid(17, 9, 2.0, 1.0)
    f = ScalarField.from_function(grid, lambda x, y: x * y)
    g = gradient(f)
    x, y = grid.mesh()
    np.testing.assert_allclose(g.u1.values, y, atol=1e-12)
    np.testing.assert_allclose(g.u2.values, x, atol=1e-12)
