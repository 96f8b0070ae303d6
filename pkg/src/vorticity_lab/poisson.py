from functools import cache
import logging
from typing import NamedTuple

import numpy as np
from scipy import fft

from vorticity_lab.errors import SolverError
from vorticity_lab.grid import Grid, ScalarField, VectorField
from vorticity_lab.operators import interior_laplacian

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-10

type BoundaryData = float | ScalarField


class NeumannSolution(NamedTuple):
    field: ScalarField
    shift: float


def _symbol(n: int, h: float, modes: np.ndarray) -> np.ndarray:
    return (2.0 - 2.0 * np.cos(np.pi * modes / (n - 1))) / h**2


@cache
def _dirichlet_symbol(grid: Grid) -> np.ndarray:
    lam_x = _symbol(grid.nx, grid.dx, np.arange(1, grid.nx - 1))
    lam_y = _symbol(grid.ny, grid.dy, np.arange(1, grid.ny - 1))
    return lam_y[:, None] + lam_x[None, :]


@cache
def _neumann_symbol(grid: Grid) -> np.ndarray:
    lam_x = _symbol(grid.nx, grid.dx, np.arange(grid.nx))
    lam_y = _symbol(grid.ny, grid.dy, np.arange(grid.ny))
    return lam_y[:, None] + lam_x[None, :]


def _relative(residual: np.ndarray, reference: np.ndarray) -> float:
    scale = float(np.max(np.abs(reference)))
    size = float(np.max(np.abs(residual))) if residual.size else 0.0
    if scale == 0.0:
        return size
    return size / scale


def solve_dirichlet(
    rhs: ScalarField, boundary: BoundaryData, shift: float = 0.0, tol: float = DEFAULT_TOL
) -> ScalarField:
    grid = rhs.grid
    dx2, dy2 = grid.dx**2, grid.dy**2
    f = np.zeros(grid.shape)
    mask = grid.boundary_mask
    match boundary:
        case ScalarField():
            f[mask] = boundary.values[mask]
        case _:
            f[mask] = float(boundary)

    r = np.array(rhs.values[1:-1, 1:-1])
    r[:, 0] += f[1:-1, 0] / dx2
    r[:, -1] += f[1:-1, -1] / dx2
    r[0, :] += f[0, 1:-1] / dy2
    r[-1, :] += f[-1, 1:-1] / dy2

    coefficients = fft.dstn(r, type=1)
    coefficients /= shift + _dirichlet_symbol(grid)
    f[1:-1, 1:-1] = fft.idstn(coefficients, type=1)

    residual = shift * f[1:-1, 1:-1] - interior_laplacian(f, grid.dx, grid.dy) - rhs.values[1:-1, 1:-1]
    reference = np.concatenate([r.ravel(), (shift * f[1:-1, 1:-1]).ravel()])
    relative = _relative(residual, reference)
    if not relative <= tol:
        raise SolverError(
            f"Dirichlet solve residual {relative:.3e} exceeds tolerance {tol:.1e}",
            residual=relative, tol=tol,
        )
    return ScalarField(grid, f)


def poisson_dirichlet(rhs: ScalarField, boundary_value: BoundaryData = 0.0, tol: float = DEFAULT_TOL) -> ScalarField:
    return solve_dirichlet(rhs, boundary_value, 0.0, tol)


def _neumann_operator(f: np.ndarray, dx: float, dy: float) -> np.ndarray:
    padded = np.pad(f, 1, mode="reflect")
    return -(
        (padded[1:-1, 2:] - 2.0 * f + padded[1:-1, :-2]) / dx**2
        + (padded[2:, 1:-1] - 2.0 * f + padded[:-2, 1:-1]) / dy**2
    )


def _flux_source(grid: Grid, flux: VectorField) -> np.ndarray:
    source = np.zeros(grid.shape)
    g1, g2 = flux.u1.values, flux.u2.values
    source[:, 0] += 2.0 * (-g1[:, 0]) / grid.dx
    source[:, -1] += 2.0 * g1[:, -1] / grid.dx
    source[0, :] += 2.0 * (-g2[0, :]) / grid.dy
    source[-1, :] += 2.0 * g2[-1, :] / grid.dy
    return source


def poisson_neumann(rhs: ScalarField, flux: VectorField | None = None, tol: float = DEFAULT_TOL) -> NeumannSolution:
    """Mean-zero f with -lap_h f = rhs - shift and df/dn = n . flux on the boundary.

    The constant ``shift`` is what has to be removed from rhs to make the
    discrete problem compatible; it is returned alongside the field.
    """
    grid = rhs.grid
    source = np.array(rhs.values)
    if flux is not None:
        source += _flux_source(grid, flux)

    raw = source.copy()
    shift = float(np.sum(grid.weights * source)) / grid.area
    source -= shift

    coefficients = fft.dctn(source, type=1)
    symbol = _neumann_symbol(grid)
    coefficients[0, 0] = 0.0
    coefficients[1:, :] /= symbol[1:, :]
    coefficients[0, 1:] /= symbol[0, 1:]
    f = fft.idctn(coefficients, type=1)
    f -= float(np.sum(grid.weights * f)) / grid.area

    residual = _neumann_operator(f, grid.dx, grid.dy) - source
    relative = _relative(residual, raw)
    if not relative <= tol:
        raise SolverError(
            f"Neumann solve residual {relative:.3e} exceeds tolerance {tol:.1e}",
            residual=relative, tol=tol,
        )
    if abs(shift) > 0.0:
        logger.debug("Neumann compatibility shift %.3e", shift)
    return NeumannSolution(ScalarField(grid, f), shift)
