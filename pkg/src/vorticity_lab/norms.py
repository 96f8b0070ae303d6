from functools import singledispatch

import numpy as np
from scipy.integrate import trapezoid

from vorticity_lab.grid import NormKind, ScalarField, VectorField
from vorticity_lab.operators import X_AXIS, Y_AXIS, first_derivative, second_derivative


def inner(f: ScalarField, g: ScalarField) -> float:
    return float(np.sum(f.grid.weights * f.values * g.values))


def integral(f: ScalarField) -> float:
    return float(np.sum(f.grid.weights * f.values))


def mean(f: ScalarField) -> float:
    return integral(f) / f.grid.area


def centered_norm(f: ScalarField) -> float:
    centered = f.values - mean(f)
    return float(np.sqrt(np.sum(f.grid.weights * centered**2)))


def max_speed(v: VectorField) -> float:
    return float(np.max(np.hypot(v.u1.values, v.u2.values)))


def dirichlet_energy(f: ScalarField) -> float:
    """Edge-based discrete integral of |grad f|^2.

    Pairs exactly with the five-point Laplacian: -<lap_h f, f - c> equals this
    value whenever f takes the constant value c on the whole boundary.
    """
    grid = f.grid
    q = f.values
    wx = np.full(grid.nx, grid.dx)
    wx[[0, -1]] *= 0.5
    wy = np.full(grid.ny, grid.dy)
    wy[[0, -1]] *= 0.5
    jumps_x = np.diff(q, axis=X_AXIS) / grid.dx
    jumps_y = np.diff(q, axis=Y_AXIS) / grid.dy
    return float(
        grid.dx * np.sum(wy[:, None] * jumps_x**2) + grid.dy * np.sum(wx[None, :] * jumps_y**2)
    )


def _weighted_sum_of_squares(f: ScalarField, values: np.ndarray) -> float:
    return float(np.sum(f.grid.weights * values**2))


def _squared_norm(f: ScalarField, kind: NormKind) -> float:
    grid = f.grid
    q = f.values
    match kind:
        case NormKind.L2:
            return _weighted_sum_of_squares(f, q)
        case NormKind.L4:
            return float(np.sqrt(np.sum(grid.weights * q**4)))
        case NormKind.LINF:
            return float(np.max(np.abs(q))) ** 2
        case NormKind.GRAD_L2:
            qx = first_derivative(q, grid.dx, X_AXIS)
            qy = first_derivative(q, grid.dy, Y_AXIS)
            return _weighted_sum_of_squares(f, qx) + _weighted_sum_of_squares(f, qy)
        case NormKind.H1:
            return _squared_norm(f, NormKind.L2) + _squared_norm(f, NormKind.GRAD_L2)
        case NormKind.H2:
            qxx = second_derivative(q, grid.dx, X_AXIS)
            qyy = second_derivative(q, grid.dy, Y_AXIS)
            qxy = first_derivative(first_derivative(q, grid.dy, Y_AXIS), grid.dx, X_AXIS)
            hessian = (
                _weighted_sum_of_squares(f, qxx)
                + 2.0 * _weighted_sum_of_squares(f, qxy)
                + _weighted_sum_of_squares(f, qyy)
            )
            return _squared_norm(f, NormKind.H1) + hessian


@singledispatch
def norm_spatial(f: ScalarField | VectorField, kind: NormKind) -> float:
    raise NotImplementedError(f"'{f.__class__.__name__}' has no spatial norm")

@norm_spatial.register
def _(f: ScalarField, kind: NormKind) -> float:
    return float(np.sqrt(_squared_norm(f, kind)))

@norm_spatial.register
def _(f: VectorField, kind: NormKind) -> float:
    return float(np.sqrt(sum(_squared_norm(component, kind) for component in f.components())))


def time_l2(values: np.ndarray, dt: float) -> float:
    samples = np.asarray(values, dtype=float)
    if samples.size < 2:
        return 0.0
    return float(np.sqrt(trapezoid(samples**2, dx=dt)))


def time_linf(values: np.ndarray) -> float:
    samples = np.asarray(values, dtype=float)
    return float(np.max(np.abs(samples))) if samples.size else 0.0
