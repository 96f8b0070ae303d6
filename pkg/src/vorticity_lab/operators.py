import numpy as np

from vorticity_lab.grid import ScalarField, VectorField

Y_AXIS = 0
X_AXIS = 1


def first_derivative(values: np.ndarray, h: float, axis: int) -> np.ndarray:
    # centered inside, second-order one-sided at the ends
    return np.gradient(values, h, axis=axis, edge_order=2)


def second_derivative(values: np.ndarray, h: float, axis: int) -> np.ndarray:
    f = np.moveaxis(values, axis, 0)
    out = np.empty_like(f)
    out[1:-1] = (f[2:] - 2.0 * f[1:-1] + f[:-2]) / h**2
    out[0] = (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) / h**2
    out[-1] = (2.0 * f[-1] - 5.0 * f[-2] + 4.0 * f[-3] - f[-4]) / h**2
    return np.moveaxis(out, 0, axis)


def sbp_derivative(values: np.ndarray, h: float, axis: int) -> np.ndarray:
    """First derivative satisfying summation by parts under trapezoid weights.

    Centered inside (bitwise identical to ``first_derivative`` there) with
    first-order one-sided closures, so that <a, D b> + <D a, b> reduces to the
    boundary values of a*b.
    """
    f = np.moveaxis(values, axis, 0)
    out = np.empty_like(f)
    out[1:-1] = (f[2:] - f[:-2]) / (2.0 * h)
    out[0] = (f[1] - f[0]) / h
    out[-1] = (f[-1] - f[-2]) / h
    return np.moveaxis(out, 0, axis)


def gradient(f: ScalarField) -> VectorField:
    grid = f.grid
    return VectorField(
        ScalarField(grid, first_derivative(f.values, grid.dx, X_AXIS)),
        ScalarField(grid, first_derivative(f.values, grid.dy, Y_AXIS)),
    )


def laplacian(f: ScalarField) -> ScalarField:
    grid = f.grid
    return ScalarField(
        grid,
        second_derivative(f.values, grid.dx, X_AXIS) + second_derivative(f.values, grid.dy, Y_AXIS),
    )


def interior_laplacian(values: np.ndarray, dx: float, dy: float) -> np.ndarray:
    return (
        (values[1:-1, 2:] - 2.0 * values[1:-1, 1:-1] + values[1:-1, :-2]) / dx**2
        + (values[2:, 1:-1] - 2.0 * values[1:-1, 1:-1] + values[:-2, 1:-1]) / dy**2
    )


def divergence(v: VectorField) -> ScalarField:
    grid = v.grid
    return ScalarField(
        grid,
        first_derivative(v.u1.values, grid.dx, X_AXIS) + first_derivative(v.u2.values, grid.dy, Y_AXIS),
    )


def curl(v: VectorField) -> ScalarField:
    grid = v.grid
    return ScalarField(
        grid,
        first_derivative(v.u2.values, grid.dx, X_AXIS) - first_derivative(v.u1.values, grid.dy, Y_AXIS),
    )


def perpendicular_gradient(psi: ScalarField) -> VectorField:
    grid = psi.grid
    return VectorField(
        ScalarField(grid, first_derivative(psi.values, grid.dy, Y_AXIS)),
        ScalarField(grid, -first_derivative(psi.values, grid.dx, X_AXIS)),
        psi,
    )


def advect(v: VectorField, f: ScalarField) -> ScalarField:
    """Skew-symmetric discretization of v . grad f.

    Averages the advective and flux forms with summation-by-parts derivatives,
    so <f, advect(v, f)> vanishes to rounding whenever v . n = 0. When the
    stream function of v is known the stream-flux form joins the average,
    which also makes advect(perp-grad psi, psi) vanish pointwise.
    """
    grid = v.grid
    dx, dy = grid.dx, grid.dy
    a1, a2, q = v.u1.values, v.u2.values, f.values

    qx = sbp_derivative(q, dx, X_AXIS)
    qy = sbp_derivative(q, dy, Y_AXIS)
    advective = a1 * qx + a2 * qy
    flux = sbp_derivative(a1 * q, dx, X_AXIS) + sbp_derivative(a2 * q, dy, Y_AXIS)

    if v.stream is None:
        return ScalarField(grid, 0.5 * (advective + flux))

    psi = v.stream.values
    stream_flux = sbp_derivative(psi * qy, dx, X_AXIS) - sbp_derivative(psi * qx, dy, Y_AXIS)
    return ScalarField(grid, (advective + flux - stream_flux) / 3.0)
