from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Callable, Self

import numpy as np

from vorticity_lab.errors import FieldError, GridError

MIN_NODES = 9


class NormKind(Enum):
    L2 = "L2"
    L4 = "L4"
    H1 = "H1"
    H2 = "H2"
    GRAD_L2 = "GradL2"
    LINF = "Linf"


@dataclass(frozen=True)
class Grid:
    # arrays on the grid have shape (ny, nx), boundary nodes included
    nx: int
    ny: int
    lx: float
    ly: float

    def __post_init__(self) -> None:
        if self.nx < MIN_NODES or self.ny < MIN_NODES:
            raise GridError(
                f"Grid needs at least {MIN_NODES} nodes per axis, got {self.nx}x{self.ny}",
                kind="dimension-too-small", nx=self.nx, ny=self.ny,
            )
        if not (self.lx > 0 and self.ly > 0) or not np.isfinite([self.lx, self.ly]).all():
            raise GridError(
                f"Grid extents must be positive, got lx={self.lx}, ly={self.ly}",
                kind="non-positive-extent", lx=self.lx, ly=self.ly,
            )

    @property
    def dx(self) -> float:
        return self.lx / (self.nx - 1)

    @property
    def dy(self) -> float:
        return self.ly / (self.ny - 1)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.ny, self.nx)

    @property
    def area(self) -> float:
        return self.lx * self.ly

    @cached_property
    def x(self) -> np.ndarray:
        return np.linspace(0.0, self.lx, self.nx)

    @cached_property
    def y(self) -> np.ndarray:
        return np.linspace(0.0, self.ly, self.ny)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x, self.y, indexing="xy")

    @cached_property
    def weights(self) -> np.ndarray:
        wx = np.full(self.nx, self.dx)
        wx[[0, -1]] *= 0.5
        wy = np.full(self.ny, self.dy)
        wy[[0, -1]] *= 0.5
        return np.outer(wy, wx)

    @cached_property
    def boundary_mask(self) -> np.ndarray:
        mask = np.zeros(self.shape, dtype=bool)
        mask[[0, -1], :] = True
        mask[:, [0, -1]] = True
        return mask


def make_grid(nx: int, ny: int, lx: float = 1.0, ly: float = 1.0) -> Grid:
    return Grid(int(nx), int(ny), float(lx), float(ly))


def _frozen_copy(values: np.ndarray) -> np.ndarray:
    array = np.array(values, dtype=float)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class ScalarField:
    grid: Grid
    values: np.ndarray

    # numpy scalars defer to our reflected operators
    __array_ufunc__ = None

    def __post_init__(self) -> None:
        values = _frozen_copy(self.values)
        if values.shape != self.grid.shape:
            raise FieldError(
                f"Field of shape {values.shape} does not match grid shape {self.grid.shape}",
                kind="shape-mismatch",
            )
        if not np.isfinite(values).all():
            raise FieldError("Field contains non-finite values", kind="non-finite-field")
        object.__setattr__(self, "values", values)

    @classmethod
    def zeros(cls, grid: Grid) -> Self:
        return cls(grid, np.zeros(grid.shape))

    @classmethod
    def constant(cls, grid: Grid, value: float) -> Self:
        return cls(grid, np.full(grid.shape, float(value)))

    @classmethod
    def from_function(cls, grid: Grid, function: Callable[[np.ndarray, np.ndarray], np.ndarray]) -> Self:
        x, y = grid.mesh()
        return cls(grid, np.broadcast_to(function(x, y), grid.shape))

    def boundary_values(self) -> np.ndarray:
        return self.values[self.grid.boundary_mask]

    def with_boundary(self, value: float) -> Self:
        values = self.values.copy()
        values[self.grid.boundary_mask] = value
        return type(self)(self.grid, values)

    def _check_grid(self, other: "ScalarField") -> None:
        if other.grid != self.grid:
            raise FieldError("Fields live on different grids", kind="shape-mismatch")

    def __add__(self, other: "ScalarField | float") -> "ScalarField":
        if isinstance(other, ScalarField):
            self._check_grid(other)
            return ScalarField(self.grid, self.values + other.values)
        return ScalarField(self.grid, self.values + other)

    def __sub__(self, other: "ScalarField | float") -> "ScalarField":
        if isinstance(other, ScalarField):
            self._check_grid(other)
            return ScalarField(self.grid, self.values - other.values)
        return ScalarField(self.grid, self.values - other)

    def __mul__(self, factor: float) -> "ScalarField":
        return ScalarField(self.grid, self.values * factor)

    __rmul__ = __mul__

    def __neg__(self) -> "ScalarField":
        return ScalarField(self.grid, -self.values)


@dataclass(frozen=True, eq=False)
class VectorField:
    u1: ScalarField
    u2: ScalarField
    # stream function the field came from; zero on the boundary
    stream: ScalarField | None = field(default=None)

    __array_ufunc__ = None

    def __post_init__(self) -> None:
        if self.u1.grid != self.u2.grid:
            raise FieldError("Vector components live on different grids", kind="shape-mismatch")
        if self.stream is not None and self.stream.grid != self.u1.grid:
            raise FieldError("Stream function lives on a different grid", kind="shape-mismatch")

    @property
    def grid(self) -> Grid:
        return self.u1.grid

    @classmethod
    def zeros(cls, grid: Grid) -> Self:
        return cls(ScalarField.zeros(grid), ScalarField.zeros(grid), ScalarField.zeros(grid))

    def components(self) -> tuple[ScalarField, ScalarField]:
        return (self.u1, self.u2)

    def __add__(self, other: "VectorField") -> "VectorField":
        stream = None
        if self.stream is not None and other.stream is not None:
            stream = self.stream + other.stream
        return VectorField(self.u1 + other.u1, self.u2 + other.u2, stream)

    def __sub__(self, other: "VectorField") -> "VectorField":
        stream = None
        if self.stream is not None and other.stream is not None:
            stream = self.stream - other.stream
        return VectorField(self.u1 - other.u1, self.u2 - other.u2, stream)

    def __mul__(self, factor: float) -> "VectorField":
        stream = self.stream * factor if self.stream is not None else None
        return VectorField(self.u1 * factor, self.u2 * factor, stream)

    __rmul__ = __mul__
