from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Self

import numpy as np

from vorticity_lab.grid import Grid, ScalarField
from vorticity_lab.output import read_field

DEFAULT_MODES = 4


def eigenmode(grid: Grid, a: int = 1, b: int = 1) -> ScalarField:
    rate = np.pi**2 * (a**2 / grid.lx**2 + b**2 / grid.ly**2)
    field = ScalarField.from_function(
        grid, lambda x, y: rate * np.sin(a * np.pi * x / grid.lx) * np.sin(b * np.pi * y / grid.ly)
    )
    # sin(pi) is not exactly zero in floating point
    return field.with_boundary(0.0)


def taylor_rate(grid: Grid) -> float:
    return np.pi**2 * (1.0 / grid.lx**2 + 1.0 / grid.ly**2)


def taylor(grid: Grid) -> ScalarField:
    return eigenmode(grid, 1, 1)


def taylor_exact(grid: Grid, t: float) -> ScalarField:
    return np.exp(-taylor_rate(grid) * t) * taylor(grid)


def constant(grid: Grid, c: float) -> ScalarField:
    return ScalarField.constant(grid, c)


def random_stream(grid: Grid, seed: int, modes: int = DEFAULT_MODES) -> ScalarField:
    """Vorticity of a band-limited random stream function.

    The stream function is a sine series over modes 1..``modes`` per axis with
    coefficients decaying like 1/(a^2 + b^2); the vorticity is its exact
    negative Laplacian, so the boundary trace is zero.
    """
    rng = np.random.default_rng(seed)
    x, y = grid.mesh()
    omega = np.zeros(grid.shape)
    for a in range(1, modes + 1):
        for b in range(1, modes + 1):
            coefficient = rng.standard_normal() / (a**2 + b**2)
            rate = np.pi**2 * (a**2 / grid.lx**2 + b**2 / grid.ly**2)
            omega += coefficient * rate * np.sin(a * np.pi * x / grid.lx) * np.sin(b * np.pi * y / grid.ly)
    return ScalarField(grid, omega).with_boundary(0.0)


class FixtureKind(Enum):
    TAYLOR = "taylor"
    CONSTANT = "constant"
    RANDOM_STREAM = "random-stream"
    FILE = "file"


@dataclass(frozen=True)
class FixtureSpec:
    kind: FixtureKind
    value: float = 0.0
    seed: int | None = None
    modes: int = DEFAULT_MODES
    path: Path | None = None

    @classmethod
    def parse(cls, text: str) -> Self:
        name, _, params = text.strip().partition(":")
        match name:
            case "taylor" if not params:
                return cls(FixtureKind.TAYLOR)
            case "constant":
                return cls(FixtureKind.CONSTANT, value=float(params))
            case "random-stream":
                if not params:
                    return cls(FixtureKind.RANDOM_STREAM)
                seed, _, modes = params.partition(",")
                parsed_modes = int(modes) if modes else DEFAULT_MODES
                if parsed_modes < 1:
                    raise ValueError(f"random-stream needs at least one mode, got {parsed_modes}")
                return cls(FixtureKind.RANDOM_STREAM, seed=int(seed), modes=parsed_modes)
        path = Path(text.strip())
        if path.suffix.lower() == ".csv":
            return cls(FixtureKind.FILE, path=path)
        raise ValueError(
            f"expected taylor, constant:c, random-stream:seed,modes or a .csv field file, got '{text}'"
        )

    def build(self, grid: Grid, seed: int = 0) -> ScalarField:
        match self.kind:
            case FixtureKind.TAYLOR:
                return taylor(grid)
            case FixtureKind.CONSTANT:
                return constant(grid, self.value)
            case FixtureKind.RANDOM_STREAM:
                return random_stream(grid, self.seed if self.seed is not None else seed, self.modes)
            case FixtureKind.FILE:
                return read_field(self.path)

    def __str__(self) -> str:
        match self.kind:
            case FixtureKind.TAYLOR:
                return "taylor"
            case FixtureKind.CONSTANT:
                return f"constant:{self.value!r}"
            case FixtureKind.RANDOM_STREAM:
                seed = "" if self.seed is None else str(self.seed)
                return f"random-stream:{seed},{self.modes}" if seed else "random-stream"
            case FixtureKind.FILE:
                return str(self.path)
