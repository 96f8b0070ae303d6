from dataclasses import dataclass
import logging
from typing import Iterator, Sequence

import numpy as np

from vorticity_lab.errors import PreconditionError
from vorticity_lab.fixtures import eigenmode, taylor, taylor_exact, taylor_rate
from vorticity_lab.forward import BoundaryVorticity, SolverConfig, StorageMode, StoragePolicy, forward_solve
from vorticity_lab.grid import NormKind, ScalarField, make_grid
from vorticity_lab.norms import norm_spatial
from vorticity_lab.poisson import poisson_dirichlet

logger = logging.getLogger(__name__)

MIN_GRIDS = 3


@dataclass(frozen=True)
class ConvergenceTable:
    study: str
    sizes: tuple[int, ...]
    spacings: np.ndarray
    errors: np.ndarray

    @property
    def orders(self) -> np.ndarray:
        orders = np.full(len(self.sizes), np.nan)
        orders[1:] = np.log(self.errors[:-1] / self.errors[1:]) / np.log(self.spacings[:-1] / self.spacings[1:])
        return orders

    def rows(self) -> Iterator[tuple[int, float, float, float]]:
        for n, h, error, order in zip(self.sizes, self.spacings, self.errors, self.orders):
            yield n, float(h), float(error), float(order)


def _relative_error(computed: ScalarField, exact: ScalarField) -> float:
    return norm_spatial(computed - exact, NormKind.L2) / norm_spatial(exact, NormKind.L2)


def taylor_error(n: int, dt: float, T: float, lx: float = 1.0, ly: float = 1.0, advection: bool = True) -> float:
    grid = make_grid(n, n, lx, ly)
    steps = max(1, round(T / dt))
    cfg = SolverConfig(grid, dt, T, advection_on=advection, storage=StoragePolicy(StorageMode.EVERY, steps))
    trajectory = forward_solve(taylor(grid), BoundaryVorticity.constant(0.0, cfg.nt, dt), cfg)
    final = trajectory.snapshots[-1].omega
    return _relative_error(final, taylor_exact(grid, cfg.nt * dt))


def poisson_error(n: int, lx: float = 1.0, ly: float = 1.0) -> float:
    grid = make_grid(n, n, lx, ly)
    rhs = eigenmode(grid)
    exact = (1.0 / taylor_rate(grid)) * rhs
    return _relative_error(poisson_dirichlet(rhs), exact)


def convergence_study(
    study: str,
    sizes: Sequence[int],
    *,
    lx: float = 1.0,
    ly: float = 1.0,
    T: float = 0.1,
    dt: float = 1e-3,
    advection: bool = True,
) -> ConvergenceTable:
    if len(sizes) < MIN_GRIDS:
        raise PreconditionError(
            f"Convergence study needs at least {MIN_GRIDS} grids, got {len(sizes)}", sizes=list(sizes)
        )
    sizes = tuple(sorted(sizes))
    spacings = np.array([1.0 / (n - 1) for n in sizes])
    errors = []
    for n in sizes:
        match study:
            case "taylor":
                steps = max(1, round(T / (dt * (sizes[0] - 1) / (n - 1))))
                error = taylor_error(n, T / steps, T, lx, ly, advection)
            case "poisson":
                error = poisson_error(n, lx, ly)
            case _:
                raise PreconditionError(f"Unknown convergence study '{study}'", study=study)
        logger.info("Convergence %s: n=%d error=%.6e", study, n, error)
        errors.append(error)
    return ConvergenceTable(study, sizes, spacings, np.array(errors))
