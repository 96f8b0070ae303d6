from dataclasses import dataclass, field
from enum import Enum
import logging
from typing import Any, Iterator, NamedTuple, Protocol, Self

import numpy as np

from vorticity_lab.errors import (
    CompatibilityError, DegenerateResponseError, FieldError, PreconditionError, SolverError,
    StepSizeError,
)
from vorticity_lab.grid import Grid, NormKind, ScalarField, VectorField
from vorticity_lab.norms import (
    centered_norm, dirichlet_energy, mean, max_speed, norm_spatial, time_l2,
)
from vorticity_lab.operators import (
    X_AXIS, Y_AXIS, advect, divergence, first_derivative, laplacian, perpendicular_gradient,
)
from vorticity_lab.poisson import DEFAULT_TOL, poisson_dirichlet, poisson_neumann, solve_dirichlet

logger = logging.getLogger(__name__)

TOL_BC = 1e-8
TOL_L = 1e-8
DEGENERATE_RESPONSE = 1e-14
CFL_SAFETY = 0.9
FIXED_POINT_TOL = 1e-13
MAX_FIXED_POINT_ITERS = 300


@dataclass(frozen=True, eq=False)
class BoundaryVorticity:
    t0: float
    dt: float
    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=float)
        values.setflags(write=False)
        if not self.dt > 0:
            raise PreconditionError(f"Boundary vorticity time step must be positive, got {self.dt}")
        if values.ndim != 1 or values.size < 1 or not np.isfinite(values).all():
            raise PreconditionError("Boundary vorticity needs a finite one-dimensional series")
        object.__setattr__(self, "values", values)

    @classmethod
    def constant(cls, value: float, nt: int, dt: float, t0: float = 0.0) -> Self:
        return cls(t0, dt, np.full(nt + 1, float(value)))

    @property
    def nt(self) -> int:
        return self.values.size - 1

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.values.size)

    def l2_norm(self) -> float:
        return time_l2(self.values, self.dt)

    def derivative_l2(self) -> float:
        slopes = np.diff(self.values) / self.dt
        return float(np.sqrt(self.dt * np.sum(slopes**2)))


class StorageMode(Enum):
    ALL = "all"
    NORMS = "norms"
    EVERY = "every"


@dataclass(frozen=True)
class StoragePolicy:
    mode: StorageMode = StorageMode.NORMS
    every: int = 1

    @classmethod
    def parse(cls, text: str) -> Self:
        name, _, count = text.strip().partition(":")
        match name:
            case "all" if not count:
                return cls(StorageMode.ALL)
            case "norms" if not count:
                return cls(StorageMode.NORMS)
            case "every" if count.isdigit() and int(count) > 0:
                return cls(StorageMode.EVERY, int(count))
        raise ValueError(f"expected all, norms or every:m, got '{text}'")

    def keeps(self, step: int, last_step: int) -> bool:
        match self.mode:
            case StorageMode.ALL:
                return True
            case StorageMode.NORMS:
                return False
            case StorageMode.EVERY:
                return step % self.every == 0 or step == last_step

    def __str__(self) -> str:
        return f"every:{self.every}" if self.mode is StorageMode.EVERY else self.mode.value


class AdvectionScheme(Enum):
    MIDPOINT = "midpoint"
    AB2 = "ab2"


@dataclass(frozen=True)
class SolverConfig:
    grid: Grid
    dt: float
    T: float
    advection_on: bool = True
    scheme: AdvectionScheme = AdvectionScheme.MIDPOINT
    cfl_safety: float = CFL_SAFETY
    poisson_tol: float = DEFAULT_TOL
    storage: StoragePolicy = field(default_factory=StoragePolicy)

    def __post_init__(self) -> None:
        if not self.dt > 0:
            raise PreconditionError(f"Time step must be positive, got {self.dt}", kind="inconsistent")
        if not self.T >= self.dt:
            raise PreconditionError(
                f"Horizon T={self.T} is shorter than the time step dt={self.dt}", kind="inconsistent"
            )
        if abs(self.nt * self.dt - self.T) > 1e-9 * self.T:
            raise PreconditionError(
                f"Horizon T={self.T} is not a whole number of steps dt={self.dt}", kind="inconsistent"
            )
        if not 0 < self.cfl_safety <= 1:
            raise PreconditionError(f"CFL safety factor must lie in (0, 1], got {self.cfl_safety}")
        if not self.poisson_tol > 0:
            raise PreconditionError(f"Poisson tolerance must be positive, got {self.poisson_tol}")

    @property
    def nt(self) -> int:
        return max(1, round(self.T / self.dt))

    def step_options(self, previous: "FlowState | None" = None) -> dict[str, Any]:
        return {
            "u_prev": previous.velocity if previous is not None else None,
            "omega_prev": previous.omega if previous is not None else None,
            "scheme": self.scheme,
            "advection_on": self.advection_on,
            "cfl_safety": self.cfl_safety,
            "tol": self.poisson_tol,
        }


class CompatibilityReport(NamedTuple):
    boundary_ok: bool
    max_boundary_mismatch: float
    mean_ok: bool | None
    mean_defect: float | None

    @property
    def ok(self) -> bool:
        return self.boundary_ok and self.mean_ok is not False


def boundary_trace(omega: ScalarField) -> float:
    return float(np.mean(omega.boundary_values()))


def check_compatibility(
    omega0: ScalarField, h0: float, L: float | None = None, tol_bc: float = TOL_BC, tol_L: float = TOL_L
) -> CompatibilityReport:
    mismatch = float(np.max(np.abs(omega0.boundary_values() - h0)))
    mean_ok = mean_defect = None
    if L is not None:
        mean_defect = abs(mean(omega0) - L)
        mean_ok = mean_defect <= tol_L
    return CompatibilityReport(mismatch <= tol_bc, mismatch, mean_ok, mean_defect)


def stream_function(omega: ScalarField, tol: float = DEFAULT_TOL) -> ScalarField:
    return poisson_dirichlet(omega, 0.0, tol)


def velocity_from_stream(psi: ScalarField, tol: float = 1e-10) -> VectorField:
    edge = psi.boundary_values()
    level = float(np.mean(edge))
    spread = float(np.max(np.abs(edge - level)))
    if spread > tol * max(1.0, float(np.max(np.abs(psi.values)))):
        raise CompatibilityError(
            f"Stream function varies by {spread:.3e} along the boundary",
            kind="boundary-not-constant", spread=spread,
        )
    if level != 0.0:
        psi = psi - level
    return perpendicular_gradient(psi)


def check_step_size(velocity: VectorField, dt: float, cfl_safety: float = CFL_SAFETY) -> None:
    grid = velocity.grid
    bound = cfl_safety * min(grid.dx, grid.dy) / (1.0 + max_speed(velocity))
    if dt > bound:
        raise StepSizeError(
            f"Time step {dt:.3e} exceeds the advective bound {bound:.3e}",
            kind="cfl-violation", dt=dt, bound=bound,
        )


def extrapolate[F: (ScalarField, VectorField)](current: F, previous: F | None) -> F:
    if previous is None:
        return current
    return 1.5 * current - 0.5 * previous


def imex_step(
    omega_n: ScalarField, explicit: ScalarField, h_next: float, dt: float, tol: float = DEFAULT_TOL
) -> ScalarField:
    rhs = (2.0 / dt) * omega_n + laplacian(omega_n) - 2.0 * explicit
    return solve_dirichlet(rhs, h_next, 2.0 / dt, tol)


def midpoint_step(
    omega_n: ScalarField,
    transport: VectorField,
    h_next: float,
    dt: float,
    *,
    forcing: ScalarField | None = None,
    tol: float = DEFAULT_TOL,
) -> ScalarField:
    """Solve (w - w_n)/dt = lap(w + w_n)/2 - advect(transport, (w + w_n)/2) - forcing.

    The advective term is iterated to a fixed point around the Helmholtz solve.
    At the fixed point it pairs to zero with the midpoint field minus its
    boundary value, so the step dissipates exactly the midpoint Dirichlet energy.
    """
    omega = omega_n
    change = float("inf")
    for _ in range(MAX_FIXED_POINT_ITERS):
        explicit = advect(transport, 0.5 * (omega_n + omega))
        if forcing is not None:
            explicit = explicit + forcing
        updated = imex_step(omega_n, explicit, h_next, dt, tol)
        change = float(np.max(np.abs(updated.values - omega.values)))
        omega = updated
        if change <= FIXED_POINT_TOL * (1.0 + float(np.max(np.abs(omega.values)))):
            return omega
    raise SolverError(
        f"Midpoint advection did not settle within {MAX_FIXED_POINT_ITERS} iterations",
        kind="solver-nonconvergence", change=change, dt=dt,
    )


@dataclass(frozen=True, eq=False)
class StepOperator:
    """h_next -> omega_{n+1} for one step from omega_n with the velocities frozen.

    The map is affine: apply(h) = apply(0) + h * unit_response().
    """
    omega_n: ScalarField
    dt: float
    tol: float = DEFAULT_TOL
    explicit: ScalarField | None = None
    transport: VectorField | None = None

    def apply(self, h_next: float) -> ScalarField:
        if self.transport is not None:
            return midpoint_step(self.omega_n, self.transport, h_next, self.dt, tol=self.tol)
        explicit = self.explicit if self.explicit is not None else ScalarField.zeros(self.omega_n.grid)
        return imex_step(self.omega_n, explicit, h_next, self.dt, self.tol)

    def unit_response(self) -> ScalarField:
        zero = ScalarField.zeros(self.omega_n.grid)
        if self.transport is not None:
            return midpoint_step(zero, self.transport, 1.0, self.dt, tol=self.tol)
        return imex_step(zero, zero, 1.0, self.dt, self.tol)


def step_operator(
    omega_n: ScalarField,
    u_n: VectorField,
    dt: float,
    *,
    u_prev: VectorField | None = None,
    omega_prev: ScalarField | None = None,
    scheme: AdvectionScheme = AdvectionScheme.MIDPOINT,
    advection_on: bool = True,
    cfl_safety: float = CFL_SAFETY,
    tol: float = DEFAULT_TOL,
) -> StepOperator:
    if not advection_on:
        return StepOperator(omega_n, dt, tol)
    check_step_size(u_n, dt, cfl_safety)
    match scheme:
        case AdvectionScheme.MIDPOINT:
            return StepOperator(omega_n, dt, tol, transport=extrapolate(u_n, u_prev))
        case AdvectionScheme.AB2:
            previous = None
            if u_prev is not None and omega_prev is not None:
                previous = advect(u_prev, omega_prev)
            return StepOperator(omega_n, dt, tol, explicit=extrapolate(advect(u_n, omega_n), previous))


def step_vorticity(
    omega_n: ScalarField,
    u_n: VectorField,
    h_next: float,
    dt: float,
    *,
    u_prev: VectorField | None = None,
    omega_prev: ScalarField | None = None,
    scheme: AdvectionScheme = AdvectionScheme.MIDPOINT,
    advection_on: bool = True,
    cfl_safety: float = CFL_SAFETY,
    tol: float = DEFAULT_TOL,
) -> ScalarField:
    operator = step_operator(
        omega_n, u_n, dt, u_prev=u_prev, omega_prev=omega_prev, scheme=scheme,
        advection_on=advection_on, cfl_safety=cfl_safety, tol=tol,
    )
    return operator.apply(h_next)


class BoundarySolve(NamedTuple):
    h_next: float
    omega_next: ScalarField
    base_mean: float
    response_mean: float


def solve_for_boundary_value(operator: StepOperator, L: float) -> BoundarySolve:
    base = operator.apply(0.0)
    response = operator.unit_response()
    m0, m1 = mean(base), mean(response)
    if abs(m1) < DEGENERATE_RESPONSE:
        raise DegenerateResponseError(
            f"Mean response to the boundary value is {m1:.3e}", response_mean=m1, dt=operator.dt
        )
    h_next = (L - m0) / m1
    return BoundarySolve(h_next, base + h_next * response, m0, m1)


def recover_pressure(
    u_curr: VectorField, u_prev: VectorField, dt: float, tol: float = DEFAULT_TOL
) -> ScalarField:
    grid = u_curr.grid
    rate = (u_curr - u_prev) * (1.0 / dt)
    convective = []
    forcing = []
    for component, change in zip(u_curr.components(), rate.components()):
        dq_dx = first_derivative(component.values, grid.dx, X_AXIS)
        dq_dy = first_derivative(component.values, grid.dy, Y_AXIS)
        transport = ScalarField(grid, u_curr.u1.values * dq_dx + u_curr.u2.values * dq_dy)
        convective.append(transport + change)
        forcing.append(laplacian(component) - transport - change)
    rhs = divergence(VectorField(*convective))
    return poisson_neumann(rhs, VectorField(*forcing), tol).field


@dataclass(frozen=True, eq=False)
class FlowState:
    step: int
    time: float
    omega: ScalarField
    psi: ScalarField
    velocity: VectorField
    pressure: ScalarField | None
    h: float
    dissipation: float = 0.0
    dudt_l2: float = 0.0


class BoundaryRule(Protocol):
    def start(self, omega0: ScalarField) -> tuple[float, float]: ...

    def advance(
        self, n: int, state: FlowState, dt: float, options: dict[str, Any]
    ) -> tuple[float, ScalarField]: ...


@dataclass(frozen=True)
class PrescribedBoundary:
    h: BoundaryVorticity

    def start(self, omega0: ScalarField) -> tuple[float, float]:
        return self.h.t0, float(self.h.values[0])

    def advance(
        self, n: int, state: FlowState, dt: float, options: dict[str, Any]
    ) -> tuple[float, ScalarField]:
        h_next = float(self.h.values[n + 1])
        return h_next, step_vorticity(state.omega, state.velocity, h_next, dt, **options)


class VorticityIntegrator:
    cfg: SolverConfig
    with_pressure: bool

    def __init__(self, cfg: SolverConfig, *, with_pressure: bool = True) -> None:
        self.cfg = cfg
        self.with_pressure = with_pressure

    def evolve(self, omega0: ScalarField, rule: BoundaryRule) -> Iterator[FlowState]:
        cfg = self.cfg
        dt, tol = cfg.dt, cfg.poisson_tol

        t0, h0 = rule.start(omega0)
        psi = stream_function(omega0, tol)
        velocity = velocity_from_stream(psi)
        pressure = recover_pressure(velocity, velocity, dt, tol) if self.with_pressure else None
        state = FlowState(0, t0, omega0, psi, velocity, pressure, h0)
        yield state

        previous: FlowState | None = None
        for n in range(cfg.nt):
            h_next, omega_next = rule.advance(n, state, dt, cfg.step_options(previous))
            psi_next = stream_function(omega_next, tol)
            velocity_next = velocity_from_stream(psi_next)
            rate = (velocity_next - state.velocity) * (1.0 / dt)
            pressure = (
                recover_pressure(velocity_next, state.velocity, dt, tol) if self.with_pressure else None
            )
            following = FlowState(
                n + 1,
                t0 + (n + 1) * dt,
                omega_next,
                psi_next,
                velocity_next,
                pressure,
                h_next,
                dissipation=dirichlet_energy(0.5 * (state.omega + omega_next)),
                dudt_l2=norm_spatial(rate, NormKind.L2),
            )
            yield following
            previous, state = state, following


@dataclass(frozen=True, eq=False)
class Snapshot:
    step: int
    time: float
    omega: ScalarField
    psi: ScalarField
    velocity: VectorField
    pressure: ScalarField | None


DIAGNOSTICS = (
    "mean", "l2", "grad_l2", "l4", "centered_l2", "u_h1", "u_h2", "p_h1", "p_grad_l2", "h",
)


@dataclass(frozen=True, eq=False)
class Trajectory:
    grid: Grid
    h: BoundaryVorticity
    diagnostics: dict[str, np.ndarray]
    # one value per step interval
    dissipation: np.ndarray
    dudt_l2: np.ndarray
    snapshots: tuple[Snapshot, ...] = ()

    @property
    def times(self) -> np.ndarray:
        return self.h.times

    @property
    def dt(self) -> float:
        return self.h.dt

    @property
    def nt(self) -> int:
        return self.h.nt

    @property
    def horizon(self) -> float:
        return self.nt * self.dt

    @property
    def mean_omega(self) -> np.ndarray:
        return self.diagnostics["mean"]

    @property
    def omega0_l2(self) -> float:
        return float(self.diagnostics["l2"][0])


class TrajectoryRecorder:
    storage: StoragePolicy
    last_step: int

    def __init__(self, storage: StoragePolicy, last_step: int) -> None:
        self.storage = storage
        self.last_step = last_step
        self.rows: dict[str, list[float]] = {name: [] for name in DIAGNOSTICS}
        self.dissipation: list[float] = []
        self.dudt_l2: list[float] = []
        self.snapshots: list[Snapshot] = []
        self.t0 = 0.0
        self.grid: Grid | None = None

    def record(self, state: FlowState) -> None:
        omega, velocity, pressure = state.omega, state.velocity, state.pressure
        values = {
            "mean": mean(omega),
            "l2": norm_spatial(omega, NormKind.L2),
            "grad_l2": norm_spatial(omega, NormKind.GRAD_L2),
            "l4": norm_spatial(omega, NormKind.L4),
            "centered_l2": centered_norm(omega),
            "u_h1": norm_spatial(velocity, NormKind.H1),
            "u_h2": norm_spatial(velocity, NormKind.H2),
            "p_h1": norm_spatial(pressure, NormKind.H1) if pressure is not None else 0.0,
            "p_grad_l2": norm_spatial(pressure, NormKind.GRAD_L2) if pressure is not None else 0.0,
            "h": state.h,
        }
        for name, value in values.items():
            self.rows[name].append(float(value))

        if state.step == 0:
            self.t0 = state.time
            self.grid = omega.grid
        else:
            self.dissipation.append(state.dissipation)
            self.dudt_l2.append(state.dudt_l2)

        if state.step == 0 or self.storage.keeps(state.step, self.last_step):
            self.snapshots.append(
                Snapshot(state.step, state.time, omega, state.psi, velocity, pressure)
            )

    def finish(self, dt: float) -> Trajectory:
        diagnostics = {}
        for name, values in self.rows.items():
            array = np.array(values)
            array.setflags(write=False)
            diagnostics[name] = array
        return Trajectory(
            self.grid,
            BoundaryVorticity(self.t0, dt, diagnostics["h"]),
            diagnostics,
            np.array(self.dissipation),
            np.array(self.dudt_l2),
            tuple(self.snapshots),
        )


def integrate(omega0: ScalarField, rule: BoundaryRule, cfg: SolverConfig) -> Trajectory:
    if omega0.grid != cfg.grid:
        raise FieldError("Initial vorticity does not live on the solver grid", kind="shape-mismatch")
    recorder = TrajectoryRecorder(cfg.storage, cfg.nt)
    for state in VorticityIntegrator(cfg).evolve(omega0, rule):
        recorder.record(state)
    return recorder.finish(cfg.dt)


def forward_solve(omega0: ScalarField, h: BoundaryVorticity, cfg: SolverConfig) -> Trajectory:
    if h.nt != cfg.nt or not np.isclose(h.dt, cfg.dt, rtol=1e-12, atol=0.0):
        raise PreconditionError(
            f"Boundary series has {h.nt} steps of {h.dt}, solver expects {cfg.nt} of {cfg.dt}",
            kind="inconsistent",
        )
    report = check_compatibility(omega0, float(h.values[0]))
    if not report.boundary_ok:
        raise CompatibilityError(
            f"Boundary trace of the initial vorticity differs from h(0) by {report.max_boundary_mismatch:.3e}",
            kind="incompatible-initial-data", mismatch=report.max_boundary_mismatch,
        )
    logger.info("Forward solve: %d steps on %dx%d grid", cfg.nt, cfg.grid.nx, cfg.grid.ny)
    return integrate(omega0, PrescribedBoundary(h), cfg)
