from dataclasses import dataclass
from enum import Enum
import logging
from typing import Any, NamedTuple

import numpy as np
from scipy import linalg

from vorticity_lab.errors import CompatibilityError, PreconditionError, SolverError, StepSizeError
from vorticity_lab.forward import (
    CFL_SAFETY, AdvectionScheme, BoundaryVorticity, FlowState, PrescribedBoundary, SolverConfig,
    Trajectory, VorticityIntegrator, boundary_trace, check_compatibility, extrapolate, forward_solve,
    imex_step, integrate, midpoint_step, solve_for_boundary_value, step_operator, stream_function,
    velocity_from_stream,
)
from vorticity_lab.grid import ScalarField, VectorField
from vorticity_lab.norms import mean
from vorticity_lab.operators import advect
from vorticity_lab.poisson import DEFAULT_TOL

logger = logging.getLogger(__name__)

POWER_STEPS = 20
MAX_DAMPING = 1e16


class InverseMethod(Enum):
    PROJECTION = "projection"
    LANDWEBER = "landweber"
    LM = "lm"


class JacobianMode(Enum):
    SENSITIVITY = "sensitivity"
    FINITE_DIFFERENCE = "finite-difference"


@dataclass(frozen=True)
class InverseConfig:
    method: InverseMethod = InverseMethod.PROJECTION
    L: float | None = None
    max_iters: int = 200
    step_size: float | None = None
    damping: float = 1e-6
    growth: float = 10.0
    stop_tol: float = 1e-8
    jacobian_mode: JacobianMode = JacobianMode.SENSITIVITY
    fd_eps: float = 1e-4
    jacobian_refresh: int = 10

    def __post_init__(self) -> None:
        checks = (
            ("step_size", self.step_size is None or self.step_size > 0),
            ("damping", self.damping > 0),
            ("growth", self.growth > 1),
            ("stop_tol", self.stop_tol > 0),
            ("fd_eps", self.fd_eps > 0),
            ("max_iters", self.max_iters >= 0),
            ("jacobian_refresh", self.jacobian_refresh >= 1),
        )
        for name, ok in checks:
            if not ok:
                raise PreconditionError(f"Inverse setting '{name}' is out of range: {getattr(self, name)}")

    def target(self, omega0: ScalarField) -> float:
        return mean(omega0) if self.L is None else self.L


@dataclass(frozen=True, eq=False)
class InverseResult:
    method: InverseMethod
    h: BoundaryVorticity
    trajectory: Trajectory
    residual_history: np.ndarray
    converged: bool
    iterations_used: int
    step_size: float | None = None
    jacobian_norm: float | None = None

    @property
    def final_residual(self) -> float:
        return float(self.residual_history[-1])


def check_target(omega0: ScalarField, L: float) -> None:
    h0 = boundary_trace(omega0)
    report = check_compatibility(omega0, h0, L)
    if not report.boundary_ok:
        raise CompatibilityError(
            f"Initial vorticity is not uniform on the boundary (spread {report.max_boundary_mismatch:.3e})",
            kind="incompatible-initial-data", mismatch=report.max_boundary_mismatch,
        )
    if not report.mean_ok:
        raise CompatibilityError(
            f"Mean of the initial vorticity differs from L={L} by {report.mean_defect:.3e}",
            kind="incompatible-L", L=L, defect=report.mean_defect,
        )


def project_h_step(
    omega_n: ScalarField,
    u_n: VectorField,
    L: float,
    dt: float,
    *,
    u_prev: VectorField | None = None,
    omega_prev: ScalarField | None = None,
    scheme: AdvectionScheme = AdvectionScheme.MIDPOINT,
    advection_on: bool = True,
    cfl_safety: float = CFL_SAFETY,
    tol: float = DEFAULT_TOL,
) -> tuple[float, ScalarField]:
    operator = step_operator(
        omega_n, u_n, dt, u_prev=u_prev, omega_prev=omega_prev, scheme=scheme,
        advection_on=advection_on, cfl_safety=cfl_safety, tol=tol,
    )
    solve = solve_for_boundary_value(operator, L)
    return solve.h_next, solve.omega_next


@dataclass(frozen=True)
class InvariantBoundary:
    target: float

    def start(self, omega0: ScalarField) -> tuple[float, float]:
        return 0.0, boundary_trace(omega0)

    def advance(
        self, n: int, state: FlowState, dt: float, options: dict[str, Any]
    ) -> tuple[float, ScalarField]:
        return project_h_step(state.omega, state.velocity, self.target, dt, **options)


def recover_projection(omega0: ScalarField, L: float, cfg: SolverConfig) -> InverseResult:
    check_target(omega0, L)
    logger.info("Projection recovery: L=%.6g over %d steps", L, cfg.nt)
    trajectory = integrate(omega0, InvariantBoundary(L), cfg)
    defects = np.abs(trajectory.mean_omega - L)
    bound = 1e-10 * (1.0 + abs(L))
    converged = bool(np.all(defects <= bound))
    if not converged:
        logger.warning("Invariant defect %.3e exceeds %.3e", float(np.max(defects)), bound)
    return InverseResult(
        InverseMethod.PROJECTION, trajectory.h, trajectory, defects, converged, cfg.nt
    )


class BaseState(NamedTuple):
    omega: ScalarField
    velocity: VectorField


def _base_run(h: BoundaryVorticity, omega0: ScalarField, cfg: SolverConfig) -> list[BaseState]:
    report = check_compatibility(omega0, float(h.values[0]))
    if not report.boundary_ok:
        raise CompatibilityError(
            f"Boundary trace of the initial vorticity differs from h(0) by {report.max_boundary_mismatch:.3e}",
            kind="incompatible-initial-data", mismatch=report.max_boundary_mismatch,
        )
    integrator = VorticityIntegrator(cfg, with_pressure=False)
    return [BaseState(state.omega, state.velocity) for state in integrator.evolve(omega0, PrescribedBoundary(h))]


def forward_map(h: BoundaryVorticity, omega0: ScalarField, cfg: SolverConfig) -> np.ndarray:
    return np.array([mean(state.omega) for state in _base_run(h, omega0, cfg)[1:]])


def _tangent_column(base: list[BaseState], j: int, cfg: SolverConfig) -> np.ndarray:
    """Response of the mean trajectory to a unit change of h(t_j), j >= 1.

    Linearizes every step around the base run, including the change of the
    advecting velocity induced by the perturbation.
    """
    dt, tol = cfg.dt, cfg.poisson_tol
    column = np.zeros(cfg.nt)
    zero = ScalarField.zeros(base[0].omega.grid)
    still = velocity_from_stream(stream_function(zero, tol))

    delta, delta_u = zero, still
    previous_u, previous_term = still, zero
    for n in range(j - 1, cfg.nt):
        boundary = 1.0 if n == j - 1 else 0.0
        omega_n, u_n = base[n]
        if not cfg.advection_on:
            delta = imex_step(delta, zero, boundary, dt, tol)
        else:
            match cfg.scheme:
                case AdvectionScheme.MIDPOINT:
                    transport = extrapolate(u_n, base[n - 1].velocity if n > 0 else None)
                    delta_transport = extrapolate(delta_u, previous_u if n > 0 else None)
                    midpoint = 0.5 * (omega_n + base[n + 1].omega)
                    delta = midpoint_step(
                        delta, transport, boundary, dt, forcing=advect(delta_transport, midpoint), tol=tol
                    )
                case AdvectionScheme.AB2:
                    term = advect(u_n, delta) + advect(delta_u, omega_n)
                    explicit = extrapolate(term, previous_term if n > 0 else None)
                    delta = imex_step(delta, explicit, boundary, dt, tol)
                    previous_term = term
        column[n] = mean(delta)
        previous_u = delta_u
        delta_u = velocity_from_stream(stream_function(delta, tol))
    return column


def sensitivity_jacobian(
    h: BoundaryVorticity,
    omega0: ScalarField,
    cfg: SolverConfig,
    mode: JacobianMode = JacobianMode.SENSITIVITY,
    fd_eps: float = 1e-4,
) -> np.ndarray:
    nt = cfg.nt
    # jacobian[k, j] = d mean(omega_{k+1}) / d h_{j+1}
    jacobian = np.zeros((nt, nt))
    match mode:
        case JacobianMode.SENSITIVITY:
            base = _base_run(h, omega0, cfg)
            for j in range(1, nt + 1):
                jacobian[:, j - 1] = _tangent_column(base, j, cfg)
        case JacobianMode.FINITE_DIFFERENCE:
            for j in range(1, nt + 1):
                bump = np.zeros(nt + 1)
                bump[j] = fd_eps
                plus = forward_map(BoundaryVorticity(h.t0, h.dt, h.values + bump), omega0, cfg)
                minus = forward_map(BoundaryVorticity(h.t0, h.dt, h.values - bump), omega0, cfg)
                jacobian[:, j - 1] = (plus - minus) / (2.0 * fd_eps)
    return jacobian


def operator_norm_squared(jacobian: np.ndarray, steps: int = POWER_STEPS) -> float:
    v = np.ones(jacobian.shape[1]) / np.sqrt(jacobian.shape[1])
    estimate = 0.0
    for _ in range(steps):
        w = jacobian.T @ (jacobian @ v)
        estimate = float(np.linalg.norm(w))
        if estimate == 0.0:
            return 0.0
        v = w / estimate
    return estimate


class _Objective:
    def __init__(self, omega0: ScalarField, L: float, cfg: SolverConfig, icfg: InverseConfig) -> None:
        self.omega0 = omega0
        self.L = L
        self.cfg = cfg
        self.icfg = icfg
        self.h0 = boundary_trace(omega0)

    def series(self, params: np.ndarray) -> BoundaryVorticity:
        return BoundaryVorticity(0.0, self.cfg.dt, np.concatenate([[self.h0], params]))

    def residual(self, params: np.ndarray) -> tuple[np.ndarray, float]:
        r = forward_map(self.series(params), self.omega0, self.cfg) - self.L
        return r, float(np.sqrt(self.cfg.dt) * np.linalg.norm(r))

    def jacobian(self, params: np.ndarray) -> np.ndarray:
        return sensitivity_jacobian(
            self.series(params), self.omega0, self.cfg, self.icfg.jacobian_mode, self.icfg.fd_eps
        )


def _finish(
    method: InverseMethod,
    objective: _Objective,
    params: np.ndarray,
    history: list[float],
    converged: bool,
    iterations: int,
    **extra: float | None,
) -> InverseResult:
    if not converged:
        logger.warning(
            "%s stopped after %d iterations at residual %.3e (stop_tol %.1e)",
            method.value, iterations, min(history), objective.icfg.stop_tol,
        )
    h = objective.series(params)
    trajectory = forward_solve(objective.omega0, h, objective.cfg)
    return InverseResult(method, h, trajectory, np.array(history), converged, iterations, **extra)


def landweber(omega0: ScalarField, cfg: SolverConfig, icfg: InverseConfig) -> InverseResult:
    L = icfg.target(omega0)
    check_target(omega0, L)
    objective = _Objective(omega0, L, cfg, icfg)
    params = np.full(cfg.nt, mean(omega0))
    r, norm = objective.residual(params)
    history = [norm]
    best, best_norm = params, norm

    jacobian = objective.jacobian(params)
    bound = operator_norm_squared(jacobian)
    mu = icfg.step_size if icfg.step_size is not None else (1.0 / bound if bound > 0 else 1.0)
    if bound > 0 and mu >= 2.0 / bound:
        logger.warning("Landweber step %.3e is above the admissible bound %.3e", mu, 2.0 / bound)
    logger.info("Landweber: %d unknowns, step %.3e, |J|^2 %.3e", cfg.nt, mu, bound)

    iterations = 0
    increases = 0
    while norm > icfg.stop_tol and iterations < icfg.max_iters:
        iterations += 1
        if iterations % icfg.jacobian_refresh == 0:
            jacobian = objective.jacobian(params)
        params = params - mu * (jacobian.T @ r)
        r, new_norm = objective.residual(params)
        increases = increases + 1 if new_norm > norm else 0
        norm = new_norm
        history.append(norm)
        logger.debug("Landweber iteration %d: residual %.6e", iterations, norm)
        if increases >= 2:
            raise StepSizeError(
                f"Landweber residual increased twice in a row with step {mu:.3e}",
                kind="step-size-too-large", step_size=mu, bound=2.0 / bound if bound > 0 else None,
                history=history,
            )
        if norm < best_norm:
            best, best_norm = params, norm

    return _finish(
        InverseMethod.LANDWEBER, objective, best, history, best_norm <= icfg.stop_tol, iterations,
        step_size=mu, jacobian_norm=float(np.sqrt(bound)),
    )


def levenberg_marquardt(omega0: ScalarField, cfg: SolverConfig, icfg: InverseConfig) -> InverseResult:
    L = icfg.target(omega0)
    check_target(omega0, L)
    objective = _Objective(omega0, L, cfg, icfg)
    params = np.full(cfg.nt, mean(omega0))
    r, norm = objective.residual(params)
    history = [norm]
    damping = icfg.damping
    logger.info("Levenberg-Marquardt: %d unknowns, damping %.1e", cfg.nt, damping)

    iterations = 0
    stalled = False
    while norm > icfg.stop_tol and iterations < icfg.max_iters and not stalled:
        iterations += 1
        jacobian = objective.jacobian(params)
        normal = jacobian.T @ jacobian
        gradient = jacobian.T @ r
        while True:
            try:
                step = linalg.solve(normal + damping * np.eye(cfg.nt), -gradient, assume_a="pos")
            except linalg.LinAlgError as error:
                raise SolverError(
                    f"Damped normal equations could not be solved: {error}",
                    kind="normal-equation-failure", damping=damping, iteration=iterations,
                ) from error
            trial = params + step
            trial_r, trial_norm = objective.residual(trial)
            if trial_norm < norm:
                params, r, norm = trial, trial_r, trial_norm
                damping /= icfg.growth
                history.append(norm)
                break
            damping *= icfg.growth
            if damping > MAX_DAMPING:
                stalled = True
                break
        logger.debug("LM iteration %d: residual %.6e, damping %.1e", iterations, norm, damping)

    return _finish(
        InverseMethod.LM, objective, params, history, norm <= icfg.stop_tol, iterations
    )


def recover(omega0: ScalarField, cfg: SolverConfig, icfg: InverseConfig) -> InverseResult:
    match icfg.method:
        case InverseMethod.PROJECTION:
            return recover_projection(omega0, icfg.target(omega0), cfg)
        case InverseMethod.LANDWEBER:
            return landweber(omega0, cfg, icfg)
        case InverseMethod.LM:
            return levenberg_marquardt(omega0, cfg, icfg)
