from dataclasses import asdict, dataclass, field
from functools import cache
import logging
from typing import Any, Iterable, Iterator, Sequence

import numpy as np
from scipy import stats

from vorticity_lab.errors import InsufficientSamplesError, SolverError
from vorticity_lab.fixtures import eigenmode, random_stream
from vorticity_lab.forward import (
    FlowState, SolverConfig, Trajectory, VorticityIntegrator, stream_function,
    velocity_from_stream,
)
from vorticity_lab.grid import Grid, NormKind, ScalarField
from vorticity_lab.inverse import InvariantBoundary, check_target
from vorticity_lab.norms import inner, mean, norm_spatial, time_l2, time_linf
from vorticity_lab.poisson import poisson_neumann

logger = logging.getLogger(__name__)

SUP_SLACK = 1e-8
GRADIENT_SLACK = 1.05
DECAY_TOLERANCE = 0.05
MIN_FIT_SAMPLES = 10
DEFAULT_EPSILONS = (1e-1, 1e-2, 1e-3)
DEFAULT_DIRECTIONS = ((2, 2), (1, 2), (2, 1))


@dataclass(frozen=True)
class EnergyReport:
    residuals: np.ndarray
    max_residual: float
    mean_residual: float

    def rows(self, times: np.ndarray) -> Iterator[tuple[int, float, float]]:
        for k, residual in enumerate(self.residuals):
            yield k, float(times[k + 1]), float(residual)


def energy_identity_check(traj: Trajectory) -> EnergyReport:
    """Per-step balance of the squared L2 norm against the dissipation.

    r_k = (|w_{k+1}|^2 - |w_k|^2) / (2 dt) + E(midpoint) - hbar (I_{k+1} - I_k) / dt

    with E the Dirichlet energy and I the integral of the vorticity. The last
    term is the boundary work of h and vanishes when the mean is held fixed.
    """
    dt = traj.dt
    squares = traj.diagnostics["l2"] ** 2
    integrals = traj.mean_omega * traj.grid.area
    h = traj.h.values
    h_mid = 0.5 * (h[1:] + h[:-1])
    residuals = np.diff(squares) / (2.0 * dt) + traj.dissipation - h_mid * np.diff(integrals) / dt
    if residuals.size == 0:
        return EnergyReport(residuals, 0.0, 0.0)
    magnitudes = np.abs(residuals)
    return EnergyReport(residuals, float(np.max(magnitudes)), float(np.mean(magnitudes)))


@dataclass(frozen=True)
class LemmaRow:
    name: str
    description: str
    lhs: float
    rhs: float
    ratio: float
    satisfied: bool
    hard: bool

    def to_json(self) -> dict[str, Any]:
        return {
            "name": self.name, "description": self.description, "lhs": self.lhs, "rhs": self.rhs,
            "ratio": self.ratio, "pass": self.satisfied, "hard": self.hard,
        }


@dataclass(frozen=True)
class LemmaReport:
    rows: tuple[LemmaRow, ...]

    @property
    def passed(self) -> bool:
        return all(row.satisfied for row in self.rows)

    def row(self, name: str) -> LemmaRow:
        return next(row for row in self.rows if row.name == name)

    def to_json(self) -> list[dict[str, Any]]:
        return [row.to_json() for row in self.rows]


def _ratio(lhs: float, rhs: float) -> float:
    if lhs == 0.0:
        return 0.0
    return lhs / rhs if rhs > 0.0 else float("inf")


def _hard_row(name: str, description: str, lhs: float, rhs: float, slack: float, floor: float) -> LemmaRow:
    return LemmaRow(name, description, lhs, rhs, _ratio(lhs, rhs), lhs <= rhs * slack + floor, True)


def _constant_row(name: str, description: str, lhs: float, rhs: float) -> LemmaRow:
    ratio = _ratio(lhs, rhs)
    return LemmaRow(name, description, lhs, rhs, ratio, bool(np.isfinite(ratio)), False)


def lemma_bounds_check(traj: Trajectory) -> LemmaReport:
    d = traj.diagnostics
    dt = traj.dt
    omega0 = traj.omega0_l2
    scale = max(np.sqrt(traj.horizon), 1.0) * omega0
    # rounding floor so that zero and steady data compare equal
    floor = 1e-14 * (1.0 + omega0)

    rows = (
        _hard_row(
            "sup-l2", "sup_t |w|_L2 <= |w0|_L2",
            time_linf(d["l2"]), omega0, 1.0 + SUP_SLACK, floor,
        ),
        _hard_row(
            "grad-l2l2", "|grad w|_L2(0,T;L2) <= |w0|_L2 / sqrt(2)",
            float(np.sqrt(dt * np.sum(traj.dissipation))), omega0 / np.sqrt(2.0), GRADIENT_SLACK, floor,
        ),
        _constant_row("u-linf-h1", "|u|_Linf(0,T;H1) <~ |w0|_L2", time_linf(d["u_h1"]), scale),
        _constant_row("u-l2-h2", "|u|_L2(0,T;H2) <~ |w0|_L2", time_l2(d["u_h2"], dt), scale),
        _constant_row("dudt-l2l2", "|du/dt|_L2(0,T;L2) <~ |w0|_L2", float(np.sqrt(dt * np.sum(traj.dudt_l2**2))), scale),
        _constant_row("p-l2-h1", "|p|_L2(0,T;H1) <~ |w0|_L2", time_l2(d["p_h1"], dt), scale),
        _constant_row("h-l2", "|h|_L2(0,T) <~ |w0|_L2", time_l2(d["h"], dt), scale),
        _constant_row("w-l2l4", "|w|_L2(0,T;L4) <~ |w0|_L2", time_l2(d["l4"], dt), scale),
    )
    return LemmaReport(rows)


@cache
def poincare_estimate(grid: Grid, tol: float = 1e-8, max_iters: int = 500) -> float:
    x, y = grid.mesh()
    v = ScalarField(grid, x / grid.lx + 0.3 * y / grid.ly)
    v = v - mean(v)
    estimate = 0.0
    for iteration in range(1, max_iters + 1):
        w = poisson_neumann(v).field
        previous = estimate
        estimate = inner(v, v) / inner(v, w)
        v = w * (1.0 / np.sqrt(inner(w, w)))
        if iteration > 1 and abs(estimate - previous) <= tol * estimate:
            logger.debug("Poincare estimate %.10g after %d iterations", estimate, iteration)
            return estimate
    raise SolverError(
        f"Inverse power iteration did not settle within {max_iters} iterations",
        kind="eigensolver-nonconvergence", estimate=estimate,
    )


@dataclass(frozen=True)
class DecayReport:
    rate: float
    reference: float
    r_squared: float
    samples: int
    degenerate: bool
    below_reference: bool

    def to_json(self) -> dict[str, Any]:
        return asdict(self)


def decay_fit(traj: Trajectory, reference: float | None = None) -> DecayReport:
    if reference is None:
        reference = poincare_estimate(traj.grid)
    times = traj.times
    window = times >= times[0] + 0.5 * traj.horizon
    samples = int(np.count_nonzero(window))
    if samples < MIN_FIT_SAMPLES:
        raise InsufficientSamplesError(
            f"Decay fit needs {MIN_FIT_SAMPLES} samples in [T/2, T], trajectory has {samples}",
            samples=samples,
        )
    centered = traj.diagnostics["centered_l2"][window]
    if np.any(centered <= 1e-13 * (1.0 + traj.omega0_l2)):
        logger.warning("Centered vorticity vanishes; decay fit is degenerate")
        return DecayReport(float("nan"), reference, float("nan"), samples, True, False)

    fit = stats.linregress(times[window], np.log(centered))
    rate = -float(fit.slope)
    below = rate < (1.0 - DECAY_TOLERANCE) * reference
    if below:
        logger.warning("Fitted decay rate %.4g is below the Poincare rate %.4g", rate, reference)
    return DecayReport(rate, reference, float(fit.rvalue**2), samples, False, below)


def elliptic_ratios(omega: ScalarField) -> tuple[float, float] | None:
    l2 = norm_spatial(omega, NormKind.L2)
    if l2 == 0.0:
        return None
    velocity = velocity_from_stream(stream_function(omega))
    return (
        norm_spatial(velocity, NormKind.H1) / l2,
        norm_spatial(velocity, NormKind.H2) / norm_spatial(omega, NormKind.H1),
    )


@dataclass(frozen=True)
class EllipticEstimate:
    h1_ratios: np.ndarray
    h2_ratios: np.ndarray
    skipped: int

    @property
    def max_h1(self) -> float:
        return float(np.max(self.h1_ratios)) if self.h1_ratios.size else float("nan")

    @property
    def max_h2(self) -> float:
        return float(np.max(self.h2_ratios)) if self.h2_ratios.size else float("nan")

    def to_json(self) -> dict[str, Any]:
        return {
            "samples": int(self.h1_ratios.size),
            "skipped": self.skipped,
            "h1_over_l2": {"max": self.max_h1, "mean": float(np.mean(self.h1_ratios))},
            "h2_over_h1": {"max": self.max_h2, "mean": float(np.mean(self.h2_ratios))},
        }


def elliptic_constant_estimate(grid: Grid, n_samples: int, seed: int, modes: int = 4) -> EllipticEstimate:
    if n_samples < 1:
        raise InsufficientSamplesError(f"Estimate needs at least one sample, got {n_samples}", samples=n_samples)
    h1, h2 = [], []
    skipped = 0
    for child in np.random.SeedSequence(seed).spawn(n_samples):
        ratios = elliptic_ratios(random_stream(grid, int(child.generate_state(1)[0]), modes))
        if ratios is None:
            skipped += 1
            continue
        h1.append(ratios[0])
        h2.append(ratios[1])
    return EllipticEstimate(np.array(h1), np.array(h2), skipped)


@dataclass(frozen=True)
class StabilityReport:
    label: str
    epsilon: float | None
    T: float
    nx: int
    ny: int
    u_linf_h1: float
    p_l2_h1: float
    h_l2: float
    omega_linf_l2: float
    grad_omega_l2l2: float
    denominator: float
    ratio: float
    M: float
    degenerate: bool = field(default=False)

    def to_json(self) -> dict[str, Any]:
        return asdict(self)


def _lockstep(
    omega01: ScalarField, omega02: ScalarField, cfg: SolverConfig
) -> Iterator[tuple[FlowState, FlowState]]:
    integrator = VorticityIntegrator(cfg)
    yield from zip(
        integrator.evolve(omega01, InvariantBoundary(mean(omega01))),
        integrator.evolve(omega02, InvariantBoundary(mean(omega02))),
    )


def stability_pair(
    omega01: ScalarField, omega02: ScalarField, cfg: SolverConfig, *, label: str = "pair",
    epsilon: float | None = None,
) -> StabilityReport:
    for omega0 in (omega01, omega02):
        check_target(omega0, mean(omega0))

    u_h1, p_h1, h_diff, omega_l2, grad_l2 = [], [], [], [], []
    for first, second in _lockstep(omega01, omega02, cfg):
        u_h1.append(norm_spatial(first.velocity - second.velocity, NormKind.H1))
        p_h1.append(norm_spatial(first.pressure - second.pressure, NormKind.H1))
        h_diff.append(first.h - second.h)
        difference = first.omega - second.omega
        omega_l2.append(norm_spatial(difference, NormKind.L2))
        grad_l2.append(norm_spatial(difference, NormKind.GRAD_L2))

    dt = cfg.dt
    u_term, p_term, h_term = time_linf(u_h1), time_l2(p_h1, dt), time_l2(h_diff, dt)
    denominator = norm_spatial(omega01 - omega02, NormKind.L2)
    degenerate = denominator == 0.0
    ratio = float("nan") if degenerate else (u_term + p_term + h_term) / denominator
    report = StabilityReport(
        label, epsilon, cfg.nt * dt, cfg.grid.nx, cfg.grid.ny,
        u_term, p_term, h_term, time_linf(omega_l2), time_l2(grad_l2, dt),
        denominator, ratio,
        max(norm_spatial(omega01, NormKind.L2), norm_spatial(omega02, NormKind.L2)),
        degenerate,
    )
    logger.info("Stability pair %s: ratio %.6g", label, ratio)
    return report


@dataclass(frozen=True)
class LadderReport:
    reports: tuple[StabilityReport, ...]

    @property
    def ratios(self) -> np.ndarray:
        return np.array([report.ratio for report in self.reports if not report.degenerate])

    @property
    def spread(self) -> float:
        ratios = self.ratios
        return float(np.max(ratios) / np.min(ratios)) if ratios.size else float("nan")

    @property
    def growth(self) -> float:
        worst = 0.0
        for label in dict.fromkeys(report.label for report in self.reports):
            ladder = sorted(
                (report for report in self.reports if report.label == label and not report.degenerate),
                key=lambda report: report.epsilon,
            )
            if len(ladder) >= 2:
                worst = max(worst, ladder[0].ratio / ladder[-1].ratio)
        return worst

    def to_json(self) -> dict[str, Any]:
        return {
            "spread": self.spread,
            "growth": self.growth,
            "pairs": [report.to_json() for report in self.reports],
        }


def stability_ladder(
    base: ScalarField,
    cfg: SolverConfig,
    epsilons: Sequence[float] = DEFAULT_EPSILONS,
    directions: Iterable[tuple[int, int]] = DEFAULT_DIRECTIONS,
) -> LadderReport:
    reports = []
    for a, b in directions:
        direction = eigenmode(base.grid, a, b)
        for epsilon in epsilons:
            reports.append(
                stability_pair(base, base + epsilon * direction, cfg, label=f"{a}x{b}", epsilon=epsilon)
            )
    return LadderReport(tuple(reports))
