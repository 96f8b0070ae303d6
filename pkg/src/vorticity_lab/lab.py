import logging
from pathlib import Path
from typing import Any

import numpy as np

from vorticity_lab.config import Command, RunConfig
from vorticity_lab.convergence import convergence_study
from vorticity_lab.errors import LabError
from vorticity_lab.fixtures import FixtureKind
from vorticity_lab.forward import (
    BoundaryVorticity, SolverConfig, Trajectory, boundary_trace, check_compatibility, forward_solve,
)
from vorticity_lab.grid import ScalarField
from vorticity_lab.harness import (
    decay_fit, elliptic_constant_estimate, energy_identity_check, lemma_bounds_check, poincare_estimate,
    stability_ladder,
)
from vorticity_lab.inverse import InverseResult, recover
from vorticity_lab.output import read_h_series, write_csv, write_field, write_json

logger = logging.getLogger(__name__)

TRAJECTORY_COLUMNS = (
    "mean", "h", "l2", "grad_l2", "l4", "centered_l2", "u_h1", "u_h2", "p_h1", "p_grad_l2",
)


class Lab:
    config: RunConfig

    def __init__(self, config: RunConfig) -> None:
        self.config = config
        self.out = config.out

    def run(self) -> Path:
        config = self.config
        self.out.mkdir(parents=True, exist_ok=True)
        (self.out / "config.echo").write_text(config.echo())
        logger.info("Running %s, config %s", config.command.value, config.hash)

        match config.command:
            case Command.FORWARD:
                self.run_forward()
            case Command.INVERSE:
                self.run_inverse()
            case Command.VERIFY:
                self.run_verify()
            case Command.STABILITY:
                self.run_stability()
            case Command.CONVERGENCE:
                self.run_convergence()
        return self.out

    def initial_field(self) -> ScalarField:
        config = self.config
        return config.fixture.build(config.make_grid(), config.seed)

    def solver_config(self, omega0: ScalarField) -> SolverConfig:
        # a field file brings its own grid
        grid = omega0.grid if self.config.fixture.kind is FixtureKind.FILE else None
        return self.config.solver_config(grid)

    def boundary_series(self, omega0: ScalarField, cfg: SolverConfig) -> BoundaryVorticity:
        match self.config.h:
            case None:
                return BoundaryVorticity.constant(boundary_trace(omega0), cfg.nt, cfg.dt)
            case Path() as path:
                return read_h_series(path)
            case value:
                return BoundaryVorticity.constant(value, cfg.nt, cfg.dt)

    def run_forward(self) -> None:
        omega0 = self.initial_field()
        cfg = self.solver_config(omega0)
        h = self.boundary_series(omega0, cfg)
        trajectory = forward_solve(omega0, h, cfg)
        self.write_trajectory(trajectory)
        report = check_compatibility(omega0, float(h.values[0]))
        self.write_report({
            "compatibility": report._asdict(),
            "h_derivative_l2": h.derivative_l2(),
            "final": self.final_row(trajectory),
        })

    def run_inverse(self) -> None:
        omega0 = self.initial_field()
        cfg = self.solver_config(omega0)
        result = recover(omega0, cfg, self.config.inverse_config())
        self.write_trajectory(result.trajectory)
        self.write_recovery(result)
        self.write_report(self.recovery_summary(result))

    def run_verify(self) -> None:
        omega0 = self.initial_field()
        cfg = self.solver_config(omega0)
        result = recover(omega0, cfg, self.config.inverse_config())
        trajectory = result.trajectory
        self.write_trajectory(trajectory)
        self.write_recovery(result)

        energy = energy_identity_check(trajectory)
        write_csv(
            self.out / "energy.csv", ("step", "t", "residual"), energy.rows(trajectory.times), self.config.hash
        )
        lemmas = lemma_bounds_check(trajectory)
        try:
            decay: Any = decay_fit(trajectory).to_json()
        except LabError as error:
            decay = error.to_json()
        estimate = elliptic_constant_estimate(cfg.grid, self.config.samples, self.config.seed)
        self.write_report({
            **self.recovery_summary(result),
            "energy": {"max_residual": energy.max_residual, "mean_residual": energy.mean_residual},
            "lemma": lemmas.to_json(),
            "lemma_pass": lemmas.passed,
            "decay": decay,
            "poincare": poincare_estimate(cfg.grid),
            "elliptic": estimate.to_json(),
        })

    def run_stability(self) -> None:
        config = self.config
        omega0 = self.initial_field()
        cfg = self.solver_config(omega0)
        ladder = stability_ladder(omega0, cfg, config.epsilons, config.directions)
        columns = (
            "label", "epsilon", "ratio", "u_linf_h1", "p_l2_h1", "h_l2", "omega_linf_l2",
            "grad_omega_l2l2", "denominator", "M",
        )
        write_csv(
            self.out / "stability.csv",
            columns,
            ([getattr(report, column) for column in columns] for report in ladder.reports),
            config.hash,
        )
        self.write_report(ladder.to_json())

    def run_convergence(self) -> None:
        config = self.config
        table = convergence_study(
            config.study.value, config.grids, lx=config.lx, ly=config.ly, T=config.tmax, dt=config.dt,
            advection=config.advection,
        )
        write_csv(self.out / "convergence.csv", ("n", "dx", "error", "order"), table.rows(), config.hash)
        self.write_report({"study": table.study, "orders": table.orders, "errors": table.errors})

    def write_trajectory(self, trajectory: Trajectory) -> None:
        d = trajectory.diagnostics
        rows = (
            [t, *(d[name][k] for name in TRAJECTORY_COLUMNS)]
            for k, t in enumerate(trajectory.times)
        )
        write_csv(
            self.out / "trajectory.csv", ("t", "mean_omega", *TRAJECTORY_COLUMNS[1:]), rows, self.config.hash
        )
        fields = self.out / "fields"
        for snapshot in trajectory.snapshots:
            stem = f"{snapshot.step:06d}"
            write_field(fields / f"omega_{stem}.csv", snapshot.omega, self.config.hash)
            write_field(fields / f"psi_{stem}.csv", snapshot.psi, self.config.hash)
            if snapshot.pressure is not None:
                write_field(fields / f"p_{stem}.csv", snapshot.pressure, self.config.hash)

    def write_recovery(self, result: InverseResult) -> None:
        h = result.h
        write_csv(self.out / "h.csv", ("t", "h"), zip(h.times, h.values), self.config.hash)
        write_csv(
            self.out / "residuals.csv", ("iter", "residual"), enumerate(result.residual_history), self.config.hash
        )

    def recovery_summary(self, result: InverseResult) -> dict[str, Any]:
        trajectory = result.trajectory
        L = self.config.inverse_config().target(trajectory.snapshots[0].omega)
        return {
            "method": result.method.value,
            "L": L,
            "converged": result.converged,
            "iterations": result.iterations_used,
            "final_residual": result.final_residual,
            "step_size": result.step_size,
            "jacobian_norm": result.jacobian_norm,
            "max_invariant_defect": float(np.max(np.abs(trajectory.mean_omega - L))),
            "h_derivative_l2": result.h.derivative_l2(),
            "final": self.final_row(trajectory),
        }

    def final_row(self, trajectory: Trajectory) -> dict[str, float]:
        return {name: float(values[-1]) for name, values in trajectory.diagnostics.items()}

    def write_report(self, document: dict[str, Any]) -> None:
        config = self.config
        write_json(
            self.out / "report.json",
            {"command": config.command.value, "fixture": str(config.fixture), **document},
            config.hash,
        )


def run(config: RunConfig) -> Path:
    return Lab(config).run()
