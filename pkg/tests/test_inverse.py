from itertools import combinations

import numpy as np
import pytest

from vorticity_lab.errors import CompatibilityError, PreconditionError, StepSizeError
from vorticity_lab.fixtures import random_stream, taylor
from vorticity_lab.forward import (
    AdvectionScheme, BoundaryVorticity, SolverConfig, StorageMode, StoragePolicy, stream_function,
    velocity_from_stream,
)
from vorticity_lab.grid import ScalarField, make_grid
from vorticity_lab.inverse import (
    InverseConfig, InverseMethod, JacobianMode, forward_map, landweber, levenberg_marquardt,
    project_h_step, recover, recover_projection, sensitivity_jacobian,
)
from vorticity_lab.norms import max_speed, mean, time_l2


@pytest.fixture
def small_cfg(grid9) -> SolverConfig:
    return SolverConfig(grid9, 5e-3, 0.025)


@pytest.fixture
def diffusion_cfg(grid9) -> SolverConfig:
    return SolverConfig(grid9, 1e-2, 0.05, advection_on=False)


def test_projected_step_keeps_constant_state(grid17):
    c = 3.0
    omega = ScalarField.constant(grid17, c)
    u = velocity_from_stream(stream_function(omega))
    h, omega_next = project_h_step(omega, u, c, 1e-3)
    assert h == pytest.approx(c, rel=1e-9)
    np.testing.assert_allclose(omega_next.values, c, atol=1e-9)


def test_projected_step_hits_target(grid17):
    omega = taylor(grid17)
    u = velocity_from_stream(stream_function(omega))
    L = mean(omega)
    h, omega_next = project_h_step(omega, u, L, 1e-3)
    assert mean(omega_next) == pytest.approx(L, abs=1e-10 * (1.0 + abs(L)))
    assert np.all(omega_next.boundary_values() == h)


def test_projection_follows_single_steps(grid17):
    cfg = SolverConfig(grid17, 2e-3, 0.004, storage=StoragePolicy(StorageMode.ALL))
    omega0 = random_stream(grid17, 4)
    L = mean(omega0)
    result = recover_projection(omega0, L, cfg)
    u0 = velocity_from_stream(stream_function(omega0))
    h1, omega1 = project_h_step(omega0, u0, L, cfg.dt)
    u1 = velocity_from_stream(stream_function(omega1))
    h2, omega2 = project_h_step(omega1, u1, L, cfg.dt, u_prev=u0, omega_prev=omega0)
    np.testing.assert_allclose(result.h.values[1:], [h1, h2], rtol=0.0, atol=1e-12)
    np.testing.assert_allclose(result.trajectory.snapshots[2].omega.values, omega2.values, rtol=0.0, atol=1e-12)


def test_projected_step_uses_the_solver_safety_factor(grid9):
    omega = taylor(grid9)
    u = velocity_from_stream(stream_function(omega))
    dt = 0.95 * grid9.dx / (1.0 + max_speed(u))
    with pytest.raises(StepSizeError):
        project_h_step(omega, u, mean(omega), dt)


class TestProjection:
    def test_taylor_holds_the_mean(self, grid17):
        cfg = SolverConfig(grid17, 1e-3, 0.02)
        omega0 = taylor(grid17)
        L = mean(omega0)
        result = recover_projection(omega0, L, cfg)
        assert result.converged
        assert result.method is InverseMethod.PROJECTION
        assert np.max(np.abs(result.trajectory.mean_omega - L)) <= 1e-10 * (1.0 + abs(L))
        assert result.h.values[0] == 0.0
        assert np.all(result.h.values[1:] > 0.0)

    def test_constant_recovers_constant(self, grid9, small_cfg):
        result = recover_projection(ScalarField.constant(grid9, 2.0), 2.0, small_cfg)
        np.testing.assert_allclose(result.h.values, 2.0, rtol=1e-10)

    def test_incompatible_target(self, grid9, small_cfg):
        with pytest.raises(CompatibilityError) as error:
            recover_projection(ScalarField.constant(grid9, 2.0), 3.0, small_cfg)
        assert error.value.kind == "incompatible-L"

    def test_non_uniform_boundary(self, grid9, small_cfg):
        omega0 = ScalarField.from_function(grid9, lambda x, y: x)
        with pytest.raises(CompatibilityError) as error:
            recover_projection(omega0, mean(omega0), small_cfg)
        assert error.value.kind == "incompatible-initial-data"

    def test_projected_h_reproduces_the_target_forward(self, grid9, small_cfg):
        omega0 = taylor(grid9)
        L = mean(omega0)
        result = recover_projection(omega0, L, small_cfg)
        np.testing.assert_allclose(forward_map(result.h, omega0, small_cfg), L, atol=1e-9 * (1.0 + L))


def test_forward_map_of_constant(grid9, small_cfg):
    h = BoundaryVorticity.constant(1.5, small_cfg.nt, small_cfg.dt)
    np.testing.assert_allclose(forward_map(h, ScalarField.constant(grid9, 1.5), small_cfg), 1.5, atol=1e-10)


class TestJacobian:
    @pytest.fixture
    def h(self, small_cfg):
        return BoundaryVorticity(0.0, small_cfg.dt, np.concatenate([[0.0], np.linspace(2.0, 6.0, small_cfg.nt)]))

    def test_lower_triangular(self, grid9, small_cfg, h):
        jacobian = sensitivity_jacobian(h, taylor(grid9), small_cfg)
        assert jacobian.shape == (5, 5)
        assert np.all(np.triu(jacobian, 1) == 0.0)
        assert np.all(np.diag(jacobian) > 0.0)

    @pytest.mark.parametrize("scheme", list(AdvectionScheme))
    def test_sensitivity_matches_finite_differences(self, grid9, h, scheme):
        eps = 1e-4
        cfg = SolverConfig(grid9, 5e-3, 0.025, scheme=scheme)
        omega0 = taylor(grid9)
        exact = sensitivity_jacobian(h, omega0, cfg)
        approx = sensitivity_jacobian(h, omega0, cfg, JacobianMode.FINITE_DIFFERENCE, eps)
        scale = max(1.0, float(np.max(np.abs(exact))))
        np.testing.assert_allclose(approx, exact, rtol=0.0, atol=10 * eps**2 * scale)

    def test_without_advection_jacobian_does_not_depend_on_h(self, grid9, diffusion_cfg):
        omega0 = taylor(grid9)
        zero = BoundaryVorticity.constant(0.0, diffusion_cfg.nt, diffusion_cfg.dt)
        other = BoundaryVorticity(0.0, diffusion_cfg.dt, np.concatenate([[0.0], np.full(diffusion_cfg.nt, 9.0)]))
        np.testing.assert_allclose(
            sensitivity_jacobian(zero, omega0, diffusion_cfg),
            sensitivity_jacobian(other, omega0, diffusion_cfg),
            atol=1e-12,
        )


def test_inverse_config_validation():
    with pytest.raises(PreconditionError):
        InverseConfig(growth=1.0)
    with pytest.raises(PreconditionError):
        InverseConfig(step_size=-1.0)
    assert InverseConfig(L=2.0).target(None) == 2.0


class TestLevenbergMarquardt:
    def test_constant_converges_immediately(self, grid9, small_cfg):
        result = levenberg_marquardt(ScalarField.constant(grid9, 3.0), small_cfg, InverseConfig(InverseMethod.LM))
        assert result.converged
        assert result.iterations_used == 0
        np.testing.assert_allclose(result.h.values, 3.0, rtol=1e-12)

    def test_linear_problem_converges_in_one_step(self, grid9, diffusion_cfg):
        icfg = InverseConfig(InverseMethod.LM, damping=1e-12)
        result = levenberg_marquardt(taylor(grid9), diffusion_cfg, icfg)
        assert result.converged
        assert result.iterations_used == 1

    def test_agrees_with_projection(self, grid9, small_cfg):
        omega0 = taylor(grid9)
        projected = recover_projection(omega0, mean(omega0), small_cfg)
        result = recover(omega0, small_cfg, InverseConfig(InverseMethod.LM))
        assert result.converged
        assert result.residual_history[-1] <= 1e-8
        assert np.all(np.diff(result.residual_history) < 0.0)
        scale = float(np.max(np.abs(projected.h.values)))
        np.testing.assert_allclose(result.h.values, projected.h.values, rtol=0.0, atol=1e-4 * scale)

    def test_finite_difference_mode(self, grid9, small_cfg):
        icfg = InverseConfig(InverseMethod.LM, jacobian_mode=JacobianMode.FINITE_DIFFERENCE)
        result = levenberg_marquardt(taylor(grid9), small_cfg, icfg)
        assert result.converged


class TestLandweber:
    def test_constant_converges_immediately(self, grid9, small_cfg):
        result = landweber(ScalarField.constant(grid9, 3.0), small_cfg, InverseConfig(InverseMethod.LANDWEBER))
        assert result.converged
        assert result.iterations_used == 0

    def test_residual_decreases_on_linear_problem(self, grid9, diffusion_cfg):
        icfg = InverseConfig(InverseMethod.LANDWEBER, max_iters=50)
        result = landweber(taylor(grid9), diffusion_cfg, icfg)
        history = result.residual_history
        assert history.size == result.iterations_used + 1
        assert np.all(np.diff(history) <= 1e-12 * history[0])
        assert history[-1] < history[0]
        assert result.step_size == pytest.approx(1.0 / result.jacobian_norm**2, rel=1e-12)

    def test_step_size_too_large(self, grid9, diffusion_cfg):
        omega0 = taylor(grid9)
        h = BoundaryVorticity.constant(0.0, diffusion_cfg.nt, diffusion_cfg.dt)
        bound = np.linalg.norm(sensitivity_jacobian(h, omega0, diffusion_cfg), 2) ** 2
        icfg = InverseConfig(InverseMethod.LANDWEBER, step_size=20.0 / bound)
        with pytest.raises(StepSizeError) as error:
            landweber(omega0, diffusion_cfg, icfg)
        assert error.value.kind == "step-size-too-large"

    @pytest.mark.slow
    def test_agrees_with_projection(self, grid9, diffusion_cfg):
        omega0 = taylor(grid9)
        projected = recover_projection(omega0, mean(omega0), diffusion_cfg)
        icfg = InverseConfig(InverseMethod.LANDWEBER, max_iters=20000, jacobian_refresh=1000)
        result = landweber(omega0, diffusion_cfg, icfg)
        scale = float(np.sqrt(np.sum(projected.h.values**2)))
        difference = float(np.sqrt(np.sum((result.h.values - projected.h.values) ** 2)))
        assert difference <= 1e-2 * scale


@pytest.mark.slow
def test_methods_agree_on_taylor():
    grid = make_grid(17, 17)
    cfg = SolverConfig(grid, 1e-3, 0.01)
    omega0 = taylor(grid)
    results = {
        method: recover(omega0, cfg, InverseConfig(method, max_iters=5000))
        for method in InverseMethod
    }
    assert results[InverseMethod.PROJECTION].converged
    assert results[InverseMethod.LM].converged
    for first, second in combinations(results.values(), 2):
        difference = time_l2(first.h.values - second.h.values, cfg.dt)
        assert difference <= 1e-2 * time_l2(first.h.values, cfg.dt)
