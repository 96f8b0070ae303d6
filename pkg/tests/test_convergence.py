import numpy as np
import pytest

from vorticity_lab.convergence import convergence_study, poisson_error, taylor_error
from vorticity_lab.errors import PreconditionError


def test_poisson_study_is_second_order():
    table = convergence_study("poisson", (33, 17, 65))
    assert table.sizes == (17, 33, 65)
    assert np.isnan(table.orders[0])
    np.testing.assert_allclose(table.orders[1:], 2.0, atol=0.2)
    rows = list(table.rows())
    assert [row[0] for row in rows] == [17, 33, 65]
    assert rows[0][1] == pytest.approx(1.0 / 16.0)


def test_needs_three_grids():
    with pytest.raises(PreconditionError, match="at least 3"):
        convergence_study("poisson", (17, 33))


def test_unknown_study():
    with pytest.raises(PreconditionError, match="Unknown"):
        convergence_study("heat", (9, 17, 33))


def test_single_errors_are_small():
    assert poisson_error(33) < 2e-3
    assert taylor_error(17, 1e-3, 0.02) < 0.02


@pytest.mark.slow
def test_taylor_study_is_second_order():
    table = convergence_study("taylor", (17, 33, 65), T=0.05, dt=1e-3)
    assert np.all(np.diff(table.errors) < 0.0)
    assert np.all(table.orders[1:] >= 1.8)
