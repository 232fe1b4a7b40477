import io

import numpy as np
import pytest

from conftest import random_observable_system, random_stable_eigenvalues
from fobs.linear import ObserverRealization, design_linear
from fobs.model import LinearSystem, NonlinearSystem
from fobs.simulate import error_analysis, simulate, write_csv


@pytest.fixture
def design(rng):
    sys, vo = random_observable_system(rng, stable=True)
    return sys, design_linear(sys, random_stable_eigenvalues(rng, vo - 1)), rng


def test_consistent_start_tracks_exactly(design):
    sys, d, rng = design
    x0 = rng.standard_normal(sys.n)
    traj = simulate(sys, d.observer, x0, d.T @ x0, 200)
    scale = max(1.0, np.abs(traj.true_z).max())
    assert np.abs(traj.err).max() <= 1e-9 * scale


def test_error_follows_companion_dynamics(design):
    sys, d, rng = design
    x0 = rng.standard_normal(sys.n)
    xi0 = d.T @ x0 + rng.standard_normal(d.v)
    traj = simulate(sys, d.observer, x0, xi0, 300)
    ea = error_analysis(traj, d.T, d.observer)
    assert ea.max_dev <= 1e-8 * ea.scale


def test_zero_init_error_analytic_is_zero(design):
    sys, d, rng = design
    x0 = rng.standard_normal(sys.n)
    ea = error_analysis(simulate(sys, d.observer, x0, d.T @ x0, 50), d.T, d.observer)
    assert np.abs(ea.analytic_err).max() <= 1e-12


def test_deadbeat_scalar_observer():
    sys = LinearSystem([[0.5, 0.1], [0.0, 0.3]], [[1.0, 0.0]], [[1.0, 0.0]])
    d = design_linear(sys, [0.0])
    traj = simulate(sys, d.observer, np.array([1.0, -1.0]), d.T @ [1.0, -1.0] + 2.0, 10)
    assert traj.err[0] == pytest.approx(2.0)
    np.testing.assert_allclose(traj.err[1:], 0.0, atol=1e-15)


def test_broken_B_deviates(design):
    sys, d, rng = design
    obs = d.observer
    B = obs.B + 1e-2
    broken = ObserverRealization(obs.A, B, obs.C, obs.D)
    x0 = rng.standard_normal(sys.n)
    ea = error_analysis(simulate(sys, broken, x0, d.T @ x0 + 1.0, 100), d.T, broken)
    assert ea.max_dev > 1e-6


def test_superposition(design):
    sys, d, rng = design
    x0 = rng.standard_normal(sys.n)
    e1, e2 = rng.standard_normal(d.v), rng.standard_normal(d.v)

    base = simulate(sys, d.observer, x0, d.T @ x0, 100).err
    runs = [simulate(sys, d.observer, x0, d.T @ x0 + e, 100) for e in (e1, e2, e1 + 2.0 * e2)]
    scale = max(np.abs(np.r_[r.true_z, r.z_hat]).max() for r in runs)
    d1, d2, d12 = (r.err - base for r in runs)
    dev = np.abs(d12 - d1 - 2.0 * d2).max()
    assert dev <= 1e-12 * scale


def test_overflow_truncates():
    sys = NonlinearSystem(
        F=lambda x: x * 1e100, H=lambda x: x, q=lambda x: x[0], n=1, p=1,
        domain_box=([-1.0], [1.0]),
    )
    obs = ObserverRealization([[0.5]], [[0.0]], [[1.0]], [[1.0]])
    traj = simulate(sys, obs, [1.0], [0.0], 10)
    assert traj.diverged_at == 4
    assert traj.N == 3
    assert "step 4" in traj.message


def test_shape_validation(design):
    sys, d, _ = design
    with pytest.raises(ValueError):
        simulate(sys, d.observer, np.zeros(sys.n + 1), np.zeros(d.v), 5)
    with pytest.raises(ValueError):
        simulate(sys, d.observer, np.zeros(sys.n), np.zeros(d.v + 1), 5)


def test_csv_layout(design):
    sys, d, rng = design
    x0 = rng.standard_normal(sys.n)
    traj = simulate(sys, d.observer, x0, d.T @ x0 + 1.0, 5)
    buf = io.StringIO()
    write_csv(buf, traj, error_analysis(traj, d.T, d.observer).analytic_err)
    lines = buf.getvalue().splitlines()
    header = lines[0].split(",")
    assert header[0] == "k" and header[-4:] == ["z", "z_hat", "err", "analytic_err"]
    assert len(header) == 1 + sys.n + sys.p + 4
    assert len(lines) == 7
    # repr round trips exactly
    assert float(lines[3].split(",")[-3]) == traj.z_hat[2]
