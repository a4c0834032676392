import csv

import numpy as np
import pytest

from degenctl import coefficients as co
from degenctl import kernels
from degenctl.discretization import DIVERGENCE, NON_DIVERGENCE, DiscreteOperatorFactory, build_grid
from degenctl.errors import GeometryError, InvalidInputError, ResolutionError
from degenctl.evolution import (
    FixedSupport, ForwardModel, MovingSupport, TimeGrid, coverage_check, memory_accumulator,
    rasterize_schedule, step,
)
from degenctl.evolution import ControlSchedule


def model(form=DIVERGENCE, profile=None, N=32, Nt=64, T=1.0, kernel=None, b=None, theta=1.0, gamma=2.0):
    profile = profile or co.power_profile(0, 0)
    fac = DiscreteOperatorFactory(form, profile, b or co.constant_b(1.0), build_grid(N, profile, gamma), T)
    return ForwardModel(fac, kernel or co.zero_kernel(), TimeGrid(T, Nt), theta)


def test_fixed_mask_membership():
    g = build_grid(4, None, 1.0)
    s = rasterize_schedule(FixedSupport(0.3, 0.7), g, TimeGrid(1.0, 4))
    assert s.masks.tolist() == [[False, True, True, False]] * 5


def test_fixed_support_must_be_inside():
    g = build_grid(8, None, 1.0)
    with pytest.raises(GeometryError):
        rasterize_schedule(FixedSupport(0.0, 0.5), g, TimeGrid(1.0, 4))


def test_support_without_nodes_is_resolution_error():
    g = build_grid(4, None, 1.0)
    with pytest.raises(ResolutionError):
        rasterize_schedule(FixedSupport(0.45, 0.55), g, TimeGrid(1.0, 4))


def test_sweep_stays_inside_and_covers():
    g = build_grid(64, co.power_profile(0, 1.5))
    s = rasterize_schedule(MovingSupport(0.15), g, TimeGrid(1.0, 64))
    assert coverage_check(s)
    assert s.left.min() > 0 and s.right.max() < 1


def test_sweep_touching_boundary_is_geometry_error():
    g = build_grid(8, None, 1.0)
    with pytest.raises(GeometryError):
        rasterize_schedule(MovingSupport(0.2, center=lambda t: 0.2), g, TimeGrid(1.0, 4))


def test_coverage_fixed_support_false():
    s = rasterize_schedule(FixedSupport(0.3, 0.7), build_grid(9, None, 1.0), TimeGrid(1.0, 4))
    assert not coverage_check(s)


def test_coverage_single_wide_step():
    masks = np.ones((2, 9), dtype=bool)
    assert coverage_check(ControlSchedule("moving", masks, np.zeros(2), np.ones(2)))


def test_zero_data_zero_trajectory():
    m = model(kernel=co.exponential_kernel(1, 1))
    s = rasterize_schedule(FixedSupport(0.3, 0.7), m.grid, m.tgrid)
    traj = step(m, s, np.zeros(m.N))
    assert not np.any(traj.states)


def test_energy_decays_without_memory():
    m = model(N=32, Nt=64, gamma=1.0)
    u = m.run(np.sin(np.pi * m.grid.nodes))
    energy = np.array([m.metric.norm(v) for v in u])
    assert np.all(np.diff(energy) < 0)


def test_heat_decay_rate():
    m = model(N=256, Nt=512, T=0.1, gamma=1.0)
    s = np.sin(np.pi * m.grid.nodes)
    uT = m.run(s)[-1]
    ref = np.exp(-np.pi**2 * 0.1) * s
    assert np.linalg.norm(uT - ref) / np.linalg.norm(ref) <= 1e-3


def _scalar_volterra(Nt, theta=1.0):
    t = np.linspace(0, 1, Nt + 1)
    M = np.tril(np.ones((Nt + 1, Nt + 1)))
    z = np.zeros(1)
    return kernels.forward_sweep(z, -np.ones(1), z, np.ones(Nt + 1), theta, 1.0 / Nt, M,
                                 np.ones(1), np.zeros((Nt + 1, 1)), True)[:, 0], t


def test_scalar_volterra_against_analytic_solution():
    # u' = -u - int_0^t u, u(0) = 1  =>  u'' + u' + u = 0, u'(0) = -1
    exact = np.exp(-0.5) * (np.cos(np.sqrt(3) / 2) - np.sin(np.sqrt(3) / 2) / np.sqrt(3))
    u, _ = _scalar_volterra(256)
    assert abs(u[-1] - exact) <= 1e-3
    errs = [abs(_scalar_volterra(n)[0][-1] - exact) for n in (128, 256, 512)]
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders > 0.9)


def test_theta_half_with_memory_stays_first_order():
    # Crank-Nicolson averages only the A term; the memory endpoint stays implicit
    exact = np.exp(-0.5) * (np.cos(np.sqrt(3) / 2) - np.sin(np.sqrt(3) / 2) / np.sqrt(3))
    errs = [abs(_scalar_volterra(n, 0.5)[0][-1] - exact) for n in (64, 128, 256)]
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all((orders > 0.9) & (orders < 1.5))


def test_memory_accumulator_examples():
    tg = TimeGrid(2.0, 16)
    ones = np.ones((17, 5))
    assert np.allclose(memory_accumulator(co.constant_kernel(1.0), tg, ones), 2.0)
    assert not np.any(memory_accumulator(co.zero_kernel(), tg, ones))
    m = memory_accumulator(co.exponential_kernel(1.0, 1.0), TimeGrid(1.0, 128), np.ones((129, 3)))
    assert np.allclose(m, 1 - np.exp(-1), atol=1e-4)


def test_control_is_masked_and_linear():
    m = model(kernel=co.exponential_kernel(1, 1), N=16, Nt=16)
    s = rasterize_schedule(MovingSupport(0.15), m.grid, m.tgrid)
    rng = np.random.default_rng(0)
    f = rng.standard_normal((17, 16))
    traj = step(m, s, np.zeros(16), f)
    assert not np.any(traj.controls[~s.masks])
    assert np.allclose(step(m, s, np.zeros(16), 2 * f).states, 2 * traj.states, rtol=1e-13, atol=1e-15)


def test_shape_validation():
    m = model(N=8, Nt=4)
    with pytest.raises(InvalidInputError):
        m.run(np.zeros(7))
    with pytest.raises(InvalidInputError):
        m.run(np.zeros(8), np.zeros((4, 8)))
    with pytest.raises(InvalidInputError):
        model(theta=0.3)


def test_trajectory_csv(tmp_path):
    m = model(N=4, Nt=2)
    s = rasterize_schedule(FixedSupport(0.3, 0.7), m.grid, m.tgrid)
    traj = step(m, s, np.ones(4), np.ones((3, 4)))
    traj.to_csv(tmp_path / "t.csv")
    rows = list(csv.DictReader(open(tmp_path / "t.csv")))
    assert len(rows) == 12 and list(rows[0]) == ["t", "x", "u", "f", "in_omega"]
    assert {r["in_omega"] for r in rows} == {"0", "1"}
    assert all(float(r["f"]) == 0 for r in rows if r["in_omega"] == "0")


@pytest.mark.parametrize("form", [NON_DIVERGENCE, DIVERGENCE])
def test_backends_agree(form):
    if len(kernels.available_backends()) < 2:
        pytest.skip("compiled backend not built")
    from degenctl import _sweeps, _sweeps_py
    m = model(form, co.double_profile(0.5, 1.5), N=20, Nt=30, kernel=co.exponential_kernel(1, 2), theta=0.5)
    rng = np.random.default_rng(3)
    u0, inj = rng.standard_normal(20), rng.standard_normal((31, 20))
    U = m.factory.unit
    args = (U.lower, U.diag, U.upper, m.bvals, 0.5, m.tgrid.dt, m.memory_matrix)
    a = _sweeps.forward_sweep(*args, u0, inj, True)
    b = _sweeps_py.forward_sweep(*args, u0, inj, True)
    assert np.allclose(a, b, rtol=1e-12, atol=1e-14)
    assert np.allclose(_sweeps.adjoint_sweep(*args, inj, True), _sweeps_py.adjoint_sweep(*args, inj, True),
                       rtol=1e-12, atol=1e-14)
    rhs = rng.standard_normal(20)
    assert np.allclose(_sweeps.thomas_solve(U.lower, U.diag - 1, U.upper, rhs),
                       _sweeps_py.thomas_solve(U.lower, U.diag - 1, U.upper, rhs), rtol=1e-12)


def test_pure_python_fallback_selected_by_env():
    import os
    import subprocess
    import sys
    code = ("from degenctl import kernels, coefficients as co\n"
            "from degenctl.verification import template_system\n"
            "from degenctl.duality import adjoint_consistency_test\n"
            "s = template_system(2, co.power_profile(0, 1.5))\n"
            "print(kernels.BACKEND, adjoint_consistency_test(s, 5, rng=0) < 1e-10)")
    env = dict(os.environ, DEGENCTL_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.split() == ["python", "True"]


def test_implicit_euler_eigenmode_decay_exact():
    m = model(N=31, Nt=10, T=0.05, gamma=1.0)
    h = 1 / 32
    lam = 4 / h**2 * np.sin(np.pi * h / 2) ** 2
    s = np.sin(np.pi * m.grid.nodes)
    u = m.run(s)
    factor = 1 / (1 + m.tgrid.dt * lam)
    assert np.allclose(u, factor ** np.arange(11)[:, None] * s[None, :], rtol=1e-12, atol=1e-15)
