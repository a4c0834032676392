import logging

import numpy as np
import pytest

from degenctl import coefficients as co
from degenctl import experiments as ex
from degenctl.discretization import DIVERGENCE, NON_DIVERGENCE
from degenctl.errors import InvalidInputError
from degenctl.hum import (
    HumConfig, Signature, TargetMode, classify_slope, fit_slope, observability_constant_probe,
    penalty_sweep, solve_dense_oracle, solve_penalized,
)
from degenctl.verification import template_system


@pytest.fixture
def small():
    s = template_system(DIVERGENCE, co.power_profile(0, 0.5), N=8, Nt=8, kernel=co.constant_kernel(1.0))
    return s, np.sin(np.pi * s.model.grid.nodes)


def test_config_validation():
    with pytest.raises(InvalidInputError):
        HumConfig(epsilons=(1e-2, 1e-2))
    with pytest.raises(InvalidInputError):
        HumConfig(cg_tol=1.0)
    assert HumConfig(target_mode=TargetMode.CLASSICAL_ONLY, rho=3.0).effective_rho == 0.0


def test_zero_initial_datum(small):
    s, _ = small
    sol = solve_penalized(s, np.zeros(8), 1e-6)
    assert sol.cg_iterations == 0 and sol.cost == 0 and sol.state_residual == 0 and sol.memory_residual == 0
    assert solve_dense_oracle(s, np.zeros(8), 1e-6).cost == 0


@pytest.mark.parametrize("form", [NON_DIVERGENCE, DIVERGENCE])
@pytest.mark.parametrize("mode", list(TargetMode))
def test_cg_matches_dense_oracle(small, form, mode):
    s = template_system(form, co.power_profile(0, 0.5), N=8, Nt=8, kernel=co.constant_kernel(1.0))
    u0 = small[1]
    cfg = HumConfig(target_mode=mode)
    a = solve_penalized(s, u0, 1e-6, cfg)
    b = solve_dense_oracle(s, u0, 1e-6, cfg)
    sr = s.with_rho(cfg.effective_rho)
    assert a.converged
    assert sr.control_norm(a.control - b.control) <= 1e-6 * sr.control_norm(b.control)
    assert a.state_residual == pytest.approx(b.state_residual, rel=1e-6)
    assert b.normal_residual <= 1e-12


def test_large_penalty_limit(small):
    s, u0 = small
    eps = 1e6
    sol = solve_dense_oracle(s, u0, eps)
    d = s.free_drift(u0)
    approx = -s.apply_Lstar(d) / eps
    assert s.control_norm(sol.control - approx) <= 1e-5 * s.control_norm(approx)
    assert sol.cost < 1e-5
    assert sol.state_residual == pytest.approx(s.model.metric.norm(d.terminal), rel=1e-5)


def test_dense_guard():
    s = template_system(DIVERGENCE, co.power_profile(0, 0.5), N=64, Nt=128)
    with pytest.raises(InvalidInputError):
        solve_dense_oracle(s, np.ones(64), 1e-3)


def test_residuals_from_resimulation(small):
    s, u0 = small
    sol = solve_penalized(s, u0, 1e-4)
    states = s.model.run(u0, s.project(sol.control))
    tgt = s.target_of(states)
    assert sol.state_residual == pytest.approx(s.model.metric.norm(tgt.terminal), rel=1e-14)
    assert sol.cost_constant * s.model.metric.norm(u0) == pytest.approx(sol.cost, rel=1e-12)


def test_homogeneity(small):
    s, u0 = small
    a, b = solve_penalized(s, u0, 1e-5), solve_penalized(s, 3 * u0, 1e-5)
    assert b.cost == pytest.approx(3 * a.cost, rel=1e-8)
    assert b.cost_constant == pytest.approx(a.cost_constant, rel=1e-8)
    assert b.state_residual == pytest.approx(3 * a.state_residual, rel=1e-8)


def test_iteration_cap_flags_nonconvergence(small, caplog):
    s, u0 = small
    with caplog.at_level(logging.WARNING):
        sol = solve_penalized(s, u0, 1e-8, HumConfig(cg_max_iter=2))
    assert not sol.converged and sol.cg_iterations == 2
    assert "iteration cap" in caplog.text


def test_slope_fit_and_classification():
    eps = [1e-2, 1e-3, 1e-4, 1e-5]
    assert fit_slope(eps, [1, 1, 1, 1]) == pytest.approx(0.0, abs=1e-14)
    assert fit_slope(eps, [1, 10**0.5, 10, 10**1.5]) == pytest.approx(0.5)
    cfg = HumConfig()
    assert classify_slope(0.01, cfg) is Signature.BOUNDED_COST
    assert classify_slope(0.3, cfg) is Signature.COST_BLOWUP
    assert classify_slope(0.1, cfg) is Signature.INDETERMINATE


def _suite(name, **changes):
    sc = ex.scenario_from_config(ex.suite_config(name))
    return sc.with_changes(**changes) if changes else sc


def test_heat_baseline_bounded():
    sc = _suite("S1_heat_baseline", N=32, Nt=64)
    rep = penalty_sweep(*sc.build(1), sc.hum)
    assert rep.signature is Signature.BOUNDED_COST
    assert rep.rows[-1].cost / rep.rows[-2].cost < 1.1


def test_fixed_support_with_memory_blows_up():
    sc = _suite("S3_fixed_memory_obstruction", N=32, Nt=64)
    assert penalty_sweep(*sc.build(1), sc.hum).signature is Signature.COST_BLOWUP


def test_moving_support_with_memory_bounded():
    sc = _suite("S3_fixed_memory_obstruction", N=32, Nt=64, support=ex.MovingSupport(0.15))
    assert penalty_sweep(*sc.build(1), sc.hum).signature is Signature.BOUNDED_COST


def test_penalization_monotone_residual():
    sc = _suite("S4_moving_memory", N=32, Nt=64)
    system, u0 = sc.build(1)
    r4 = solve_penalized(system, u0, 1e-4, sc.hum).state_residual
    r6 = solve_penalized(system, u0, 1e-6, sc.hum).state_residual
    assert r4 >= r6


def test_warm_start_agrees_with_cold():
    sc = _suite("S2_degenerate_baseline", N=16, Nt=32)
    system, u0 = sc.build(1)
    warm = penalty_sweep(system, u0, sc.hum, warm_start=True)
    cold = penalty_sweep(system, u0, sc.hum, warm_start=False)
    for a, b in zip(warm.rows, cold.rows):
        assert a.cost == pytest.approx(b.cost, rel=1e-6)


def test_observability_probe_ordering():
    base = _suite("S2_degenerate_baseline", N=32, Nt=64)
    consts = []
    for K in (0.5, 1.9):
        sc = base.with_changes(profile=co.power_profile(0, K))
        system, u0 = sc.build(1)
        probe = observability_constant_probe(system, trials=1, eps=1e-6, config=sc.hum, candidates=[u0])
        assert np.isfinite(probe.constant)
        consts.append(probe.constant)
    assert consts[1] > consts[0]
