"""Invariant battery behind ``degenctl verify``.

Each check returns a :class:`Check` with the measured defect and the bound
it is held to.  Sizes are kept small so the whole battery runs in seconds
(the temporal-convergence check dominates).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import coefficients as co
from .discretization import DIVERGENCE, NON_DIVERGENCE, DiscreteOperatorFactory, build_grid, self_adjointness_check
from .duality import ControlSystem, adjoint_consistency_test
from .evolution import ForwardModel, MovingSupport, TimeGrid, rasterize_schedule
from .hum import HumConfig, TargetMode, solve_dense_oracle, solve_penalized


@dataclass(frozen=True)
class Check:
    name: str
    measured: float
    bound: float
    passed: bool

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.name}: measured={self.measured:.3e} bound={self.bound:.1e}"


def _upper(name, measured, bound):
    return Check(name, float(measured), float(bound), bool(measured <= bound))


def _lower(name, measured, bound):
    return Check(name, float(measured), float(bound), bool(measured >= bound))


TEMPLATE_PROFILES = {
    "WD K=0.5": lambda: co.power_profile(0, 0.5),
    "SD K=1.5": lambda: co.power_profile(0, 1.5),
    "double K=(0.5,1.5)": lambda: co.double_profile(0.5, 1.5),
}


def template_system(form, profile, N=16, Nt=16, T=1.0, rho=1.0, kernel=None, target=None,
                    support=None, b=None) -> ControlSystem:
    """Small system with exponential memory and the moving sweep (the adjoint templates)."""
    kernel = kernel or co.exponential_kernel(1.0, 2.0)
    target = target or kernel
    b = b or co.sine_b(2.0, 0.5, 1.0)
    grid = build_grid(N, profile, 2.0)
    factory = DiscreteOperatorFactory(form, profile, b, grid, T)
    tgrid = TimeGrid(T, Nt)
    model = ForwardModel(factory, kernel, tgrid)
    schedule = rasterize_schedule(support or MovingSupport(0.15), grid, tgrid)
    return ControlSystem(model, schedule, target, rho)


def manufactured_errors(theta, Nts=(32, 64, 128), N=512, T=1.0):
    """Max-norm errors against ``u = exp(-t) sin(pi x)`` with a = 1, b = 1 + t/2, M = 0.

    The source is built from the discrete operator, so the spatial error is
    removed and only the time-stepping error remains.
    """
    profile = co.power_profile(0, 0.0)
    b = co.linear_b(1.0, 0.5, T)
    grid = build_grid(N, profile, 1.0)
    factory = DiscreteOperatorFactory(DIVERGENCE, profile, b, grid, T)
    s = np.sin(np.pi * grid.nodes)
    As = factory.unit.matvec(s)
    errs = []
    for Nt in Nts:
        tg = TimeGrid(T, Nt)
        model = ForwardModel(factory, co.zero_kernel(), tg, theta)
        t = tg.nodes[:, None]
        source = -np.exp(-t) * s[None, :] - b(t) * np.exp(-t) * As[None, :]
        states = model.run(s, source)
        exact = np.exp(-t) * s[None, :]
        errs.append(float(np.max(np.abs(states - exact))))
    return errs


def observed_orders(errors, ratio=2.0):
    e = np.asarray(errors)
    return np.log(e[:-1] / e[1:]) / np.log(ratio)


def run_battery(seed: int = 0) -> list:
    rng = np.random.default_rng(seed)
    checks = []

    # admissibility gate
    expected = {0: co.Regime.WEAK, 0.5: co.Regime.WEAK, 1.0: co.Regime.STRONG, 1.5: co.Regime.STRONG,
                1.9: co.Regime.STRONG, 2.0: co.Regime.INADMISSIBLE, 2.5: co.Regime.INADMISSIBLE}
    wrong = sum(co.classify_exponent(K) is not r for K, r in expected.items())
    checks.append(_upper("exponent classification mismatches", wrong, 0))
    worst = 0.0
    nodes = build_grid(1000, None, 1.0).nodes
    for K in (0, 0.5, 1.0, 1.5, 1.9):
        for prof in (co.power_profile(0, K), co.power_profile(1, K), co.double_profile(K, K)):
            rep = co.verify_degeneracy_condition(prof, nodes)
            worst = max(worst, rep.max_violation / float(np.max(prof(nodes))))
    checks.append(_upper("degeneracy condition relative violation", worst, 1e-12))

    # integrability dichotomy
    miscls = 0
    for K, div in ((0, False), (0.5, False), (0.9, False), (1.0, True), (1.5, True)):
        miscls += co.reciprocal_integrability_probe(co.power_profile(0, K)).diverges is not div
    checks.append(_upper("integrability dichotomy misclassifications", miscls, 0))

    # operator self-adjointness
    sa = 0.0
    for prof in TEMPLATE_PROFILES.values():
        p = prof()
        for form in (NON_DIVERGENCE, DIVERGENCE):
            fac = DiscreteOperatorFactory(form, p, co.constant_b(1.0), build_grid(64, p, 2.0), 1.0)
            sa = max(sa, self_adjointness_check(fac, 0.5, trials=5, rng=rng))
    checks.append(_upper("operator self-adjointness defect", sa, 1e-12))

    # adjoint exactness
    adj = 0.0
    for prof in TEMPLATE_PROFILES.values():
        for form in (NON_DIVERGENCE, DIVERGENCE):
            adj = max(adj, adjoint_consistency_test(template_system(form, prof()), 20, rng))
    checks.append(_upper("adjoint consistency defect", adj, 1e-10))

    # oracle equivalence
    worst = 0.0
    for form in (NON_DIVERGENCE, DIVERGENCE):
        for mode in TargetMode:
            system = template_system(form, co.power_profile(0, 0.5), N=8, Nt=8,
                                     kernel=co.constant_kernel(1.0))
            cfg = HumConfig(target_mode=mode)
            u0 = np.sin(np.pi * system.model.grid.nodes)
            for eps in (1e-3, 1e-6):
                a = solve_penalized(system, u0, eps, cfg)
                b = solve_dense_oracle(system, u0, eps, cfg)
                sysr = system.with_rho(cfg.effective_rho)
                rel = sysr.control_norm(a.control - b.control) / sysr.control_norm(b.control)
                worst = max(worst, rel)
    checks.append(_upper("CG vs dense oracle relative control difference", worst, 1e-6))

    # temporal convergence
    o1 = observed_orders(manufactured_errors(1.0)).min()
    o2 = observed_orders(manufactured_errors(0.5)).min()
    checks.append(_lower("implicit Euler observed order", o1, 0.9))
    checks.append(_lower("Crank-Nicolson observed order", o2, 1.9))

    # form coincidence
    p = co.power_profile(0, 0.0)
    grid = build_grid(32, p, 2.0)
    ops = [DiscreteOperatorFactory(f, p, co.constant_b(1.0), grid, 1.0).unit.to_dense()
           for f in (NON_DIVERGENCE, DIVERGENCE)]
    checks.append(_upper("constant-a form difference (Frobenius)",
                         np.linalg.norm(ops[0] - ops[1]) / np.linalg.norm(ops[1]), 1e-12))
    return checks
