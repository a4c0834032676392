"""Acceptance gate: one test per criterion, each recording a PASS/FAIL line.

Tolerances are the stated ones; nothing here is loosened to make a run green.
"""

import csv
import filecmp
from pathlib import Path

import numpy as np
import pytest

from degenctl import coefficients as co
from degenctl import experiments as ex
from degenctl.cli import main
from degenctl.discretization import DIVERGENCE, NON_DIVERGENCE, build_grid
from degenctl.duality import adjoint_consistency_test
from degenctl.hum import HumConfig, TargetMode, solve_dense_oracle, solve_penalized
from degenctl.verification import TEMPLATE_PROFILES, manufactured_errors, observed_orders, template_system


@pytest.fixture(scope="module")
def suite_runs(tmp_path_factory):
    """Two consecutive ``degenctl suite`` runs with the same seed."""
    dirs = [tmp_path_factory.mktemp(f"suite{i}") for i in (1, 2)]
    codes = [main(["suite", "--out", str(d), "--seed", "0", "-q"]) for d in dirs]
    assert codes == [0, 0]
    return dirs


def _verdicts(outdir):
    with open(Path(outdir) / "verdicts.csv", newline="") as fh:
        return {row["scenario"]: row for row in csv.DictReader(fh)}


def test_criterion_1_adjoint_exactness(report):
    rng = np.random.default_rng(1)
    worst = 0.0
    for make in TEMPLATE_PROFILES.values():
        for form in (NON_DIVERGENCE, DIVERGENCE):
            system = template_system(form, make(), N=16, Nt=16)
            worst = max(worst, adjoint_consistency_test(system, trials=20, rng=rng))
    assert report(1, "adjoint exactness", worst <= 1e-10, f"max defect {worst:.2e} <= 1e-10")


def test_criterion_2_oracle_equivalence(report):
    worst = 0.0
    for form in (NON_DIVERGENCE, DIVERGENCE):
        for mode in TargetMode:
            system = template_system(form, co.power_profile(0, 0.5), N=8, Nt=8,
                                     kernel=co.constant_kernel(1.0))
            cfg = HumConfig(target_mode=mode)
            sysr = system.with_rho(cfg.effective_rho)
            u0 = np.sin(np.pi * system.model.grid.nodes)
            for eps in (1e-3, 1e-6):
                a = solve_penalized(system, u0, eps, cfg)
                b = solve_dense_oracle(system, u0, eps, cfg)
                rel = [sysr.control_norm(a.control - b.control) / sysr.control_norm(b.control),
                       abs(a.state_residual - b.state_residual) / b.state_residual]
                if b.memory_residual > 0:
                    rel.append(abs(a.memory_residual - b.memory_residual) / b.memory_residual)
                worst = max(worst, *rel)
    assert report(2, "oracle equivalence", worst <= 1e-6, f"max relative difference {worst:.2e} <= 1e-6")


def test_criterion_3_temporal_convergence(report):
    o1 = observed_orders(manufactured_errors(1.0, Nts=(32, 64, 128), N=512)).min()
    o2 = observed_orders(manufactured_errors(0.5, Nts=(32, 64, 128), N=512)).min()
    ok = o1 >= 0.9 and o2 >= 1.9
    assert report(3, "temporal convergence", ok, f"theta=1 order {o1:.3f} >= 0.9, theta=0.5 order {o2:.3f} >= 1.9")


def test_criterion_4_degeneracy_admissibility(report):
    nodes = build_grid(2000, None, 1.0).nodes
    ok = True
    for K in (0, 0.5, 1.0, 1.5, 1.9, 2.0, 2.5):
        regime = co.classify_exponent(K)
        if K >= 2:
            ok &= regime is co.Regime.INADMISSIBLE
            with pytest.raises(co.InadmissibleExponentError, match="not null-controllable"):
                co.power_profile(0, K)
        else:
            ok &= regime is (co.Regime.WEAK if K < 1 else co.Regime.STRONG)
            for prof in (co.power_profile(0, K), co.power_profile(1, K), co.double_profile(K, K)):
                ok &= co.verify_degeneracy_condition(prof, nodes).holds
    assert report(4, "degeneracy admissibility", ok, "K grid {0,...,2.5}, K >= 2 rejected")


def test_criterion_5_integrability_dichotomy(report):
    got = {K: co.reciprocal_integrability_probe(co.power_profile(0, K)).diverges
           for K in (0, 0.5, 0.9, 1.0, 1.5)}
    want = {0: False, 0.5: False, 0.9: False, 1.0: True, 1.5: True}
    assert report(5, "integrability dichotomy", got == want, f"diverges={got}")


def test_criterion_6_obstruction_triptych(report, suite_runs):
    v = _verdicts(suite_runs[0])
    s2, s3, s4 = (v[n] for n in ("S2_degenerate_baseline", "S3_fixed_memory_obstruction", "S4_moving_memory"))
    system, u0 = ex.scenario_from_config(ex.suite_config("S4_moving_memory")).build(1)
    bound = 1e-3 * system.model.metric.norm(u0)
    ratio = float(s3["cost_refined"]) / float(s3["cost_base"])
    parts = {
        "S2 BoundedCost": s2["signature"] == "BoundedCost",
        "S3 CostBlowup": s3["signature"] == "CostBlowup",
        f"S3 refined/base cost {ratio:.3f} >= 1.5": ratio >= 1.5,
        "S4 BoundedCost": s4["signature"] == "BoundedCost",
        f"S4 residuals ({float(s4['state_residual']):.2e}, {float(s4['memory_residual']):.2e}) <= {bound:.2e}":
            float(s4["state_residual"]) <= bound and float(s4["memory_residual"]) <= bound,
    }
    detail = "; ".join(f"{k}: {'ok' if ok else 'NO'}" for k, ok in parts.items())
    assert report(6, "obstruction triptych", all(parts.values()), detail)


def test_criterion_7_k_sweep_monotonicity(report):
    base = ex.scenario_from_config(ex.suite_config("S2_degenerate_baseline"))
    rows = ex.k_sweep(base, (0.5, 1.0, 1.5, 1.9, 2.0), refine=False)
    cc = [r.cost_constant for r in rows[:-1]]
    ok = all(b > a for a, b in zip(cc, cc[1:])) and rows[-1].regime == "Inadmissible"
    detail = ", ".join(f"K={r.K:g}: {r.cost_constant:.3e}" for r in rows[:-1]) + f", K=2: {rows[-1].regime}"
    assert report(7, "K-sweep monotonicity", ok, detail)


def test_criterion_8_form_coincidence(report):
    scenario = ex.scenario_from_config(ex.suite_config("S4_moving_memory"))
    scenario = scenario.with_changes(profile=co.power_profile(0, 0.0), N=32, Nt=64)
    systems = []
    for form in (NON_DIVERGENCE, DIVERGENCE):
        systems.append(scenario.with_changes(form=form).build(1))
    ops = [s.model.factory.unit.to_dense() for s, _ in systems]
    op_diff = np.linalg.norm(ops[0] - ops[1]) / np.linalg.norm(ops[1])
    eps = scenario.hum.epsilons[-1]
    sols = [solve_penalized(s, u0, eps, scenario.hum) for s, u0 in systems]
    a, b = sols
    sys_b = systems[1][0]
    diffs = [sys_b.control_norm(a.control - b.control) / sys_b.control_norm(b.control),
             abs(a.cost - b.cost) / b.cost,
             abs(a.state_residual - b.state_residual) / b.state_residual,
             abs(a.memory_residual - b.memory_residual) / b.memory_residual]
    ok = op_diff <= 1e-12 and max(diffs) <= 1e-10
    assert report(8, "form coincidence", ok,
                  f"operator difference {op_diff:.2e} <= 1e-12, solution difference {max(diffs):.2e} <= 1e-10")


def test_criterion_9_determinism(report, suite_runs):
    d1, d2 = suite_runs
    names = sorted(p.name for p in d1.iterdir() if p.suffix in (".csv", ".svg"))
    same = names == sorted(p.name for p in d2.iterdir() if p.suffix in (".csv", ".svg"))
    mismatch = [n for n in names if not filecmp.cmp(d1 / n, d2 / n, shallow=False)]
    ok = same and bool(names) and not mismatch
    assert report(9, "determinism", ok, f"{len(names)} artifacts compared, mismatches: {mismatch or 'none'}")
