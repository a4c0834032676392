"""Named scenarios, verdicts and CSV/SVG artifacts.

Scenarios are declared as plain configuration dictionaries (the same schema
the CLI reads), so every suite entry can be dumped to a JSON file and re-run
on its own.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import coefficients as co
from .discretization import DIVERGENCE, NON_DIVERGENCE, DiscreteOperatorFactory, build_grid
from .duality import ControlSystem
from .errors import InvalidInputError
from .evolution import FixedSupport, ForwardModel, MovingSupport, TimeGrid, rasterize_schedule
from .hum import HumConfig, Signature, SweepReport, SweepRow, TargetMode, penalty_sweep, solve_penalized
from .plotting import Axes, Series, emit_svg

logger = logging.getLogger(__name__)

SWEEP_HEADER = ["epsilon", "cost", "cost_constant", "state_residual", "memory_residual",
                "cg_iterations", "converged"]
VERDICT_HEADER = ["scenario", "signature", "slope", "cost_base", "cost_refined",
                  "state_residual", "memory_residual"]


# initial data -------------------------------------------------------------

def parse_u0_spec(spec: str):
    """Return ``f(nodes) -> array`` for specs like ``sine_mode:1``, ``bump:0.2,0.05``, ``random:7``."""
    kind, _, arg = spec.partition(":")
    try:
        if kind == "zero" and not arg:
            return lambda x: np.zeros_like(x)
        if kind == "sine_mode":
            k = int(arg)
            if k < 1:
                raise ValueError
            return lambda x: np.sin(k * np.pi * x)
        if kind == "bump":
            c, w = (float(v) for v in arg.split(","))
            if not (0 < c < 1 and w > 0):
                raise ValueError
            return lambda x: np.exp(-(((x - c) / w) ** 2))
        if kind == "random":
            seed = int(arg)
            if seed < 0:
                raise ValueError
            return lambda x: np.random.default_rng(seed).standard_normal(len(x))
    except ValueError:
        pass
    raise InvalidInputError(
        f"bad u0 spec {spec!r}; use 'zero', 'sine_mode:<k>', 'bump:<center>,<width>' or 'random:<seed>'")


# scenarios ----------------------------------------------------------------

def _profile(spec) -> co.DegeneracyProfile:
    if spec.type == "power":
        return co.power_profile(spec.x0, spec.K)
    return co.double_profile(spec.K0, spec.K1)


def _time_coefficient(spec, T) -> co.TimeCoefficient:
    if spec.type == "constant":
        return co.constant_b(spec.value)
    if spec.type == "linear":
        return co.linear_b(spec.c0, spec.c1, T)
    return co.sine_b(spec.mean, spec.amplitude, spec.frequency)


def _kernel(spec) -> co.MemoryKernel:
    if spec.type == "zero":
        return co.zero_kernel()
    if spec.type == "constant":
        return co.constant_kernel(spec.value)
    return co.exponential_kernel(spec.amplitude, spec.rate)


@dataclass(frozen=True, eq=False)
class Scenario:
    name: str
    form: int
    profile: co.DegeneracyProfile
    b: co.TimeCoefficient
    kernel: co.MemoryKernel
    target_kernel: co.MemoryKernel
    T: float
    u0: str
    N: int
    Nt: int
    gamma: float = 2.0
    theta: float = 1.0
    support: object = field(default_factory=lambda: MovingSupport(0.15))
    hum: HumConfig = field(default_factory=HumConfig)

    def build(self, refine: int = 1):
        """``(ControlSystem, u0)`` at ``refine`` times the base resolution."""
        N, Nt = self.N * refine, self.Nt * refine
        grid = build_grid(N, self.profile, self.gamma)
        factory = DiscreteOperatorFactory(self.form, self.profile, self.b, grid, self.T)
        tgrid = TimeGrid(self.T, Nt)
        model = ForwardModel(factory, self.kernel, tgrid, self.theta)
        schedule = rasterize_schedule(self.support, grid, tgrid)
        system = ControlSystem(model, schedule, self.target_kernel, self.hum.effective_rho)
        u0 = np.asarray(parse_u0_spec(self.u0)(grid.nodes), dtype=float)
        return system, u0

    def with_changes(self, **kw) -> "Scenario":
        return replace(self, **kw)


def scenario_from_config(cfg) -> Scenario:
    """Build a :class:`Scenario` from a validated :class:`~degenctl.config.RunConfig`."""
    p = cfg.problem
    kernel = _kernel(p.kernel)
    target = _kernel(p.target_kernel) if p.target_kernel is not None else kernel
    if cfg.control.fixed is not None:
        support = FixedSupport(cfg.control.fixed.l, cfg.control.fixed.r)
    else:
        support = MovingSupport(cfg.control.moving.delta)
    h = cfg.hum
    hum = HumConfig(epsilons=h.epsilons, cg_tol=h.cg_tol, cg_max_iter=h.cg_max_iter, rho=h.rho,
                    target_mode=TargetMode(h.target_mode))
    return Scenario(
        name=cfg.name,
        form=NON_DIVERGENCE if p.form == "non_divergence" else DIVERGENCE,
        profile=_profile(p.profile),
        b=_time_coefficient(p.b, p.T),
        kernel=kernel,
        target_kernel=target,
        T=p.T,
        u0=p.u0,
        N=cfg.grid.N,
        Nt=cfg.grid.Nt,
        gamma=cfg.grid.gamma,
        theta=cfg.grid.theta,
        support=support,
        hum=hum,
    )


def _fixed(l, r):
    return {"fixed": {"l": l, "r": r}}


SUITE_CONFIGS = {
    "S1_heat_baseline": {
        "problem": {"form": "divergence", "profile": {"type": "power", "x0": 0, "K": 0.0},
                    "T": 1.0, "u0": "sine_mode:1"},
        "grid": {"N": 64, "Nt": 128},
        "control": _fixed(0.3, 0.8),
        "hum": {"target_mode": "classical_only"},
    },
    "S2_degenerate_baseline": {
        "problem": {"form": "divergence", "profile": {"type": "power", "x0": 0, "K": 0.75},
                    "b": {"type": "linear", "c0": 1.0, "c1": 0.5}, "T": 1.0, "u0": "sine_mode:1"},
        "grid": {"N": 64, "Nt": 128},
        "control": _fixed(0.3, 0.8),
        "hum": {"target_mode": "classical_only"},
    },
    "S3_fixed_memory_obstruction": {
        "problem": {"form": "divergence", "profile": {"type": "power", "x0": 0, "K": 0.0},
                    "kernel": {"type": "constant", "value": 1.0}, "T": 1.0, "u0": "sine_mode:1"},
        "grid": {"N": 64, "Nt": 128},
        "control": _fixed(0.3, 0.8),
        "hum": {"target_mode": "memory_type"},
    },
    "S4_moving_memory": {
        "problem": {"form": "non_divergence", "profile": {"type": "power", "x0": 0, "K": 1.5},
                    "b": {"type": "sine", "mean": 2.0, "amplitude": 0.5, "frequency": 1.0},
                    "kernel": {"type": "exponential", "amplitude": 1.0, "rate": 1.0},
                    "T": 1.0, "u0": "sine_mode:1"},
        "grid": {"N": 64, "Nt": 128},
        "control": {"moving": {"delta": 0.15, "path": "sweep"}},
        "hum": {"target_mode": "memory_type"},
    },
}


def suite_config(name: str, output=None):
    from .config import config_from_dict

    data = dict(SUITE_CONFIGS[name], name=name)
    if output is not None:
        data["output"] = output
    return config_from_dict(data)


def suite_scenarios() -> list:
    return [scenario_from_config(suite_config(n)) for n in SUITE_CONFIGS]


# verdicts -----------------------------------------------------------------

@dataclass(frozen=True)
class VerdictRecord:
    scenario: str
    signature: str
    slope: float
    cost_base: float
    cost_refined: float
    state_residual: float
    memory_residual: float

    def row(self) -> list:
        return [self.scenario, self.signature, _num(self.slope), _num(self.cost_base),
                _num(self.cost_refined), _num(self.state_residual), _num(self.memory_residual)]


def _num(v) -> str:
    return repr(float(v))


def write_sweep_csv(path, rows, error: str | None = None) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_HEADER)
        for r in rows:
            w.writerow([_num(r.epsilon), _num(r.cost), _num(r.cost_constant), _num(r.state_residual),
                        _num(r.memory_residual), r.cg_iterations, int(r.converged)])
        if error is not None:
            w.writerow(["ERROR", error.replace("\n", " ")] + [""] * (len(SWEEP_HEADER) - 2))


def write_verdicts_csv(path, records) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(VERDICT_HEADER)
        for rec in records:
            w.writerow(rec.row())


def sweep_svg(reports: dict, title: str) -> str:
    series = [Series(label, tuple(1.0 / r.epsilon for r in rep.rows), tuple(r.cost for r in rep.rows))
              for label, rep in reports.items() if all(r.cost > 0 for r in rep.rows)]
    if not series:
        raise InvalidInputError("no positive costs to plot")
    return emit_svg(series, Axes(title=title, xlabel="1/epsilon", ylabel="control cost",
                                 xlog=True, ylog=True))


@dataclass(frozen=True, eq=False)
class ScenarioResult:
    verdict: VerdictRecord
    base: SweepReport
    refined: SweepReport | None


def run_scenario(scenario: Scenario, outdir=None, refine: bool = True) -> ScenarioResult:
    """Penalty sweeps at base and doubled resolution plus artifacts.

    Artifacts (when ``outdir`` is given): ``<name>_sweep.csv``,
    ``<name>_sweep_refined.csv``, ``<name>_trajectory.csv`` (best base
    control) and ``<name>_cost.svg``.  On failure the sweep CSV is written
    with the rows obtained so far and an ``ERROR`` marker row.
    """
    out = Path(outdir) if outdir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    reports = {}
    label = None
    try:
        for label, factor in (("base", 1), ("refined", 2)):
            if factor == 2 and not refine:
                break
            system, u0 = scenario.build(factor)
            logger.info("%s: %s sweep N=%d Nt=%d", scenario.name, label, system.N,
                        system.model.tgrid.Nt)
            reports[label] = penalty_sweep(system, u0, scenario.hum)
            if label == "base" and out is not None:
                from .evolution import step
                traj = step(system.model, system.schedule, u0, reports[label].best.control)
                traj.to_csv(out / f"{scenario.name}_trajectory.csv")
    except Exception as exc:
        if out is not None:
            suffix = "" if label == "base" else "_refined"
            write_sweep_csv(out / f"{scenario.name}_sweep{suffix}.csv", [], error=str(exc))
        raise
    base = reports["base"]
    refined = reports.get("refined")
    best = base.rows[-1]
    verdict = VerdictRecord(
        scenario=scenario.name,
        signature=base.signature.value,
        slope=base.slope,
        cost_base=best.cost,
        cost_refined=refined.rows[-1].cost if refined is not None else float("nan"),
        state_residual=best.state_residual,
        memory_residual=best.memory_residual,
    )
    if out is not None:
        write_sweep_csv(out / f"{scenario.name}_sweep.csv", base.rows)
        if refined is not None:
            write_sweep_csv(out / f"{scenario.name}_sweep_refined.csv", refined.rows)
        try:
            svg = sweep_svg(reports, f"{scenario.name}: cost vs penalty")
        except InvalidInputError:
            svg = None
        if svg is not None:
            (out / f"{scenario.name}_cost.svg").write_text(svg)
    return ScenarioResult(verdict, base, refined)


def run_suite(outdir, scenarios=None) -> list:
    scenarios = suite_scenarios() if scenarios is None else scenarios
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    results = [run_scenario(s, out) for s in scenarios]
    write_verdicts_csv(out / "verdicts.csv", [r.verdict for r in results])
    return results


# K sweep ------------------------------------------------------------------

@dataclass(frozen=True)
class KSweepRow:
    K: float
    regime: str
    cost_constant: float
    cost_constant_refined: float
    state_residual: float

    @property
    def runnable(self) -> bool:
        return self.regime != co.Regime.INADMISSIBLE.value


KSWEEP_HEADER = ["K", "regime", "cost_constant", "cost_constant_refined", "state_residual"]


def k_sweep(base: Scenario, k_values, refine: bool = True) -> list:
    """Cost constant at the smallest penalty against the degeneracy exponent.

    The base profile's first degeneracy point fixes x0; K >= 2 rows are
    recorded as inadmissible without running.
    """
    x0 = base.profile.points[0].x0
    eps = base.hum.epsilons[-1]
    rows = []
    for K in k_values:
        regime = co.classify_exponent(K)
        if regime is co.Regime.INADMISSIBLE:
            rows.append(KSweepRow(float(K), regime.value, float("nan"), float("nan"), float("nan")))
            continue
        sc = base.with_changes(profile=co.power_profile(x0, K))
        system, u0 = sc.build(1)
        sol = solve_penalized(system, u0, eps, sc.hum)
        ref = float("nan")
        if refine:
            rsys, ru0 = sc.build(2)
            ref = solve_penalized(rsys, ru0, eps, sc.hum).cost_constant
        rows.append(KSweepRow(float(K), regime.value, sol.cost_constant, ref, sol.state_residual))
    return rows


def write_ksweep_csv(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(KSWEEP_HEADER)
        for r in rows:
            w.writerow([_num(r.K), r.regime, _num(r.cost_constant), _num(r.cost_constant_refined),
                        _num(r.state_residual)])


# form comparison ------------------------------------------------------------

@dataclass(frozen=True)
class FormRow:
    form: int
    boundary: tuple
    signature: str
    slope: float
    cost_constant: float
    state_residual: float
    memory_residual: float


@dataclass(frozen=True, eq=False)
class FormComparison:
    rows: tuple
    operator_difference: float
    reports: tuple = field(repr=False, default=())


FORM_HEADER = ["form", "boundary_left", "boundary_right", "signature", "slope", "cost_constant",
               "state_residual", "memory_residual"]


def form_comparison(scenario: Scenario, profile: co.DegeneracyProfile | None = None) -> FormComparison:
    """Run the same geometry in non-divergence and divergence form.

    ``operator_difference`` is the relative Frobenius distance between the
    two unit operators (zero when a is constant).
    """
    if profile is not None:
        scenario = scenario.with_changes(profile=profile)
    rows, reports, ops = [], [], []
    for form in (NON_DIVERGENCE, DIVERGENCE):
        sc = scenario.with_changes(form=form)
        system, u0 = sc.build(1)
        rep = penalty_sweep(system, u0, sc.hum)
        best = rep.rows[-1]
        ops.append(system.model.factory.unit.to_dense())
        rows.append(FormRow(form, system.model.factory.boundary, rep.signature.value, rep.slope,
                            best.cost_constant, best.state_residual, best.memory_residual))
        reports.append(rep)
    diff = float(np.linalg.norm(ops[0] - ops[1]) / np.linalg.norm(ops[1]))
    return FormComparison(tuple(rows), diff, tuple(reports))


def write_forms_csv(path, comparison: FormComparison) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(FORM_HEADER)
        for r in comparison.rows:
            w.writerow([r.form, r.boundary[0], r.boundary[1], r.signature, _num(r.slope),
                        _num(r.cost_constant), _num(r.state_residual), _num(r.memory_residual)])


def sweep_rows_monotone(rows) -> bool:
    costs = [r.cost for r in rows]
    return all(b >= a for a, b in zip(costs, costs[1:]))


__all__ = [
    "Scenario", "VerdictRecord", "ScenarioResult", "KSweepRow", "FormComparison", "SweepRow",
    "Signature", "parse_u0_spec", "scenario_from_config", "suite_config", "suite_scenarios",
    "run_scenario", "run_suite", "k_sweep", "form_comparison", "emit_svg", "SUITE_CONFIGS",
]
