"""``degenctl`` command-line entry point.

Exit status: 0 success, 1 computational failure (including failed
verification checks), 2 configuration error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import experiments as ex
from .config import RunConfig, dump_config, parse_config
from .errors import ConfigError, DegenctlError, InvalidInputError
from .evolution import step
from .hum import penalty_sweep, solve_penalized
from .plotting import Axes, Series, emit_svg

SUBCOMMANDS = ("simulate", "hum", "sweep", "ksweep", "compare-forms", "verify", "suite")
DEFAULT_SCENARIO = "S4_moving_memory"

log = logging.getLogger("degenctl")


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="degenctl", description=__doc__.splitlines()[0])
    p.add_argument("subcommand", choices=SUBCOMMANDS)
    p.add_argument("--config", type=Path, help="JSON run configuration")
    p.add_argument("--out", type=Path, help="output directory (overrides output.directory)")
    p.add_argument("--seed", type=int, help="random seed (overrides output.seed)")
    p.add_argument("--dump-config", action="store_true",
                   help="print the canonical configuration with defaults and exit")
    p.add_argument("-q", "--quiet", action="store_true", help="only warnings on stderr")
    return p


def _load(args) -> RunConfig:
    if args.config is not None:
        cfg = parse_config(args.config)
    elif args.subcommand in ("verify", "suite"):
        cfg = ex.suite_config(DEFAULT_SCENARIO)
    else:
        raise ConfigError(f"'{args.subcommand}' requires --config")
    out = cfg.output.model_copy(update={
        k: v for k, v in (("directory", str(args.out) if args.out else None), ("seed", args.seed))
        if v is not None})
    if out.seed < 0:
        raise ConfigError("seed must be non-negative")
    return cfg.model_copy(update={"output": out})


def _outdir(cfg) -> Path:
    path = Path(cfg.output.directory)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _build(cfg):
    try:
        scenario = ex.scenario_from_config(cfg)
        system, u0 = scenario.build(1)
    except InvalidInputError as exc:
        raise ConfigError(str(exc)) from exc
    return scenario, system, u0


def cmd_simulate(cfg) -> int:
    scenario, system, u0 = _build(cfg)
    traj = step(system.model, system.schedule, u0)
    out = _outdir(cfg)
    traj.to_csv(out / f"{cfg.name}_trajectory.csv")
    target = system.target_of(traj.states)
    metric = system.model.metric
    print(f"simulate {cfg.name}: |u0|={metric.norm(u0):.6e} |u(T)|={metric.norm(target.terminal):.6e} "
          f"|memory|={metric.norm(target.memory):.6e}")
    return 0


def cmd_hum(cfg) -> int:
    scenario, system, u0 = _build(cfg)
    eps = scenario.hum.epsilons[-1]
    sol = solve_penalized(system, u0, eps, scenario.hum)
    out = _outdir(cfg)
    traj = step(system.model, system.schedule, u0, sol.control)
    traj.to_csv(out / f"{cfg.name}_hum_trajectory.csv")
    print(f"hum {cfg.name}: eps={eps:.1e} cost={sol.cost:.6e} cost_constant={sol.cost_constant:.6e} "
          f"state_residual={sol.state_residual:.3e} memory_residual={sol.memory_residual:.3e} "
          f"cg_iterations={sol.cg_iterations} converged={sol.converged}")
    return 0 if sol.converged else 1


def cmd_sweep(cfg) -> int:
    scenario, system, u0 = _build(cfg)
    rep = penalty_sweep(system, u0, scenario.hum)
    out = _outdir(cfg)
    ex.write_sweep_csv(out / f"{cfg.name}_sweep.csv", rep.rows)
    if all(r.cost > 0 for r in rep.rows):
        (out / f"{cfg.name}_cost.svg").write_text(ex.sweep_svg({"base": rep}, f"{cfg.name}: cost vs penalty"))
    for r in rep.rows:
        print(f"  eps={r.epsilon:.1e} cost={r.cost:.6e} state_residual={r.state_residual:.3e} "
              f"memory_residual={r.memory_residual:.3e} iters={r.cg_iterations}")
    print(f"sweep {cfg.name}: slope={rep.slope:.4f} verdict={rep.signature.value}")
    return 0


def cmd_ksweep(cfg) -> int:
    scenario, _, _ = _build(cfg)
    rows = ex.k_sweep(scenario, cfg.experiments.k_values, refine=cfg.experiments.refine)
    out = _outdir(cfg)
    ex.write_ksweep_csv(out / f"{cfg.name}_ksweep.csv", rows)
    ok = [r for r in rows if r.runnable]
    if ok and all(r.cost_constant > 0 for r in ok):
        svg = emit_svg([Series("base", tuple(r.K for r in ok), tuple(r.cost_constant for r in ok))],
                       Axes(title=f"{cfg.name}: cost constant vs K", xlabel="K", ylabel="cost constant",
                            ylog=True))
        (out / f"{cfg.name}_ksweep.svg").write_text(svg)
    for r in rows:
        print(f"  K={r.K:g} {r.regime} cost_constant={r.cost_constant:.6e} "
              f"refined={r.cost_constant_refined:.6e}")
    return 0


def cmd_compare_forms(cfg) -> int:
    scenario, _, _ = _build(cfg)
    cmp_ = ex.form_comparison(scenario)
    ex.write_forms_csv(_outdir(cfg) / f"{cfg.name}_forms.csv", cmp_)
    for r in cmp_.rows:
        print(f"  form i={r.form} boundary={r.boundary} verdict={r.signature} "
              f"cost_constant={r.cost_constant:.6e} state_residual={r.state_residual:.3e}")
    print(f"operator difference (relative Frobenius) = {cmp_.operator_difference:.3e}")
    return 0


def cmd_verify(cfg) -> int:
    from .verification import _upper, run_battery

    checks = run_battery(cfg.output.seed)
    scenario, system, u0 = _build(cfg)
    eps = scenario.hum.epsilons[-1]
    c1 = solve_penalized(system, u0, eps, scenario.hum).cost_constant
    c2 = solve_penalized(system, 2 * u0, eps, scenario.hum).cost_constant
    checks.append(_upper("cost-constant scaling invariance (u0 vs 2 u0)", abs(c1 - c2) / c1 if c1 else abs(c2), 1e-8))
    for c in checks:
        print(c.line())
    failed = sum(not c.passed for c in checks)
    print(f"verify: {len(checks) - failed}/{len(checks)} checks passed")
    return 0 if failed == 0 else 1


def cmd_suite(cfg) -> int:
    out = _outdir(cfg)
    results = ex.run_suite(out)
    for r in results:
        v = r.verdict
        print(f"  {v.scenario}: {v.signature} slope={v.slope:.4f} cost={v.cost_base:.6e} "
              f"refined={v.cost_refined:.6e} state_residual={v.state_residual:.3e} "
              f"memory_residual={v.memory_residual:.3e}")
    return 0


COMMANDS = {
    "simulate": cmd_simulate, "hum": cmd_hum, "sweep": cmd_sweep, "ksweep": cmd_ksweep,
    "compare-forms": cmd_compare_forms, "verify": cmd_verify, "suite": cmd_suite,
}


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        cfg = _load(args)
        if args.dump_config:
            sys.stdout.write(dump_config(cfg))
            return 0
        return COMMANDS[args.subcommand](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DegenctlError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - any crash is a computational failure
        log.exception("unexpected failure")
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
