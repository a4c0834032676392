"""Penalized HUM controls.

For a penalty ``eps > 0`` the control is ``f = L* lam`` where ``lam`` solves
``(L L* + eps I) lam = -d`` in the target inner product and ``d`` is the
uncontrolled (free-drift) target.  The Gram system is solved matrix-free by
conjugate gradients; :func:`solve_dense_oracle` reaches the same control
through an SVD of the assembled, metric-scaled L and never calls L*.

Cost growth as ``eps -> 0`` is the numerical signature of a missing
observability inequality; :func:`penalty_sweep` fits it.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field

import numpy as np

from .duality import ControlSystem, TargetVector
from .errors import CGBreakdownError, InvalidInputError
from .evolution import step

logger = logging.getLogger(__name__)

DEFAULT_EPSILONS = (1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8)


class TargetMode(enum.Enum):
    CLASSICAL_ONLY = "classical_only"
    MEMORY_TYPE = "memory_type"


class Signature(enum.Enum):
    BOUNDED_COST = "BoundedCost"
    COST_BLOWUP = "CostBlowup"
    INDETERMINATE = "Indeterminate"


@dataclass(frozen=True)
class HumConfig:
    epsilons: tuple = DEFAULT_EPSILONS
    cg_tol: float = 1e-10
    cg_max_iter: int = 5000
    rho: float = 1.0
    target_mode: TargetMode = TargetMode.MEMORY_TYPE
    bounded_slope: float = 0.05
    blowup_slope: float = 0.25

    def __post_init__(self):
        eps = tuple(float(e) for e in self.epsilons)
        object.__setattr__(self, "epsilons", eps)
        if not eps or any(e <= 0 for e in eps):
            raise InvalidInputError("penalties must be strictly positive")
        if any(b >= a for a, b in zip(eps, eps[1:])):
            raise InvalidInputError("penalties must be strictly decreasing")
        if not 0 < self.cg_tol < 1:
            raise InvalidInputError(f"cg_tol must lie in (0, 1), got {self.cg_tol}")
        if self.cg_max_iter < 1:
            raise InvalidInputError("cg_max_iter must be >= 1")
        if self.rho < 0:
            raise InvalidInputError("rho must be >= 0")
        if not isinstance(self.target_mode, TargetMode):
            object.__setattr__(self, "target_mode", TargetMode(self.target_mode))

    @property
    def effective_rho(self) -> float:
        return 0.0 if self.target_mode is TargetMode.CLASSICAL_ONLY else self.rho


@dataclass(frozen=True, eq=False)
class HumSolution:
    control: np.ndarray
    cost: float
    cost_constant: float
    state_residual: float
    memory_residual: float
    cg_iterations: int
    converged: bool
    epsilon: float
    multiplier: np.ndarray = field(repr=False, default=None)
    states: np.ndarray = field(repr=False, default=None)


def _finish(system: ControlSystem, u0, f, eps, iters, converged, lam) -> HumSolution:
    """Re-simulate with the returned control and collect the diagnostics."""
    traj = step(system.model, system.schedule, u0, f)
    metric = system.model.metric
    target = system.target_of(traj.states)
    cost = system.control_norm(traj.controls)
    u0_norm = metric.norm(u0)
    return HumSolution(
        control=traj.controls,
        cost=cost,
        cost_constant=cost / u0_norm if u0_norm > 0 else 0.0,
        state_residual=metric.norm(target.terminal),
        memory_residual=metric.norm(target.memory),
        cg_iterations=iters,
        converged=converged,
        epsilon=eps,
        multiplier=lam,
        states=traj.states,
    )


def solve_penalized(system: ControlSystem, u0, eps: float, config: HumConfig | None = None,
                    initial=None) -> HumSolution:
    """Penalized HUM control by CG on ``L L* + eps I``.

    ``initial`` is an optional starting multiplier (stacked target array),
    used by the sweep to warm-start from the previous penalty.
    """
    config = config or HumConfig()
    if not eps > 0:
        raise InvalidInputError(f"penalty must be positive, got {eps}")
    system = system.with_rho(config.effective_rho)
    u0 = np.asarray(u0, dtype=float)
    n = system.N
    # with rho = 0 the memory block is outside the problem: keep it at zero
    active = np.ones(2 * n)
    if system.rho == 0:
        active[n:] = 0.0
    tw = system.target_weights

    def gram(v):
        y = system.apply_L(system.apply_Lstar(TargetVector.from_array(v))).to_array()
        return active * (y + eps * v)

    def dot(a, b):
        return float(np.sum(tw * a * b))

    rhs = -active * system.free_drift(u0).to_array()
    rhs_norm = np.sqrt(dot(rhs, rhs))
    if rhs_norm == 0.0:
        return _finish(system, u0, np.zeros(system.shape), eps, 0, True, np.zeros(2 * n))

    x = np.zeros(2 * n) if initial is None else active * np.asarray(initial, dtype=float)
    r = rhs - gram(x) if initial is not None else rhs.copy()
    p = r.copy()
    rr = dot(r, r)
    iters = 0
    converged = np.sqrt(rr) <= config.cg_tol * rhs_norm
    while not converged and iters < config.cg_max_iter:
        Ap = gram(p)
        curv = dot(p, Ap)
        if not curv > 0:
            raise CGBreakdownError(iters, curv, np.sqrt(rr) / rhs_norm)
        alpha = rr / curv
        x += alpha * p
        r -= alpha * Ap
        rr_new = dot(r, r)
        iters += 1
        converged = np.sqrt(rr_new) <= config.cg_tol * rhs_norm
        p = r + (rr_new / rr) * p
        rr = rr_new
    if not converged:
        logger.warning("CG hit the iteration cap (%d) at eps=%g, relative residual %.3e",
                       config.cg_max_iter, eps, np.sqrt(rr) / rhs_norm)
    f = system.apply_Lstar(TargetVector.from_array(x))
    return _finish(system, u0, f, eps, iters, bool(converged), x)


DENSE_LIMIT = 4096


@dataclass(frozen=True, eq=False)
class DenseOracleSolution(HumSolution):
    normal_residual: float = 0.0


def solve_dense_oracle(system: ControlSystem, u0, eps: float,
                       config: HumConfig | None = None) -> DenseOracleSolution:
    """Brute-force penalized HUM via SVD of the metric-scaled dense L."""
    config = config or HumConfig()
    system = system.with_rho(config.effective_rho)
    size = system.N * system.model.tgrid.Nt
    if size > DENSE_LIMIT:
        raise InvalidInputError(f"dense oracle limited to N*Nt <= {DENSE_LIMIT}, got {size}")
    if not eps > 0:
        raise InvalidInputError(f"penalty must be positive, got {eps}")
    u0 = np.asarray(u0, dtype=float)
    n = system.N
    Lmat, idx = system.dense_L()
    rows = slice(0, 2 * n) if system.rho > 0 else slice(0, n)
    zw = np.sqrt(system.target_weights[rows])
    uw = np.sqrt(system.control_weights.reshape(-1)[idx])
    A = zw[:, None] * Lmat[rows] / uw[None, :]
    d = system.free_drift(u0).to_array()[rows]
    dt_ = zw * d
    U, s, Vt = np.linalg.svd(A, full_matrices=True)
    coef = U.T @ dt_
    k = len(s)
    f_scaled = -Vt[:k].T @ (s / (s**2 + eps) * coef[:k])
    s_full = np.zeros(U.shape[0])
    s_full[:k] = s
    lam_scaled = -U @ (coef / (s_full**2 + eps))
    normal = A @ (A.T @ lam_scaled) + eps * lam_scaled + dt_
    scale = np.linalg.norm(dt_)
    normal_residual = float(np.linalg.norm(normal) / scale) if scale > 0 else 0.0
    f = np.zeros(system.shape)
    f.reshape(-1)[idx] = f_scaled / uw
    lam = np.zeros(2 * n)
    lam[rows] = lam_scaled / zw
    base = _finish(system, u0, f, eps, 0, True, lam)
    return DenseOracleSolution(**base.__dict__, normal_residual=normal_residual)


@dataclass(frozen=True)
class SweepRow:
    epsilon: float
    cost: float
    cost_constant: float
    state_residual: float
    memory_residual: float
    cg_iterations: int
    converged: bool


@dataclass(frozen=True, eq=False)
class SweepReport:
    rows: tuple
    slope: float
    signature: Signature
    solutions: tuple = field(repr=False, default=())

    @property
    def best(self) -> HumSolution:
        return self.solutions[-1]


def fit_slope(epsilons, costs) -> float:
    """Least-squares slope of log(cost) against log(1/eps)."""
    x = np.log(1.0 / np.asarray(epsilons, dtype=float))
    y = np.log(np.asarray(costs, dtype=float))
    return float(np.polyfit(x, y, 1)[0])


def classify_slope(slope: float, config: HumConfig) -> Signature:
    if slope <= config.bounded_slope:
        return Signature.BOUNDED_COST
    if slope >= config.blowup_slope:
        return Signature.COST_BLOWUP
    return Signature.INDETERMINATE


def penalty_sweep(system: ControlSystem, u0, config: HumConfig | None = None,
                  warm_start: bool = True) -> SweepReport:
    config = config or HumConfig()
    if len(config.epsilons) < 3:
        raise InvalidInputError("a penalty sweep needs at least 3 penalties")
    rows, sols = [], []
    lam = None
    for eps in config.epsilons:
        sol = solve_penalized(system, u0, eps, config, initial=lam if warm_start else None)
        lam = sol.multiplier
        logger.info("eps=%.1e cost=%.6e state_res=%.3e memory_res=%.3e iters=%d%s", eps,
                    sol.cost, sol.state_residual, sol.memory_residual, sol.cg_iterations,
                    "" if sol.converged else " (not converged)")
        rows.append(SweepRow(eps, sol.cost, sol.cost_constant, sol.state_residual,
                             sol.memory_residual, sol.cg_iterations, sol.converged))
        sols.append(sol)
    tail = rows[-3:]
    costs = [r.cost for r in tail]
    if min(costs) <= 0:
        slope = 0.0
    else:
        slope = fit_slope([r.epsilon for r in tail], costs)
    return SweepReport(tuple(rows), slope, classify_slope(slope, config), tuple(sols))


@dataclass(frozen=True, eq=False)
class ObservabilityProbe:
    constant: float
    best_trial: int
    best_u0: np.ndarray = field(repr=False)
    values: tuple = ()


def observability_constant_probe(system: ControlSystem, trials: int = 8, eps: float = 1e-8,
                                 config: HumConfig | None = None, rng=None,
                                 candidates=None) -> ObservabilityProbe:
    """Lower estimate of the control-cost constant over unit-norm initial data.

    Random data are drawn from ``rng``; ``candidates`` (a list of grid
    functions) may be given instead.  Each datum is normalised in H_i.
    """
    if trials < 1:
        raise InvalidInputError("trials must be >= 1")
    rng = np.random.default_rng(rng)
    metric = system.model.metric
    if candidates is None:
        candidates = [rng.standard_normal(system.N) for _ in range(trials)]
    values = []
    for u0 in candidates:
        u0 = np.asarray(u0, dtype=float)
        u0 = u0 / metric.norm(u0)
        values.append(solve_penalized(system, u0, eps, config).cost_constant)
    best = int(np.argmax(values))
    return ObservabilityProbe(float(values[best]), best,
                              np.asarray(candidates[best]) / metric.norm(candidates[best]),
                              tuple(values))
