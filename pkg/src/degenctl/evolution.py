"""Time stepping of the controlled problem with Volterra memory.

Solves ``u_t - A_i(t) u + int_0^t M(t, s) u(s) ds = f chi_{omega(t)}`` with a
θ-scheme in time (θ = 1 implicit Euler, θ = 0.5 Crank-Nicolson on the A
term) and trapezoidal quadrature of the memory integral whose newest
endpoint is treated implicitly.  The whole history is kept, so a run costs
O(Nt^2 N) operations.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np

from . import kernels
from .coefficients import MemoryKernel
from .discretization import DiscreteOperatorFactory, SpatialGrid
from .errors import GeometryError, InvalidInputError, ResolutionError, SolverError


@dataclass(frozen=True, eq=False)
class TimeGrid:
    T: float
    Nt: int

    def __post_init__(self):
        if self.Nt < 2:
            raise InvalidInputError(f"Nt must be >= 2, got {self.Nt}")
        if not self.T > 0:
            raise InvalidInputError(f"horizon T must be positive, got {self.T}")

    @property
    def dt(self) -> float:
        return self.T / self.Nt

    @cached_property
    def nodes(self) -> np.ndarray:
        t = np.arange(self.Nt + 1) * self.dt
        t[-1] = self.T
        return t

    @cached_property
    def trapezoid_weights(self) -> np.ndarray:
        w = np.full(self.Nt + 1, self.dt)
        w[0] = w[-1] = 0.5 * self.dt
        return w


@dataclass(frozen=True)
class FixedSupport:
    left: float
    right: float


@dataclass(frozen=True)
class MovingSupport:
    """Interval ``(c(t) - delta, c(t) + delta)``.

    Without ``center`` the built-in sweep is used: the center travels
    linearly from the left to the right end, with the support edges inset
    to the outermost cell faces so it never touches {0, 1} but still holds
    the first and last node at the ends of the sweep.
    """

    delta: float
    center: Callable | None = field(default=None, compare=False)


@dataclass(frozen=True, eq=False)
class ControlSchedule:
    kind: object
    masks: np.ndarray  # (Nt+1, N) bool
    left: np.ndarray
    right: np.ndarray


def sweep_center(delta: float, grid: SpatialGrid, T: float):
    lo = delta + float(grid.faces[0])
    hi = 1.0 - delta - (1.0 - float(grid.faces[-1]))
    if hi < lo:
        raise GeometryError(
            f"sweep half-width delta={delta} leaves no room for the center path inside (0, 1)")
    return lambda t: lo + (hi - lo) * np.asarray(t, dtype=float) / T


def rasterize_schedule(kind, grid: SpatialGrid, tgrid: TimeGrid) -> ControlSchedule:
    t = tgrid.nodes
    if isinstance(kind, FixedSupport):
        left = np.full_like(t, kind.left)
        right = np.full_like(t, kind.right)
        if not (0 < kind.left < kind.right < 1):
            raise GeometryError(
                f"fixed support ({kind.left}, {kind.right}) must satisfy 0 < l < r < 1")
    elif isinstance(kind, MovingSupport):
        if not kind.delta > 0:
            raise GeometryError(f"support half-width must be positive, got {kind.delta}")
        center = kind.center or sweep_center(kind.delta, grid, tgrid.T)
        c = np.broadcast_to(np.asarray(center(t), dtype=float), t.shape)
        left, right = c - kind.delta, c + kind.delta
        bad = np.nonzero((left <= 0) | (right >= 1))[0]
        if len(bad):
            k = int(bad[0])
            raise GeometryError(
                f"moving support ({left[k]:.4g}, {right[k]:.4g}) at t={t[k]:.4g} is not "
                f"compactly contained in (0, 1)")
    else:
        raise InvalidInputError(f"unknown control support {kind!r}")
    x = grid.nodes
    masks = (x[None, :] > left[:, None]) & (x[None, :] < right[:, None])
    empty = np.nonzero(~masks.any(axis=1))[0]
    if len(empty):
        k = int(empty[0])
        raise ResolutionError(
            f"control support ({left[k]:.4g}, {right[k]:.4g}) at t={t[k]:.4g} contains no grid "
            f"node; increase N or the support width")
    return ControlSchedule(kind, masks, left, right)


def coverage_check(schedule: ControlSchedule) -> bool:
    """True when every node is inside the support at some time node."""
    return bool(np.all(schedule.masks.any(axis=0)))


@dataclass(frozen=True, eq=False)
class ForwardModel:
    """Discrete evolution operator for one form/profile/b/kernel/time grid."""

    factory: DiscreteOperatorFactory
    kernel: MemoryKernel
    tgrid: TimeGrid
    theta: float = 1.0

    def __post_init__(self):
        if self.theta not in (1.0, 0.5):
            raise InvalidInputError(f"theta must be 1.0 or 0.5, got {self.theta}")
        if abs(self.tgrid.T - self.factory.T) > 1e-14 * self.tgrid.T:
            raise InvalidInputError("time grid and operator factory disagree on T")
        self.factory.b.check(self.tgrid.nodes)

    @property
    def grid(self) -> SpatialGrid:
        return self.factory.grid

    @property
    def N(self) -> int:
        return self.factory.grid.N

    @property
    def metric(self):
        return self.factory.metric

    @cached_property
    def bvals(self) -> np.ndarray:
        return np.asarray(self.factory.b(self.tgrid.nodes), dtype=float)

    @cached_property
    def memory_matrix(self) -> np.ndarray:
        n = self.tgrid.Nt + 1
        if self.kernel.is_zero:
            return np.zeros((n, n))
        return self.kernel.matrix(self.tgrid.nodes)

    def injection(self, forcing: np.ndarray) -> np.ndarray:
        """Per-step right-hand side contribution ``dt (θ F^{k+1} + (1-θ) F^k)``."""
        dt, th = self.tgrid.dt, self.theta
        inj = np.zeros_like(forcing)
        inj[1:] = dt * th * forcing[1:]
        if th != 1.0:
            inj[1:] += dt * (1.0 - th) * forcing[:-1]
        return inj

    def injection_adjoint(self, p: np.ndarray) -> np.ndarray:
        dt, th = self.tgrid.dt, self.theta
        out = np.zeros_like(p)
        out[1:] = dt * th * p[1:]
        if th != 1.0:
            out[:-1] += dt * (1.0 - th) * p[1:]
        return out

    def _check_shape(self, arr, name):
        shape = (self.tgrid.Nt + 1, self.N)
        if arr.shape != shape:
            raise InvalidInputError(f"{name} must have shape {shape}, got {arr.shape}")

    def run(self, u0, forcing=None) -> np.ndarray:
        """States ``(Nt+1, N)`` for initial datum ``u0`` and unmasked ``forcing``."""
        u0 = np.asarray(u0, dtype=float)
        if u0.shape != (self.N,):
            raise InvalidInputError(f"u0 must have length {self.N}, got {u0.shape}")
        if forcing is None:
            inj = np.zeros((self.tgrid.Nt + 1, self.N))
        else:
            forcing = np.asarray(forcing, dtype=float)
            self._check_shape(forcing, "forcing")
            inj = self.injection(forcing)
        unit = self.factory.unit
        try:
            return kernels.forward_sweep(unit.lower, unit.diag, unit.upper, self.bvals,
                                         self.theta, self.tgrid.dt, self.memory_matrix, u0, inj,
                                         not self.kernel.is_zero)
        except (ZeroDivisionError, np.linalg.LinAlgError) as exc:
            raise SolverError(f"singular step matrix in forward sweep: {exc}") from exc

    def run_adjoint(self, g) -> np.ndarray:
        """Solve the transposed recurrence for the state sensitivities ``g``."""
        g = np.asarray(g, dtype=float)
        self._check_shape(g, "g")
        unit = self.factory.unit
        try:
            return kernels.adjoint_sweep(unit.lower, unit.diag, unit.upper, self.bvals,
                                         self.theta, self.tgrid.dt, self.memory_matrix, g,
                                         not self.kernel.is_zero)
        except (ZeroDivisionError, np.linalg.LinAlgError) as exc:
            raise SolverError(f"singular step matrix in adjoint sweep: {exc}") from exc


@dataclass(frozen=True, eq=False)
class Trajectory:
    times: np.ndarray
    nodes: np.ndarray
    states: np.ndarray
    controls: np.ndarray
    masks: np.ndarray

    def to_csv(self, path) -> None:
        write_trajectory_csv(path, self)


def step(model: ForwardModel, schedule: ControlSchedule, u0, f=None) -> Trajectory:
    """Simulate with control ``f`` (shape ``(Nt+1, N)``) projected on the schedule masks."""
    shape = (model.tgrid.Nt + 1, model.N)
    if schedule.masks.shape != shape:
        raise InvalidInputError(f"schedule masks have shape {schedule.masks.shape}, expected {shape}")
    if f is None:
        controls = np.zeros(shape)
    else:
        f = np.asarray(f, dtype=float)
        model._check_shape(f, "control")
        controls = np.where(schedule.masks, f, 0.0)
    states = model.run(u0, controls)
    return Trajectory(model.tgrid.nodes, model.grid.nodes, states, controls, schedule.masks)


def memory_accumulator(kernel_tilde: MemoryKernel, tgrid: TimeGrid, states) -> np.ndarray:
    """Trapezoidal ``sum_k w_k M~(T - t_k) u^k`` evaluated node by node."""
    states = np.asarray(states, dtype=float)
    if states.shape[0] != tgrid.Nt + 1:
        raise InvalidInputError("trajectory length does not match the time grid")
    weights = memory_weights(kernel_tilde, tgrid)
    return weights @ states


def memory_weights(kernel_tilde: MemoryKernel, tgrid: TimeGrid) -> np.ndarray:
    t = tgrid.nodes
    return tgrid.trapezoid_weights * np.asarray(kernel_tilde.lag(tgrid.T - t), dtype=float)


def write_trajectory_csv(path, traj: Trajectory) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "x", "u", "f", "in_omega"])
        for k, t in enumerate(traj.times):
            for j, x in enumerate(traj.nodes):
                w.writerow([repr(float(t)), repr(float(x)), repr(float(traj.states[k, j])),
                            repr(float(traj.controls[k, j])), int(traj.masks[k, j])])
