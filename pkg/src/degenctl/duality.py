"""Control-to-target map L and its adjoint L*.

``L f = (u(T), sum_k w_k M~(T - t_k) u^k)`` for the trajectory started from
zero.  ``L*`` is the exact adjoint of the discrete scheme with respect to the
control metric ``dt * w_j`` on the support and the target metric
``<., .>_H + rho <., .>_H``; it is obtained by running the transposed
recurrence backward in time, not by discretizing a continuous adjoint.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import cached_property

import numpy as np

from .coefficients import MemoryKernel
from .errors import InvalidInputError
from .evolution import ControlSchedule, ForwardModel, memory_weights


@dataclass(frozen=True, eq=False)
class TargetVector:
    terminal: np.ndarray
    memory: np.ndarray

    @classmethod
    def zeros(cls, n):
        return cls(np.zeros(n), np.zeros(n))

    @classmethod
    def from_array(cls, arr):
        n = len(arr) // 2
        return cls(np.array(arr[:n]), np.array(arr[n:]))

    def to_array(self) -> np.ndarray:
        return np.concatenate((self.terminal, self.memory))

    def __add__(self, other):
        return TargetVector(self.terminal + other.terminal, self.memory + other.memory)

    def __sub__(self, other):
        return TargetVector(self.terminal - other.terminal, self.memory - other.memory)

    def __mul__(self, c):
        return TargetVector(c * self.terminal, c * self.memory)

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class ControlSystem:
    """A forward model, a control schedule and a memory target."""

    model: ForwardModel
    schedule: ControlSchedule
    target_kernel: MemoryKernel
    rho: float = 1.0

    def __post_init__(self):
        if self.rho < 0:
            raise InvalidInputError(f"memory block weight must be >= 0, got {self.rho}")
        shape = (self.model.tgrid.Nt + 1, self.model.N)
        if self.schedule.masks.shape != shape:
            raise InvalidInputError("schedule does not match the discretization")

    def with_rho(self, rho: float) -> "ControlSystem":
        return self if rho == self.rho else replace(self, rho=float(rho))

    @property
    def N(self) -> int:
        return self.model.N

    @property
    def shape(self) -> tuple:
        return (self.model.tgrid.Nt + 1, self.model.N)

    @property
    def state_weights(self) -> np.ndarray:
        return self.model.metric.weights

    @cached_property
    def memory_weights(self) -> np.ndarray:
        return memory_weights(self.target_kernel, self.model.tgrid)

    @cached_property
    def control_weights(self) -> np.ndarray:
        """``dt * w_j`` on the support, 0 elsewhere."""
        return self.model.tgrid.dt * self.schedule.masks * self.state_weights[None, :]

    @cached_property
    def target_weights(self) -> np.ndarray:
        w = self.state_weights
        return np.concatenate((w, self.rho * w))

    # inner products -----------------------------------------------------
    def target_inner(self, y: TargetVector, z: TargetVector) -> float:
        w = self.state_weights
        return float(np.sum(w * y.terminal * z.terminal) + self.rho * np.sum(w * y.memory * z.memory))

    def target_norm(self, z: TargetVector) -> float:
        return float(np.sqrt(self.target_inner(z, z)))

    def control_inner(self, f, h) -> float:
        return float(np.sum(self.control_weights * f * h))

    def control_norm(self, f) -> float:
        return float(np.sqrt(self.control_inner(f, f)))

    def project(self, f) -> np.ndarray:
        return np.where(self.schedule.masks, f, 0.0)

    # maps ---------------------------------------------------------------
    def target_of(self, states) -> TargetVector:
        return TargetVector(states[-1].copy(), self.memory_weights @ states)

    def apply_L(self, f) -> TargetVector:
        f = np.asarray(f, dtype=float)
        if f.shape != self.shape:
            raise InvalidInputError(f"control must have shape {self.shape}, got {f.shape}")
        states = self.model.run(np.zeros(self.N), self.project(f))
        return self.target_of(states)

    def apply_Lstar(self, z: TargetVector) -> np.ndarray:
        w = self.state_weights
        g = np.outer(self.memory_weights, self.rho * w * z.memory)
        g[-1] += w * z.terminal
        p = self.model.run_adjoint(g)
        grad = self.model.injection_adjoint(p)
        # divide by dt * w_j on the support; off-support entries stay zero
        return np.where(self.schedule.masks, grad / (self.model.tgrid.dt * w[None, :]), 0.0)

    def free_drift(self, u0) -> TargetVector:
        return self.target_of(self.model.run(u0))

    def dense_L(self):
        """Dense matrix of L on the active control entries (column-by-column).

        Returns ``(matrix, flat_indices)``; row order is ``(terminal, memory)``.
        """
        idx = np.flatnonzero(self.schedule.masks)
        cols = np.empty((2 * self.N, len(idx)))
        e = np.zeros(self.shape)
        flat = e.reshape(-1)
        for c, i in enumerate(idx):
            flat[i] = 1.0
            cols[:, c] = self.apply_L(e).to_array()
            flat[i] = 0.0
        return cols, idx


def apply_L(system: ControlSystem, f) -> TargetVector:
    return system.apply_L(f)


def apply_Lstar(system: ControlSystem, z: TargetVector) -> np.ndarray:
    return system.apply_Lstar(z)


def free_drift(system: ControlSystem, u0) -> TargetVector:
    return system.free_drift(u0)


def adjoint_consistency_test(system: ControlSystem, trials: int = 20, rng=None,
                             control_weights=None) -> float:
    """Largest relative defect of ``<L f, z> = <f, L* z>`` over random pairs.

    ``control_weights`` replaces the control metric on the right-hand side
    only, which should break the identity (negative control).
    """
    if trials < 1:
        raise InvalidInputError("trials must be >= 1")
    rng = np.random.default_rng(rng)
    cw = system.control_weights if control_weights is None else np.asarray(control_weights)
    worst = 0.0
    for _ in range(trials):
        f = system.project(rng.standard_normal(system.shape))
        z = TargetVector(rng.standard_normal(system.N), rng.standard_normal(system.N))
        Lf = system.apply_L(f)
        Lsz = system.apply_Lstar(z)
        lhs = system.target_inner(Lf, z)
        rhs = float(np.sum(cw * f * Lsz))
        scale = (system.target_norm(Lf) * system.target_norm(z)
                 + system.control_norm(f) * system.control_norm(Lsz))
        if scale > 0:
            worst = max(worst, abs(lhs - rhs) / scale)
    return float(worst)
