"""Coefficients of the degenerate problem: a(x), b(t) and the memory kernels.

The diffusion coefficient a(x) vanishes at one or both endpoints of (0, 1).
Each degeneracy point carries an exponent K that controls the admissibility
test ``(x - x0) a'(x) <= K a(x)`` and the weak/strong classification used to
pick boundary conditions downstream.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import InadmissibleExponentError, InvalidInputError


class Regime(enum.Enum):
    WEAK = "WeaklyDegenerate"
    STRONG = "StronglyDegenerate"
    INADMISSIBLE = "Inadmissible"


def classify_exponent(K: float) -> Regime:
    """Classify a degeneracy exponent.

    ``[0, 1)`` is weak, ``[1, 2)`` is strong (K = 1 goes to the strong side),
    and ``K >= 2`` is inadmissible.
    """
    if not isinstance(K, (int, float, np.floating, np.integer)) or not math.isfinite(K):
        raise InvalidInputError(f"degeneracy exponent must be a finite real, got {K!r}")
    if K < 0:
        raise InvalidInputError(f"degeneracy exponent must be >= 0, got {K}")
    if K < 1.0:
        return Regime.WEAK
    if K < 2.0:
        return Regime.STRONG
    return Regime.INADMISSIBLE


@dataclass(frozen=True)
class DegeneracyPoint:
    x0: float
    K: float

    def __post_init__(self):
        if self.x0 not in (0.0, 1.0):
            raise InvalidInputError(f"degeneracy point must be 0 or 1, got {self.x0}")
        classify_exponent(self.K)

    @property
    def regime(self) -> Regime:
        return classify_exponent(self.K)


def _require_admissible(point: DegeneracyPoint):
    if point.regime is Regime.INADMISSIBLE:
        raise InadmissibleExponentError(point.K, point.regime, where=f"x0={point.x0:g}")


@dataclass(frozen=True)
class DegeneracyProfile:
    """Diffusion coefficient a(x) on (0, 1) with its degeneracy points.

    ``func`` and ``deriv`` must accept numpy arrays of interior points.
    """

    points: tuple
    func: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    deriv: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    name: str = "custom"

    def __post_init__(self):
        if not 1 <= len(self.points) <= 2:
            raise InvalidInputError("a profile has one or two degeneracy points")
        if len(self.points) == 2 and {p.x0 for p in self.points} != {0.0, 1.0}:
            raise InvalidInputError("a double profile needs one point at each endpoint")

    def __call__(self, x) -> np.ndarray:
        return self.func(np.asarray(x, dtype=float))

    def derivative(self, x) -> np.ndarray:
        return self.deriv(np.asarray(x, dtype=float))

    def point_at(self, x0: float):
        for p in self.points:
            if p.x0 == x0:
                return p
        return None

    @property
    def is_constant(self) -> bool:
        return all(p.K == 0 for p in self.points)


def power_profile(x0: float, K: float) -> DegeneracyProfile:
    """``a(x) = |x - x0|**K``."""
    point = DegeneracyPoint(float(x0), float(K))
    _require_admissible(point)
    if point.x0 == 0.0:
        def a(x):
            return x**K

        def da(x):
            return K * x ** (K - 1) if K != 0 else np.zeros_like(x)
    else:
        def a(x):
            return (1.0 - x) ** K

        def da(x):
            return -K * (1.0 - x) ** (K - 1) if K != 0 else np.zeros_like(x)
    return DegeneracyProfile((point,), a, da, name=f"power(x0={x0:g},K={K:g})")


def double_profile(K0: float, K1: float) -> DegeneracyProfile:
    """``a(x) = x**K0 * (1 - x)**K1``, degenerate at both ends."""
    p0 = DegeneracyPoint(0.0, float(K0))
    p1 = DegeneracyPoint(1.0, float(K1))
    _require_admissible(p0)
    _require_admissible(p1)

    def a(x):
        return x**K0 * (1.0 - x) ** K1

    def da(x):
        left = K0 * x ** (K0 - 1) * (1.0 - x) ** K1 if K0 != 0 else 0.0
        right = K1 * x**K0 * (1.0 - x) ** (K1 - 1) if K1 != 0 else 0.0
        return left - right + np.zeros_like(x)

    return DegeneracyProfile((p0, p1), a, da, name=f"double(K0={K0:g},K1={K1:g})")


def custom_profile(func, deriv, points: Sequence[tuple]) -> DegeneracyProfile:
    """Profile from user callables; ``points`` holds ``(x0, K)`` pairs."""
    pts = tuple(DegeneracyPoint(float(x0), float(K)) for x0, K in points)
    for p in pts:
        _require_admissible(p)
    return DegeneracyProfile(pts, func, deriv, name="custom")


@dataclass(frozen=True)
class DegeneracyReport:
    max_violation: float
    holds: bool
    per_point: dict


def verify_degeneracy_condition(profile: DegeneracyProfile, nodes) -> DegeneracyReport:
    """Check ``(x - x0) a'(x) - K a(x) <= 0`` at every node, per degeneracy point.

    Violations are the positive part of the left-hand side; the condition
    holds when the largest one stays below ``1e-12 * max(a)``.
    """
    x = np.asarray(nodes, dtype=float)
    if np.any(x <= 0) or np.any(x >= 1):
        raise InvalidInputError("grid nodes must lie strictly inside (0, 1)")
    a = profile(x)
    da = profile.derivative(x)
    tol = 1e-12 * float(np.max(np.abs(a)))
    per_point = {}
    for p in profile.points:
        defect = (x - p.x0) * da - p.K * a
        per_point[p.x0] = max(0.0, float(np.max(defect)))
    worst = max(per_point.values())
    return DegeneracyReport(worst, worst <= tol, per_point)


@dataclass(frozen=True)
class IntegrabilityReport:
    integral_estimates: tuple
    diverges: bool


def reciprocal_integrability_probe(profile: DegeneracyProfile, levels=range(6, 15),
                                   growth=1.05) -> IntegrabilityReport:
    """Midpoint-rule estimates of the integral of 1/a on successively finer grids.

    Divergence is declared when both of the last two refinements grow the
    estimate by more than ``growth``.  Midpoints never touch the endpoint, so
    the singularity is never sampled.
    """
    if len(profile.points) != 1:
        raise InvalidInputError("the integrability probe expects a single degeneracy point")
    levels = list(levels)
    if len(levels) < 3:
        raise InvalidInputError("need at least three refinement levels")
    estimates = []
    for k in levels:
        n = 2**k
        mid = (np.arange(n) + 0.5) / n
        estimates.append(float(np.sum(1.0 / profile(mid)) / n))
    r1 = estimates[-1] / estimates[-2]
    r2 = estimates[-2] / estimates[-3]
    return IntegrabilityReport(tuple(estimates), bool(r1 > growth and r2 > growth))


@dataclass(frozen=True)
class TimeCoefficient:
    """Strictly positive b(t) with a declared lower bound."""

    func: Callable = field(repr=False)
    b_min: float
    name: str = "custom"

    def __post_init__(self):
        if not self.b_min > 0:
            raise InvalidInputError(f"b_min must be positive, got {self.b_min}")

    def __call__(self, t):
        return self.func(np.asarray(t, dtype=float))

    def check(self, times) -> None:
        vals = self(times)
        if not np.all(np.isfinite(vals)) or np.any(vals < self.b_min):
            k = int(np.argmin(vals))
            raise InvalidInputError(
                f"b(t) drops below b_min={self.b_min} (b={vals[k]} at t={times[k]})")


def constant_b(value: float = 1.0) -> TimeCoefficient:
    return TimeCoefficient(lambda t: np.full_like(t, float(value)), float(value),
                           name=f"constant({value:g})")


def linear_b(c0: float = 1.0, c1: float = 0.5, T: float = 1.0) -> TimeCoefficient:
    """``b(t) = c0 + c1 t``; the bound is taken over [0, T]."""
    lo = min(c0, c0 + c1 * T)
    return TimeCoefficient(lambda t: c0 + c1 * t, lo, name=f"linear({c0:g},{c1:g})")


def sine_b(mean: float = 2.0, amplitude: float = 0.5, frequency: float = 1.0) -> TimeCoefficient:
    """``b(t) = mean + amplitude sin(2 pi frequency t)``."""
    lo = mean - abs(amplitude)
    return TimeCoefficient(lambda t: mean + amplitude * np.sin(2 * np.pi * frequency * t),
                           lo, name=f"sine({mean:g},{amplitude:g},{frequency:g})")


class KernelKind(enum.Enum):
    ZERO = "zero"
    CONSTANT = "constant"
    EXPONENTIAL = "exponential"
    GENERAL = "general"


@dataclass(frozen=True)
class MemoryKernel:
    """Scalar memory kernel M(t, s) on the triangle 0 <= s <= t <= T.

    Convolution kernels (everything but GENERAL) depend on ``t - s`` only;
    :meth:`lag` evaluates them as a one-argument kernel of the lag.
    """

    kind: KernelKind
    params: tuple = ()
    func: Callable | None = field(default=None, repr=False, compare=False)

    def __call__(self, t, s):
        t = np.asarray(t, dtype=float)
        s = np.asarray(s, dtype=float)
        shape = np.broadcast(t, s).shape
        if self.kind is KernelKind.ZERO:
            return np.zeros(shape)
        if self.kind is KernelKind.CONSTANT:
            return np.full(shape, self.params[0])
        if self.kind is KernelKind.EXPONENTIAL:
            amplitude, rate = self.params
            return amplitude * np.exp(-rate * (t - s))
        return np.broadcast_to(np.asarray(self.func(t, s), dtype=float), shape).copy()

    def lag(self, tau):
        return self(tau, 0.0)

    @property
    def is_zero(self) -> bool:
        return self.kind is KernelKind.ZERO

    def matrix(self, times) -> np.ndarray:
        """Lower-triangular samples ``M[k, m] = M(t_k, t_m)`` for ``m <= k``."""
        times = np.asarray(times, dtype=float)
        tk, tm = np.meshgrid(times, times, indexing="ij")
        mat = np.tril(self(tk, np.minimum(tm, tk)))
        if not np.all(np.isfinite(mat)):
            raise InvalidInputError(f"memory kernel {self} is not finite on the time grid")
        return mat


def zero_kernel() -> MemoryKernel:
    return MemoryKernel(KernelKind.ZERO)


def constant_kernel(a_mem: float) -> MemoryKernel:
    return MemoryKernel(KernelKind.CONSTANT, (float(a_mem),))


def exponential_kernel(amplitude: float, rate: float) -> MemoryKernel:
    return MemoryKernel(KernelKind.EXPONENTIAL, (float(amplitude), float(rate)))


def general_kernel(func) -> MemoryKernel:
    return MemoryKernel(KernelKind.GENERAL, (), func)
