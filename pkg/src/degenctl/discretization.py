"""Graded grids, H_i inner products and tridiagonal operators A_i(t).

Unknowns live at interior nodes only; Dirichlet endpoints are eliminated.
Each node owns a dual cell bounded by the midpoints to its neighbours (the
endpoints 0 and 1 act as neighbours of the first and last node).  With that
choice the non-divergence operator ``a D2`` is self-adjoint under the
weights ``cell_width / a`` and the divergence operator under ``cell_width``,
and the two coincide when ``a`` is constant.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .coefficients import DegeneracyProfile, Regime, TimeCoefficient
from .errors import InvalidInputError

NON_DIVERGENCE = 1
DIVERGENCE = 2

DIRICHLET = "dirichlet"
ZERO_FLUX = "zero_flux"


@dataclass(frozen=True, eq=False)
class SpatialGrid:
    nodes: np.ndarray
    grading_exponent: float = 1.0

    def __post_init__(self):
        x = self.nodes
        if x.ndim != 1 or len(x) < 3:
            raise InvalidInputError("a grid needs at least 3 interior nodes")
        if x[0] <= 0 or x[-1] >= 1 or np.any(np.diff(x) <= 0):
            raise InvalidInputError("grid nodes must be strictly increasing inside (0, 1)")

    @property
    def N(self) -> int:
        return len(self.nodes)

    @cached_property
    def spacings(self) -> np.ndarray:
        """N+1 gaps of the extended point set ``0, x_1, ..., x_N, 1``."""
        return np.diff(np.concatenate(([0.0], self.nodes, [1.0])))

    @cached_property
    def faces(self) -> np.ndarray:
        """N+1 midpoints of the extended point set; face j sits left of node j."""
        ext = np.concatenate(([0.0], self.nodes, [1.0]))
        return 0.5 * (ext[:-1] + ext[1:])

    @cached_property
    def cell_widths(self) -> np.ndarray:
        return np.diff(self.faces)


def build_grid(N: int, profile: DegeneracyProfile | None = None, gamma: float = 2.0) -> SpatialGrid:
    """Interior grid of N nodes graded toward the degeneracy point(s).

    One point at 0 gives ``x_j = (j/(N+1))**gamma``; one point at 1 the mirror
    image; two points a symmetric map steepening at both ends.
    """
    if N < 3:
        raise InvalidInputError(f"N must be >= 3, got {N}")
    if gamma < 1:
        raise InvalidInputError(f"grading exponent must be >= 1, got {gamma}")
    s = np.arange(1, N + 1) / (N + 1)
    where = {p.x0 for p in profile.points} if profile is not None else set()
    if gamma == 1 or not where:
        x = s
    elif where == {0.0}:
        x = s**gamma
    elif where == {1.0}:
        x = 1.0 - s[::-1] ** gamma
    else:
        x = s**gamma / (s**gamma + (1.0 - s) ** gamma)
        x = 0.5 * (x + 1.0 - x[::-1])
    return SpatialGrid(np.ascontiguousarray(x, dtype=float), float(gamma))


@dataclass(frozen=True, eq=False)
class StateSpaceMetric:
    form_index: int
    weights: np.ndarray

    def inner(self, u, v) -> float:
        return inner_product(self, u, v)

    def norm(self, u) -> float:
        u = np.asarray(u, dtype=float)
        return float(np.sqrt(np.sum(self.weights * u * u)))


def state_metric(grid: SpatialGrid, profile: DegeneracyProfile, form_index: int) -> StateSpaceMetric:
    """Discrete H_1 = L^2_{1/a} (non-divergence) or H_2 = L^2 (divergence)."""
    if form_index == NON_DIVERGENCE:
        w = grid.cell_widths / profile(grid.nodes)
    elif form_index == DIVERGENCE:
        w = grid.cell_widths.copy()
    else:
        raise InvalidInputError(f"form index must be 1 or 2, got {form_index}")
    if not np.all(w > 0) or not np.all(np.isfinite(w)):
        raise InvalidInputError("state-space weights must be positive and finite")
    return StateSpaceMetric(form_index, w)


def inner_product(metric: StateSpaceMetric, u, v) -> float:
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    n = len(metric.weights)
    if u.shape[-1] != n or v.shape[-1] != n:
        raise InvalidInputError(f"grid functions must have length {n}, got {u.shape} and {v.shape}")
    return float(np.sum(metric.weights * u * v))


@dataclass(frozen=True, eq=False)
class Tridiagonal:
    """Row-aligned diagonals: ``lower[0]`` and ``upper[-1]`` are zero."""

    lower: np.ndarray
    diag: np.ndarray
    upper: np.ndarray

    def __mul__(self, c):
        return Tridiagonal(c * self.lower, c * self.diag, c * self.upper)

    __rmul__ = __mul__

    def matvec(self, u):
        out = self.diag * u
        out[1:] += self.lower[1:] * u[:-1]
        out[:-1] += self.upper[:-1] * u[1:]
        return out

    def to_dense(self) -> np.ndarray:
        n = len(self.diag)
        A = np.diag(self.diag)
        A[np.arange(1, n), np.arange(n - 1)] = self.lower[1:]
        A[np.arange(n - 1), np.arange(1, n)] = self.upper[:-1]
        return A


def boundary_treatment(profile: DegeneracyProfile, form_index: int) -> tuple:
    """(left, right) boundary conditions for the given form."""
    if form_index == NON_DIVERGENCE:
        return (DIRICHLET, DIRICHLET)
    out = []
    for x0 in (0.0, 1.0):
        p = profile.point_at(x0)
        out.append(ZERO_FLUX if p is not None and p.regime is Regime.STRONG else DIRICHLET)
    return tuple(out)


@dataclass(frozen=True, eq=False)
class DiscreteOperatorFactory:
    form_index: int
    profile: DegeneracyProfile
    b: TimeCoefficient
    grid: SpatialGrid
    T: float
    boundary: tuple = field(init=False)

    def __post_init__(self):
        if self.form_index not in (NON_DIVERGENCE, DIVERGENCE):
            raise InvalidInputError(f"form index must be 1 or 2, got {self.form_index}")
        object.__setattr__(self, "boundary", boundary_treatment(self.profile, self.form_index))

    @cached_property
    def metric(self) -> StateSpaceMetric:
        return state_metric(self.grid, self.profile, self.form_index)

    @cached_property
    def unit(self) -> Tridiagonal:
        """The operator with b = 1."""
        g = self.grid
        inv_h = 1.0 / g.spacings
        inv_hl, inv_hr = inv_h[:-1], inv_h[1:]
        cw = g.cell_widths
        N = g.N
        if self.form_index == NON_DIVERGENCE:
            a = self.profile(g.nodes)
            lower = a * (inv_hl / cw)
            upper = a * (inv_hr / cw)
            diag = -a * ((inv_hl + inv_hr) / cw)
        else:
            flux = self.profile(g.faces) * inv_h
            left, right = self.boundary
            if left == ZERO_FLUX:
                flux[0] = 0.0
            if right == ZERO_FLUX:
                flux[-1] = 0.0
            fl, fr = flux[:-1], flux[1:]
            lower = fl / cw
            upper = fr / cw
            diag = -(fl + fr) / cw
        lower = lower.copy()
        upper = upper.copy()
        lower[0] = 0.0
        upper[N - 1] = 0.0
        return Tridiagonal(lower, diag, upper)

    def assemble(self, t: float) -> Tridiagonal:
        return assemble_operator(self, t)


def assemble_operator(factory: DiscreteOperatorFactory, t: float) -> Tridiagonal:
    if not 0.0 <= t <= factory.T:
        raise InvalidInputError(f"t={t} outside [0, {factory.T}]")
    return float(factory.b(t)) * factory.unit


def self_adjointness_check(factory: DiscreteOperatorFactory, t: float, trials: int = 10,
                           rng=None, weights=None) -> float:
    """Largest relative symmetry defect of A(t) in the H_i inner product.

    ``weights`` overrides the metric (used to confirm the check can fail).
    """
    if trials < 1:
        raise InvalidInputError("trials must be >= 1")
    rng = np.random.default_rng(rng)
    w = factory.metric.weights if weights is None else np.asarray(weights, dtype=float)
    A = factory.assemble(t)
    sw = np.sqrt(w)
    opnorm = np.linalg.norm(sw[:, None] * A.to_dense() / sw[None, :], 2)
    worst = 0.0
    for _ in range(trials):
        u = rng.standard_normal(factory.grid.N)
        v = rng.standard_normal(factory.grid.N)
        lhs = np.sum(w * A.matvec(u) * v)
        rhs = np.sum(w * u * A.matvec(v))
        scale = opnorm * np.sqrt(np.sum(w * u * u)) * np.sqrt(np.sum(w * v * v))
        worst = max(worst, abs(lhs - rhs) / scale)
    return float(worst)
