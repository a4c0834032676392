"""Memory-type null controllability toolkit for degenerate parabolic equations."""

from .coefficients import (
    Regime, classify_exponent, constant_kernel, double_profile, exponential_kernel, power_profile,
    verify_degeneracy_condition,
)
from .discretization import DIVERGENCE, NON_DIVERGENCE, DiscreteOperatorFactory, build_grid
from .duality import ControlSystem, TargetVector, adjoint_consistency_test
from .evolution import FixedSupport, ForwardModel, MovingSupport, TimeGrid, rasterize_schedule, step
from .hum import HumConfig, Signature, TargetMode, penalty_sweep, solve_dense_oracle, solve_penalized
from .kernels import BACKEND

__version__ = "0.1.0"
