"""Exception hierarchy shared by all degenctl modules."""


class DegenctlError(Exception):
    """Base class for every error raised by degenctl."""


class InvalidInputError(DegenctlError, ValueError):
    pass


class InadmissibleExponentError(InvalidInputError):
    """Raised when a degeneracy exponent K >= 2 is requested.

    Such profiles are not null-controllable, so they are rejected as an
    admissibility gate rather than simulated.
    """

    def __init__(self, K, regime, where=""):
        self.K = K
        self.regime = regime
        loc = f" at {where}" if where else ""
        super().__init__(
            f"degeneracy exponent K={K}{loc} is {regime.value}: the problem is "
            f"not null-controllable for K >= 2 (admissible range is 0 <= K < 2)"
        )


class GeometryError(InvalidInputError):
    pass


class ResolutionError(InvalidInputError):
    pass


class SolverError(DegenctlError, RuntimeError):
    pass


class CGBreakdownError(SolverError):
    """Non-positive curvature met inside CG on the Gram operator.

    The Gram operator is SPD in the target inner product, so this only
    happens when the forward map and its adjoint are inconsistent.
    """

    def __init__(self, iteration, curvature, residual):
        self.iteration = iteration
        self.curvature = curvature
        self.residual = residual
        super().__init__(
            f"CG breakdown at iteration {iteration}: curvature={curvature:.3e}, "
            f"relative residual={residual:.3e} (adjoint inconsistency?)"
        )


class ConfigError(DegenctlError):
    pass
