"""Exception types shared across the package."""


class NodalscopeError(Exception):
    """Base class for all package-specific errors."""


class EmbeddedBallError(NodalscopeError):
    """Ball radius exceeds the embedded-ball range (r > 1/2 on the unit torus)."""


class CoverRadiusError(NodalscopeError):
    """Cover radius outside the admissible range (0, 1/4]."""


class NoModesError(NodalscopeError):
    """The requested squared norm has no lattice representations."""

    def __init__(self, m, dim):
        self.m = m
        self.dim = dim
        super().__init__(f"no lattice modes with |k|^2 = {m} in dimension {dim}")


class ResolutionError(NodalscopeError):
    """Grid resolution below the Nyquist requirement."""

    def __init__(self, n_given, n_required):
        self.n_given = n_given
        self.n_required = n_required
        super().__init__(
            f"grid resolution {n_given} below required minimum {n_required}"
        )


class BudgetError(NodalscopeError):
    """A certified scan cannot meet the requested tolerance within budget."""


class DegenerateBallError(NodalscopeError):
    """A sup/mass denominator collapsed to (numerical) zero."""


class ScaleRangeError(NodalscopeError):
    """A scale parameter is outside its admissible range."""


class LiftOverflowError(NodalscopeError):
    """Harmonic-lift exponent t*sqrt(lambda) would overflow."""


class AmbiguousOrderError(NodalscopeError):
    """Vanishing-order slope too close to a rounding boundary."""

    def __init__(self, slope):
        self.slope = slope
        super().__init__(
            f"log-log slope {slope:.4f} is within 0.25 of an odd integer; "
            "vanishing order ambiguous"
        )


class HypothesisFailedError(NodalscopeError):
    """Report requested on a failed equidistribution certificate."""
