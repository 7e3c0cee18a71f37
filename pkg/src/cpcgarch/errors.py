"""Exception types raised across the package."""


class GarchError(Exception):
    """Base class for all package errors."""


class NonFiniteState(GarchError):
    """A variance state carried NaN or infinite values."""


class NegativeVarianceForSqrt(GarchError):
    """A recursion needed the square root of a negative variance."""

    def __init__(self, h: float, message: str | None = None):
        self.h = h
        super().__init__(message or f"sqrt of negative variance h={h!r}")


class NonStationary(GarchError):
    """The long-run mean system has no stationary solution."""


class MgfDiverged(GarchError):
    """The affine MGF recursion left its region of validity."""

    def __init__(self, step: int, reason: str = "gaussian"):
        self.step = step
        self.reason = reason
        super().__init__(f"MGF diverged at step {step} ({reason})")


class PricingDiverged(GarchError):
    """A transform price could not be computed because the MGF diverged."""

    def __init__(self, maturity: int, phi: float):
        self.maturity = maturity
        self.phi = phi
        super().__init__(f"pricing diverged for T={maturity} at phi={phi:.6g}")


class TooManyDeadPaths(GarchError):
    """More than half of the Monte Carlo paths hit a negative variance."""


class FilterBreakdown(GarchError):
    """The variance filter produced a non-positive variance."""

    def __init__(self, t: int):
        self.t = t
        super().__init__(f"filtered variance non-positive at index {t}")


class NoConvergence(GarchError):
    """The optimizer failed; the best point found is attached."""

    def __init__(self, message: str, best=None):
        self.best = best
        super().__init__(message)


class HessianNotPD(GarchError):
    """The negative Hessian is not positive definite at the optimum."""

    def __init__(self, eigenvalues):
        self.eigenvalues = eigenvalues
        super().__init__(f"negative Hessian not positive definite; min eigenvalue {min(eigenvalues):.3e}")


class IvUnsolvable(GarchError):
    """A price lies outside the Black-Scholes no-arbitrage bounds."""


class EmptyPanel(GarchError):
    """No usable records were available for scoring."""


class MalformedRow(GarchError):
    def __init__(self, line: int, detail: str = ""):
        self.line = line
        super().__init__(f"malformed row at line {line}: {detail}")


class NonMonotoneDates(GarchError):
    pass
