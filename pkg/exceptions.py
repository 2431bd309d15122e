"""Error types raised by the planning, estimation and simulation modules."""


class WinPlanError(Exception):
    """Base class for all toolkit errors."""


class DomainError(WinPlanError, ValueError):
    """An argument lies outside the domain of the requested function."""


class DegenerateEstimateError(DomainError):
    """A win probability estimate of exactly 0 or 1 (logit undefined)."""

    def __init__(self, estimate: float):
        self.estimate = estimate
        super().__init__(
            f"Degenerate estimate {estimate!r}: logit CI undefined for estimates of 0 or 1"
        )


class DegenerateVarianceError(DomainError):
    """A covariance matrix has a zero (or negative) variance on its diagonal."""


class InfeasibleDesignError(WinPlanError, ValueError):
    """The planned global win probability does not exceed the lower bound."""

    def __init__(self, theta: float, lower_bound: float):
        self.theta = theta
        self.lower_bound = lower_bound
        super().__init__(
            f"Design infeasible: planned global WinP theta={theta:.6g} must exceed "
            f"lower bound theta0={lower_bound:.6g}"
        )


class DataFormatError(WinPlanError):
    """Subject-level data file could not be parsed into trial data."""
