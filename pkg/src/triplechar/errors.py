"""Exception types shared across the package."""


class TriplecharError(Exception):
    """Base class for failures raised by this package."""


class DiscriminantPositive(TriplecharError):
    """The characteristic cubic has complex roots at the requested point.

    Raised when the discriminant is positive beyond tolerance, i.e. the
    point lies outside the hyperbolicity region.
    """

    def __init__(self, delta: float, message: str = ""):
        self.delta = delta
        super().__init__(message or f"positive cubic discriminant {delta:.6g}")


class ScanFailed(TriplecharError):
    """A lower-bound scan found no positive constant on any subinterval."""


class NotCritical(TriplecharError):
    """The phase point is not a critical point of the symbol."""


class StepFailure(TriplecharError):
    """The adaptive step size underflowed (typically a non-finite state)."""

    def __init__(self, t: float, message: str = ""):
        self.t = t
        super().__init__(message or f"step size underflow near t = {t:.6g}")


class ToleranceUnachievable(TriplecharError):
    """The local error estimator cannot meet the requested tolerance."""

    def __init__(self, t: float, message: str = ""):
        self.t = t
        super().__init__(message or f"tolerance unachievable near t = {t:.6g}")


class InconsistentSweep(TriplecharError):
    """Modes passed to an estimate assembly disagree on interval or data site."""


class NoStabilization(TriplecharError):
    """No lambda in the search range produces a monotone estimate ratio."""


class DegenerateCase(TriplecharError):
    """The loss-of-derivatives formula does not apply (a_tt vanishes)."""


class IllPosedCase(TriplecharError):
    """Degenerate second-order configuration known not to be well posed."""


class InsufficientData(TriplecharError):
    """Too few frequency octaves to fit a growth model."""


class ScenarioError(TriplecharError):
    """Scenario input is malformed; message carries a JSON-pointer path."""


class IllConditionedWarning(UserWarning):
    """Eigenvalue condition estimates exceeded the reporting threshold."""
