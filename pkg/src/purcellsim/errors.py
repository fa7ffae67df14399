"""Exception hierarchy shared across the package."""


class PurcellSimError(Exception):
    """Base class for all package errors."""


class InvalidDimensionError(PurcellSimError):
    """A Hilbert-space dimension is too small or inconsistent."""


class UnknownLabelError(PurcellSimError):
    """A subsystem label is not part of the layout."""


class LayoutMismatchError(PurcellSimError):
    """Two objects live on incompatible tensor-product layouts."""


class InvalidRateError(PurcellSimError):
    """A decay rate or coupling is outside its physical range."""


class PoleProximityError(PurcellSimError):
    """Perturbative formula evaluated too close to one of its poles."""

    def __init__(self, message: str, branch: str):
        super().__init__(message)
        self.branch = branch


class NonDispersiveRegimeError(PurcellSimError):
    """Dressed-state labeling by bare-state overlap is ambiguous."""


class EvolutionError(PurcellSimError):
    """Time integration failed (non-finite state, step floor, bound violation)."""


class NonConvergenceError(PurcellSimError):
    """An iterative settling procedure did not converge in the allotted time."""

    def __init__(self, message: str, trailing_slope: float | None = None):
        super().__init__(message)
        self.trailing_slope = trailing_slope


class SweepBudgetError(PurcellSimError):
    """A sweep would exceed the configured cell budget."""


class ConfigError(PurcellSimError):
    """A run configuration is malformed; `field` names the offending entry."""

    def __init__(self, message: str, field: str = ""):
        super().__init__(message)
        self.field = field
