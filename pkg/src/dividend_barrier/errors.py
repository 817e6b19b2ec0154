"""Exception hierarchy shared by the solvers."""


class DividendBarrierError(Exception):
    """Base class for every error raised by this package."""


class DomainError(DividendBarrierError, ValueError):
    """An argument lies outside the domain where an operation is defined."""


class InvalidStateError(DividendBarrierError):
    """A solver reached a state the theory rules out (e.g. h' <= 0)."""


class NumericalError(DividendBarrierError):
    """A numerical procedure failed to converge or produced non-finite output."""


class FreeBoundaryNotFound(NumericalError):
    """The curvature of h never changed sign on the scanned range."""

    def __init__(self, x_start, x_max):
        super().__init__(
            f"free boundary beyond domain: h'' did not cross zero on [{x_start:g}, {x_max:g}]"
        )
        self.x_start = x_start
        self.x_max = x_max


class TargetUnattainable(NumericalError):
    """No barrier below the cap meets the solvency target."""

    def __init__(self, b_cap, last_ruin):
        super().__init__(
            f"target unattainable within cap b={b_cap:g} (last ruin probability {last_ruin:.6g})"
        )
        self.b_cap = b_cap
        self.last_ruin = last_ruin


class ConfigError(DividendBarrierError, ValueError):
    """A run configuration does not match the documented schema."""
