"""Exception types raised by the operator library."""


class UnderResolvedError(ValueError):
    """The ball (or annulus gap) spans too few grid cells."""


class DegenerateRegionError(ValueError):
    """A quadrature region contains no grid nodes."""


class CompatibilityError(ValueError):
    """Input violates the divergence compatibility needed by R_eps.

    The residual record is kept on ``self.record``.
    """

    def __init__(self, message, record=None):
        super().__init__(message)
        self.record = record


class SolverError(RuntimeError):
    """The sparse saddle-point solve failed or did not reach tolerance."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual
