"""Exception types shared across the package."""


class DomainError(ValueError):
    """Input lies outside the domain where a formula is defined."""


class StructuralError(ValueError):
    """A ribbon graph is malformed (bad matching, wrong valence, ...)."""


class QuadratureError(ArithmeticError):
    """An oscillatory quadrature failed to reach its tolerance.

    The partial estimate is kept on the exception so callers can still
    inspect it.
    """

    def __init__(self, message, estimate=float("nan"), abs_error=float("inf")):
        super().__init__(message)
        self.estimate = estimate
        self.abs_error = abs_error


class FitRejectedError(RuntimeError):
    """A divergence fit left residuals outside the accepted basis."""

    def __init__(self, quantity, fit):
        super().__init__(
            f"fit rejected for {quantity}: residual_rms={fit.residual_rms:.3e} "
            f"exceeds tolerance of dominant term {fit.dominant_term:.3e}"
        )
        self.quantity = quantity
        self.fit = fit
