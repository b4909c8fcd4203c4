"""Exception types shared across the package."""


class ConvergenceError(RuntimeError):
    """An iterative solver stopped before meeting its tolerance."""

    def __init__(self, message, residual=float("nan")):
        super().__init__(f"{message} (best residual {residual:.3e})")
        self.residual = residual


class EmptySelectionError(RuntimeError):
    """NGCS returned no covariates where a downstream step needs at least one."""
