"""Exception hierarchy shared across the package."""


class GpcError(Exception):
    """Base class for all gpclab errors."""


class NonCausalError(GpcError):
    """An operator needs future input samples that were not supplied."""


class UnstableLoopError(GpcError):
    """A limit or steady-state quantity was requested for an unstable operator."""


class SingularGainError(GpcError):
    """The controller Hessian is singular or too ill-conditioned to invert."""

    def __init__(self, variant: str, cond: float):
        self.variant = variant
        self.cond = cond
        super().__init__(
            f"{variant}: gain matrix is singular or ill-conditioned (cond ~ {cond:.3g})"
        )


class ConfigError(GpcError):
    """Invalid scenario or command-line configuration."""
