"""Exception types shared across the package."""


class SqueezedATIError(Exception):
    """Base class for all package errors."""


class TruncationError(SqueezedATIError):
    """A Fock-space state carries too much weight near the cutoff."""


class DimensionMismatch(SqueezedATIError, ValueError):
    pass


class GridTooSmall(SqueezedATIError):
    """The Wigner function does not decay to zero on the grid boundary."""


class NoSeed(SqueezedATIError, ValueError):
    pass


class Diverged(SqueezedATIError):
    """Newton iteration failed during the epsilon continuation."""

    def __init__(self, seed_id, message=""):
        self.seed_id = seed_id
        super().__init__(f"seed {seed_id}: {message}" if message else f"seed {seed_id} diverged")


class SingularHessian(SqueezedATIError):
    pass


class ConfigError(SqueezedATIError, ValueError):
    pass


class ComputeError(SqueezedATIError):
    """A scan cell failed; ``cell`` names the offending grid point."""

    def __init__(self, cell, cause):
        self.cell = cell
        self.cause = cause
        super().__init__(f"cell {cell}: {type(cause).__name__}: {cause}")
