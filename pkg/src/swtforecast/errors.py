"""Exception classes shared across the package."""


class ShapeError(ValueError):
    """An array has an incompatible length or shape."""


class DivisibilityError(ValueError):
    """A signal length is not divisible by the required power of two."""


class UnsupportedOrderError(ValueError):
    """Requested wavelet order is outside the supported range."""


class NotFittedError(RuntimeError):
    """A model or padder was used before being fitted."""


class ConfigError(ValueError):
    """An experiment or pipeline configuration is invalid."""


class DataError(ValueError):
    """Input data violates a contract (too few days, bad calendar, ...)."""


class DomainError(ValueError):
    """A value is outside the mathematical domain of an operation."""


class DivergenceError(RuntimeError):
    """Network training produced a non-finite loss."""

    def __init__(self, epoch: int, message: str | None = None):
        self.epoch = epoch
        super().__init__(message or f"training diverged at epoch {epoch}")


class FetchError(RuntimeError):
    """A download failed after retries."""


class IntegrityError(RuntimeError):
    """A cached file does not match its recorded checksum."""
