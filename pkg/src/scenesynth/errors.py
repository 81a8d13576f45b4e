class SceneSynthError(Exception):
    """Base class for pipeline failures."""


class DimensionError(SceneSynthError, ValueError):
    """Raster shapes that should agree do not."""


class ConfigError(SceneSynthError):
    """Invalid or inconsistent configuration."""


class SolverError(SceneSynthError):
    """Iterative solve did not reach the requested tolerance."""

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations
