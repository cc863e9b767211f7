"""Exception types shared across the package."""


class TruncationError(ValueError):
    """An operation would read below a measure's truncation floor."""


class PopulationCapError(RuntimeError):
    """A simulated population exceeded the configured particle cap."""


class ClassificationError(ValueError):
    """An operation was called with a law in the wrong criticality case."""


class NoCriticalRootError(ValueError):
    """kappa has no root in (0, inf); the regime is supercritical-only."""


class QuadratureError(RuntimeError):
    """Node-doubling failed to stabilize a numerical integral."""


class ConfigError(ValueError):
    """Malformed configuration input (law / decoration / CLI arguments)."""
