"""Exception taxonomy shared across the package.

CLI exit codes map onto these classes (see cli.EXIT_CODES).
"""


class TlshmError(Exception):
    """Base class for all package errors."""


class ConfigError(TlshmError):
    """Invalid configuration value or unparseable config document."""


class InvalidScenarioError(ConfigError):
    """Damage-scenario multiplier outside (0, 1] or malformed scenario."""


class InvalidPerturbSpecError(ConfigError):
    """Domain perturbation out of range or producing non-positive stiffness."""


class ModelDefinitionError(TlshmError):
    """Structural model is ill-posed (e.g. singular stiffness after supports)."""


class SimulationError(TlshmError):
    """Time integration failed or produced non-finite response."""


class NumericalError(TlshmError):
    """Numerical routine failed to converge or hit non-finite values."""


class TrainingError(TlshmError):
    """Training diverged or was fed an unusable training set."""


class ShapeError(TlshmError):
    """Array shape incompatible with the requested operation."""


class UsageError(TlshmError):
    """API misuse: missing forward cache, unknown strategy tag, etc."""


class DataError(TlshmError):
    """Dataset problem: insufficient records, label vocabulary mismatch."""


class ArtifactError(TlshmError):
    """Missing, corrupt, or version-mismatched artifact on disk."""
