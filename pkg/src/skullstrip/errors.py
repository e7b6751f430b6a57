"""Exception types shared across the package."""


class SkullstripError(Exception):
    """Base class for all package errors."""


class FormatError(SkullstripError):
    """Malformed file contents (bad magic, truncated payload, ...)."""


class UnsupportedError(SkullstripError):
    """Well-formed input using a feature outside the supported subset."""


class GeometryError(SkullstripError):
    """Invalid or degenerate grid geometry (e.g. non-invertible affine)."""


class ParameterError(SkullstripError):
    """Caller-supplied parameter violates a precondition."""


class SchemaError(SkullstripError):
    """Inconsistent label schema (unknown labels, overlapping id ranges)."""


class DegenerateInputError(SkullstripError):
    """Operation undefined for this input (e.g. SDT of an empty mask)."""


class TrainingDivergedError(SkullstripError):
    """Optimization produced a non-finite loss."""


class ConfigError(SkullstripError):
    """Missing, unknown, or unparseable configuration key."""
