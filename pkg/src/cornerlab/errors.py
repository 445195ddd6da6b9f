"""Exception types shared across the package.

The CLI maps these onto exit codes: bad input data is a usage error,
solver trouble is a numerical error, and a closed spectral gap means the
requested invariant is not defined for the given model.
"""


class ModelError(ValueError):
    """Malformed symbol, grading, or model file."""


class GeometryError(ValueError):
    """Invalid slope, slope pair, or lattice region."""


class EigensolverError(RuntimeError):
    """Dense or windowed eigensolver failed or produced bad residuals."""


class TrackingError(RuntimeError):
    """Branch tracking could not resolve an unambiguous linking."""


class ResidualError(RuntimeError):
    """A quantized number failed its integer residual check."""


class GapClosedError(RuntimeError):
    """A spectral gap required by the computation is closed or too small."""
