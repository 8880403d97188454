"""Exception types shared across the package.

Exit-code mapping for the CLI: ValidationError -> 2, ScaleInfeasibleError -> 3,
SolverError -> 4, verification failure (no exception) -> 1.
"""


class StoqtimError(Exception):
    """Base class for all package errors."""


class ValidationError(StoqtimError):
    """Malformed input: bad model data, class mismatch, schema violation."""


class EmptySectorError(ValidationError):
    """No configuration satisfies the sector constraints (e.g. m-dimer with m too large)."""


class ScaleInfeasibleError(StoqtimError):
    """A basis or matrix would exceed the configured dimension cap."""


class SolverError(StoqtimError):
    """Eigensolver failed to converge within its iteration budget."""


class GapClosureError(SolverError):
    """The low-energy boundary is degenerate: lambda_N and lambda_{N+1} coincide."""


class IllConditionedRotationError(SolverError):
    """Subspaces to be aligned by the direct rotation are nearly orthogonal.

    Signals a broken gadget, a wrong encoding, or a perturbative regime violation.
    """


class UnreachableTargetError(StoqtimError):
    """No tabulated chain exponent c achieves the requested error targets."""
