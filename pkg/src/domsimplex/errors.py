"""Exception types shared across the package."""


class DomSimplexError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(DomSimplexError):
    """An input vector or matrix has the wrong shape."""


class NumericalBreakdown(DomSimplexError):
    """The simplex method exceeded its pivot cap without converging.

    Reported distinctly from infeasibility: the model may be fine but the
    arithmetic stalled.
    """


class UnsupportedFamily(DomSimplexError):
    """The uncertainty-set family has no oracle for the requested operation."""


class NotPermutationInvariant(DomSimplexError):
    """A permutation-invariant operation was called on a non-PI set."""


class CombinatorialBlowup(DomSimplexError):
    """An enumeration would exceed its configured size cap."""


class NonPositiveScale(DomSimplexError):
    """A diagonal scaling vector has a zero or negative entry."""


class ParameterOutOfRange(DomSimplexError):
    """A family parameter is outside the range a closed form requires."""


class RequiresHRep(DomSimplexError):
    """The operation needs a halfspace representation the family lacks."""


class StrategyUnavailable(DomSimplexError):
    """No valid evaluation strategy applies to this set/arguments."""


class StructuralInequalityUnverified(DomSimplexError):
    """A (beta, v) pair failed its structural-inequality certificate."""


class NonConvergence(DomSimplexError):
    """An iterative construction exceeded its guaranteed iteration bound."""


class IterationCapExceeded(DomSimplexError):
    """A cutting-plane loop hit its cut cap before reaching tolerance.

    Carries the best incumbent found and the residual violation.
    """

    def __init__(self, message, incumbent=None, max_violation=None):
        super().__init__(message)
        self.incumbent = incumbent
        self.max_violation = max_violation


class LpInfeasible(DomSimplexError):
    """An LP expected to be feasible came back infeasible."""
