"""Exception hierarchy for ellgraph."""


class EllgraphError(Exception):
    """Base class for all ellgraph errors."""


class NotPositiveDefinite(EllgraphError):
    """A matrix required to be positive definite failed a Cholesky factorization.

    Raised either on degenerate input data or when an optimizer step leaves
    the manifold; line searches treat it as a rejected step.
    """


class RankDeficient(EllgraphError):
    """A matrix required to have full column rank is numerically rank deficient."""


class SolveFailure(EllgraphError):
    """A dense linear system that should be regular turned out singular."""


class LineSearchFailure(EllgraphError):
    """Backtracking exhausted its budget without finding sufficient decrease."""


class DegenerateData(EllgraphError):
    """Input data cannot support estimation (for example, all-zero samples)."""


class DegenerateTruth(EllgraphError):
    """A reference graph is empty or complete, so ROC rates are undefined."""


class ZeroEdges(EllgraphError):
    """Modularity is undefined on a graph without edges."""


class ParseError(EllgraphError):
    """A CSV cell could not be parsed; carries the 1-based row/column location."""

    def __init__(self, message, row=None, column=None):
        super().__init__(message)
        self.row = row
        self.column = column


class NonFiniteValue(ParseError):
    """A CSV cell parsed to NaN or infinity."""


class TooFewRows(EllgraphError):
    """A CSV input has fewer than two data rows."""
