"""Exception types raised across the package."""


class TreeGibbsError(Exception):
    """Base class for all package errors."""


class DomainError(TreeGibbsError, ValueError):
    """An argument lies outside the domain of the operation."""


class ParameterError(TreeGibbsError, ValueError):
    """Model or run parameters fail validation."""


class QuadratureEvaluationError(TreeGibbsError, ArithmeticError):
    """An integrand returned a non-finite value at a quadrature node."""

    def __init__(self, node, value):
        super().__init__(f"non-finite integrand value {value!r} at node {node!r}")
        self.node = node
        self.value = value


class SingularityError(TreeGibbsError, ArithmeticError):
    """Closed-form evaluation requested too close to a removable singularity."""


class PositivityError(TreeGibbsError, ValueError):
    """A density expected to be strictly positive is not."""


class DegenerateDenominatorError(TreeGibbsError, ArithmeticError):
    """The normalizing integral of the consistency map vanished."""


class DivergenceError(TreeGibbsError, ArithmeticError):
    """An iteration exceeded its overflow guard."""


class UnsupportedOrderError(TreeGibbsError, ValueError):
    """Closed-form root sets are only known for branching order 2 and 3."""


class BracketError(TreeGibbsError, ValueError):
    """A bisection bracket does not straddle a change in the counted quantity."""


class DimensionLimitError(TreeGibbsError, ValueError):
    """A brute-force volume integral would exceed the desk-scale limit."""


class NoSuchBranchError(TreeGibbsError, LookupError):
    """A requested fixed-point branch does not exist at these parameters."""


class CertificationError(TreeGibbsError, ArithmeticError):
    """A residual certificate failed."""
