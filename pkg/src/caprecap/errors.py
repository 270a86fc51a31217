"""Exception types shared across the package."""


class EstimabilityError(Exception):
    """Base class for structural failures of the maximum likelihood problem."""


class NonexistentMLEError(EstimabilityError):
    """The (extended) maximum likelihood estimate does not exist.

    Raised when the existence linear program for the reduced problem has an
    optimum of zero.
    """


class UnidentifiableError(EstimabilityError):
    """The likelihood is maximized on a continuum of parameter values."""


class NonConvergenceError(Exception):
    """The fitting iteration hit its iteration cap without converging.

    Distinct from the structural failures above: the model is estimable but
    the numerics did not settle.
    """


class DataFormatError(ValueError):
    """Malformed input data (CSV/JSON parsing, bad counts, bad labels)."""
