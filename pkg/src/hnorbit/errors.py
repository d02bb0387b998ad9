"""Exception types shared across the package."""


class HNOrbitError(Exception):
    """Base class for all errors raised by hnorbit."""


class PreconditionError(HNOrbitError, ValueError):
    """An operation was called on input outside its domain."""


class ResourceError(HNOrbitError):
    """An enumeration grew past its configured cap.

    ``partial`` carries whatever best-so-far object the caller produced,
    flagged as uncertified.
    """

    def __init__(self, message, cap=None, partial=None):
        super().__init__(message)
        self.cap = cap
        self.partial = partial


class IntegrityError(HNOrbitError):
    """A computed object violates an invariant that should hold exactly.

    Raised on numerical degeneracy (ties at Harder-Narasimhan vertices) and on
    implementation bugs caught by self-checks.
    """


class BudgetExhausted(HNOrbitError):
    """An orbit search ran out of iterations or time.

    The best result found so far is attached as ``result``.
    """

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result
