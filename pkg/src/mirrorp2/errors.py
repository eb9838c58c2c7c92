"""Exception hierarchy shared by all modules."""


class MirrorP2Error(Exception):
    """Base class for every numerical failure raised by the package."""


class DomainError(MirrorP2Error, ValueError):
    """Argument outside the domain of the function (e.g. q = 0, z = 0)."""


class DegenerateParameterError(DomainError):
    """theta too close to 0 or pi/2, so that |q| is (numerically) 1."""


class DivergenceError(MirrorP2Error):
    """A series or product was requested outside its disc of convergence."""


class ConvergenceError(MirrorP2Error):
    """An iteration did not converge; ``best`` carries the last iterate."""

    def __init__(self, msg, best=None):
        super().__init__(msg)
        self.best = best


class NearPoleError(MirrorP2Error):
    """Evaluation point lies on (or numerically next to) a pole."""


class DegenerateError(MirrorP2Error):
    """An object that must be non-trivial vanishes identically."""


class BranchError(MirrorP2Error):
    """Zero counting or branch tracking gave an inconsistent answer."""


class NonMembershipError(MirrorP2Error):
    """A function failed a defining functional relation beyond tolerance."""
