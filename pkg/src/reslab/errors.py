"""Exception classes shared across the package.

Kept separate from ValueError so callers can distinguish invalid arguments
from computations that reveal an unmet assumption.
"""


class ReslabError(Exception):
    """Base class for all package errors."""


class DomainError(ReslabError, ValueError):
    """An argument lies outside the operation's admissible domain."""


class StripError(DomainError):
    """A frequency lies outside the analytic continuation strip."""


class ResolutionError(ReslabError):
    """A grid is too coarse to resolve the requested frequency."""


class StiffnessError(ReslabError):
    """The adaptive integrator could not meet the requested tolerance."""


class NearResonanceError(ReslabError):
    """The matching determinant is below the deflation threshold."""


class BoundaryZeroError(ReslabError):
    """A zero is suspected too close to a contour for safe winding counts."""


class WindingError(ReslabError):
    """A winding count failed to stabilize to an integer."""


class RefinementError(ReslabError):
    """Newton refinement diverged.

    Carries ``best_rectangle``, the smallest rectangle known to contain the
    sought zero (re_lo, re_hi, im_lo, im_hi), when available.
    """

    def __init__(self, msg, best_rectangle=None):
        super().__init__(msg)
        self.best_rectangle = best_rectangle


class IsolationError(ReslabError):
    """A circle assumed to isolate one zero contains extra zeros (or none)."""


class BadCutoffError(ReslabError):
    """A quasimode cutoff was placed where the eigenfunction is not small."""


class CompletenessError(ReslabError):
    """A zero list does not match the winding count of its region."""


class HypothesisError(ReslabError):
    """Numerically validated hypotheses of a lemma check failed.

    Distinct from a genuine counterexample: the conclusion was never tested.
    """


class ConfigError(ReslabError):
    """An experiment configuration failed to parse or validate."""
