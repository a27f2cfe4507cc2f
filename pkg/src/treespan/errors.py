"""Exception types shared across the package."""


class TreespanError(Exception):
    """Base class for all package errors."""


class GraphFormatError(TreespanError):
    """Malformed graph input (bad header, loop, duplicate or out-of-range edge)."""


class TreeFormatError(TreespanError):
    """Malformed tree input (bad parent array, cycle, disconnected)."""


class SizeLimitExceeded(TreespanError):
    """An exhaustive enumeration would exceed its subset budget.

    Raised instead of silently downgrading to a sampled check.
    """


class NotRegular(TreespanError):
    """Operation requires a regular graph."""


class ConvergenceFailure(TreespanError):
    """Iterative eigensolver failed to converge."""


class InvalidParameter(TreespanError):
    """A numeric parameter is outside its documented domain."""


class DemandMismatch(TreespanError):
    """Star-matching demands do not sum to the size of the leaf side."""


class InvariantViolation(TreespanError):
    """A certified hypothesis was contradicted at runtime.

    Signals either a lying (sampled) certificate or a bug; never swallowed.
    """


class PreconditionViolated(TreespanError):
    """A documented precondition failed in strict mode.

    Carries the name of the first failing bound plus both sides.
    """

    def __init__(self, name, lhs=None, rhs=None):
        self.name = name
        self.lhs = lhs
        self.rhs = rhs
        detail = name if lhs is None else f"{name}: {lhs!r} vs {rhs!r}"
        super().__init__(detail)


class BoundWarning(UserWarning):
    """A size bound that guarantees success holds only at larger scale.

    The operation proceeds anyway and fails honestly if the search comes
    up empty.
    """


class SearchExhausted(TreespanError):
    """A bounded search ran out of budget or candidates.

    ``stage`` names the phase that gave up, so failures are attributable.
    """

    def __init__(self, stage, detail=""):
        self.stage = stage
        super().__init__(f"{stage}: {detail}" if detail else stage)


class CapacityExceeded(TreespanError):
    """Guest structure does not fit in the window at the claimed expansion."""


class EmbeddingFailed(TreespanError):
    """Search for an injective embedding failed after retries."""


class ConstructionFailed(TreespanError):
    """Randomized construction did not pass its audit within the retry cap."""


class InsufficientNeighborhood(TreespanError):
    """A vertex neighborhood is too small to host the requested structure."""


class ArithmeticMismatch(TreespanError):
    """Exact-cover arithmetic does not balance; the instance is malformed."""


class ShapeMismatch(TreespanError):
    """A pendant tree does not fit inside its replacement array tree."""


class RetriesExhausted(TreespanError):
    """Randomized partitioning failed certification after all retries."""


class RejectionBudgetExceeded(TreespanError):
    """Configuration-model sampling kept producing loops or duplicate edges."""


class InvalidSpec(TreespanError):
    """Host generator specification is inconsistent (e.g. odd n*d)."""


class StageFailure(TreespanError):
    """A pipeline phase failed; carries case tag, phase name and the cause."""

    def __init__(self, case, phase, cause):
        self.case = case
        self.phase = phase
        self.cause = cause
        super().__init__(f"{case}/{phase}: {cause}")


class CoverFailure(TreespanError):
    """Path cover search failed; carries the stage that gave up."""

    def __init__(self, stage, detail=""):
        self.stage = stage
        super().__init__(f"{stage}: {detail}" if detail else stage)
