"""Exception hierarchy shared by every module."""


class LexiChoiceError(Exception):
    """Base class for all library errors."""


class DomainError(LexiChoiceError):
    """An item set is not contained in the ground set."""


class MissingTableEntry(LexiChoiceError):
    """A table-backed function is undefined at the requested set."""


class InvalidParams(LexiChoiceError):
    pass


class InsufficientHeadroom(LexiChoiceError):
    """A construction needs fresh items the finite ground set cannot supply."""


class EnumerationCapExceeded(LexiChoiceError):
    pass


class SamplingBudgetExceeded(LexiChoiceError):
    pass


class BudgetExceeded(LexiChoiceError):
    pass


class ArityMismatch(LexiChoiceError):
    pass


class NestingViolation(LexiChoiceError):
    pass


class ConditionNotViolated(LexiChoiceError):
    """The exclusion function satisfies the condition a witness was requested for."""


class WitnessConstructionFailed(LexiChoiceError):
    """No candidate violation produced a validating counterexample."""


class PreconditionFailed(LexiChoiceError):
    def __init__(self, hypothesis: str, detail: str = ""):
        self.hypothesis = hypothesis
        super().__init__(f"{hypothesis}: {detail}" if detail else hypothesis)


class SpecError(LexiChoiceError):
    """Malformed spec or report file."""
