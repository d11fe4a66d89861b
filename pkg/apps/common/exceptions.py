"""Error hierarchy shared by every app.

Library functions raise these; negative verdicts (an embedding that is not
valid, a certificate that fails) are returned as values instead.
"""


class CausalEmbedError(Exception):
    """Base class for all library errors"""


# ============ MODEL ERRORS ============

class InvalidModel(CausalEmbedError):
    """Structural problem in an SCM declaration"""


class CyclicModel(InvalidModel):
    pass


class UnknownVariable(CausalEmbedError):
    pass


class ValueOutOfRange(CausalEmbedError):
    pass


class ContinuousExogenous(CausalEmbedError):
    """Raised when the exact engine meets a parametric (normal) law"""


class ZeroProbabilityCondition(CausalEmbedError):
    pass


# ============ GRAPH / EMBEDDING ERRORS ============

class MapMismatch(CausalEmbedError):
    pass


class VariableMismatch(CausalEmbedError):
    pass


class StructureInvalid(CausalEmbedError):
    def __init__(self, message, violations=None):
        super().__init__(message)
        self.violations = list(violations or [])


class NotGraphicallyConsistent(CausalEmbedError):
    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class MissingCandidate(CausalEmbedError):
    pass


# ============ DATASET ERRORS ============

class SchemaMismatch(CausalEmbedError):
    pass


class UnknownColumn(CausalEmbedError):
    pass


class AllMissingColumn(CausalEmbedError):
    pass


class AllMissingRow(CausalEmbedError):
    pass


class MissingCells(CausalEmbedError):
    pass


class StructureMismatch(CausalEmbedError):
    pass


# ============ FILE ERRORS ============

class InvalidSpecFile(CausalEmbedError):
    def __init__(self, message, errors=None):
        super().__init__(message)
        self.errors = errors or {}
