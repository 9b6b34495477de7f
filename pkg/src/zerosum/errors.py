"""Exception hierarchy shared by all zerosum modules."""


class ZeroSumError(Exception):
    """Base class for every error raised by this package."""


class InvalidParams(ZeroSumError, ValueError):
    pass


class NoValidS(InvalidParams):
    """The requested n admits no s with s^2 = 1 and s != +-1 (mod n)."""


class NotNormal(ZeroSumError, ValueError):
    pass


class BoundExceeded(ZeroSumError):
    pass


class BudgetExceeded(ZeroSumError):
    """A search or DP ran past its configured budget.

    ``checkpoint`` carries a resumable JSON-able snapshot when the caller
    asked for one.
    """

    def __init__(self, message, checkpoint=None, nodes=None):
        super().__init__(message)
        self.checkpoint = checkpoint
        self.nodes = nodes


class RepsNotTransversal(ZeroSumError, ValueError):
    pass


class StructureViolation(ZeroSumError):
    pass


class NoSolution(ZeroSumError):
    pass


class ExtractionFailed(ZeroSumError):
    pass


class CertificateError(ZeroSumError):
    """A certificate failed its own verification (always a bug)."""


class SchemaError(ZeroSumError, ValueError):
    pass


class UnknownLabel(SchemaError):
    pass


class GroupMismatch(SchemaError):
    pass
