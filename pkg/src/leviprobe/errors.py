"""Exception hierarchy. Every error carries a short machine-readable ``code``."""


class LeviProbeError(Exception):
    code = "ERROR"


class ShapeError(LeviProbeError, ValueError):
    code = "SHAPE"


class DomainError(LeviProbeError, ValueError):
    code = "DOMAIN"


class SingularityError(LeviProbeError, ArithmeticError):
    code = "SINGULAR"


class PreconditionError(LeviProbeError, ValueError):
    code = "PRECONDITION"


class NotHypersurfacePointError(PreconditionError):
    code = "NOT_HYPERSURFACE_POINT"


class UnsupportedError(LeviProbeError):
    code = "UNSUPPORTED"


class InsufficientDegreeError(LeviProbeError, ValueError):
    code = "INSUFFICIENT_DEGREE"


class BranchCutError(LeviProbeError, ArithmeticError):
    code = "BRANCH_CUT"


class DomainExceededError(LeviProbeError):
    code = "DOMAIN_EXCEEDED"


class InvalidSubgroupError(LeviProbeError, ValueError):
    code = "INVALID_SUBGROUP"


class ConfigError(LeviProbeError, ValueError):
    code = "CONFIG"


class FreeActionError(PreconditionError):
    code = "FREE_ACTION"
