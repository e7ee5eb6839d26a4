"""Exception hierarchy.

Every error carries a ``context`` dict so that the command-line front end can
serialize it as ``{code, message, context}``.  The two intermediate classes
decide the CLI exit code: :class:`InfeasibleError` maps to 2 and
:class:`NumericalError` to 3.
"""


def _plain(v):
    # numpy scalars and arrays -> JSON-friendly builtins
    if hasattr(v, "tolist"):
        v = v.tolist()
    if isinstance(v, complex):
        return [v.real, v.imag]
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if isinstance(v, dict):
        return {k: _plain(x) for k, x in v.items()}
    return v


class HinfError(Exception):
    exit_code = 3

    def __init__(self, message: str = "", **context):
        super().__init__(message)
        self.message = message
        self.context = {k: _plain(v) for k, v in context.items()}

    @property
    def code(self) -> str:
        return type(self).__name__

    def to_dict(self) -> dict:
        return {"code": self.code, "message": self.message, "context": self.context}


class InfeasibleError(HinfError):
    """The problem data admits no solution at the requested level."""

    exit_code = 2


class NumericalError(HinfError):
    """An algorithm failed for numerical reasons (convergence, conditioning)."""

    exit_code = 3


# linalg
class NoConvergence(NumericalError):
    pass


class SingularPencil(NumericalError):
    pass


class Overflow(NumericalError, OverflowError):
    pass


# riccati
class GammaInfeasible(InfeasibleError):
    pass


class RdSingular(NumericalError):
    pass


class ImaginaryAxisEigenvalues(InfeasibleError):
    pass


class SubspaceSingular(InfeasibleError):
    pass


class NotPSD(InfeasibleError):
    pass


class NotStabilizing(InfeasibleError):
    pass


class D1Degenerate(InfeasibleError):
    pass


class Diverged(NumericalError):
    pass


class UnstableA(InfeasibleError):
    pass


# symbol
class ShapeMismatch(HinfError, ValueError):
    exit_code = 1


class NotInvertible(NumericalError):
    pass


class AliasingDetected(NumericalError):
    pass


class InversionInaccurate(NumericalError):
    pass


# pipeline
class AssumptionFailed(InfeasibleError):
    pass


class PointwiseInfeasible(InfeasibleError):
    def __init__(self, message: str = "", theta: float | None = None, cause: str | None = None, **context):
        super().__init__(message, theta=theta, cause=cause, **context)
        self.theta = theta
        self.cause = cause


class ContinuityNotResolved(NumericalError):
    pass


class InfeasibleAtHi(InfeasibleError):
    pass


# spatial
class BandTooWide(HinfError, ValueError):
    exit_code = 1


class UnstableClosedLoop(InfeasibleError):
    pass
