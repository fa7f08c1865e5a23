"""Exception hierarchy shared by every module of the package."""


class QleError(Exception):
    """Base class for all errors raised by qlenv."""


class ShapeError(QleError, ValueError):
    """Matrix or coefficient shapes are inconsistent."""


class NotNormal(QleError):
    pass


class NotCommuting(QleError):
    pass


class DegeneracyUnresolved(QleError):
    """Simultaneous diagonalization could not separate a joint eigenspace."""


class NotSymmetric(QleError):
    pass


class NotUnitary(QleError):
    pass


class NotSelfAdjoint(QleError):
    pass


class NotUnitaryScheme(QleError):
    """A coefficient family does not define a unitary quantum Langevin equation.

    ``condition`` names the first violated requirement and ``residual`` holds
    the norm that exceeded the tolerance.
    """

    def __init__(self, condition, residual, message=None):
        self.condition = condition
        self.residual = float(residual)
        super().__init__(message or f"{condition} violated (residual {residual:.3e})")


class SymmetricCompletionFailed(QleError):
    pass


class NotClassical(QleError):
    """The equation is not driven by classical noises.

    ``reason`` is one of ``GaugeNotCommutative``, ``WienerGramMismatch`` or
    ``PoissonRayMismatch``; ``indices`` lists the offending noise directions
    in the basis where the failure was detected.
    """

    def __init__(self, reason, indices=(), residual=float("nan"), detail=""):
        self.reason = reason
        self.indices = tuple(int(i) for i in indices)
        self.residual = float(residual)
        self.detail = detail
        msg = f"{reason} at indices {list(self.indices)} (residual {self.residual:.3e})"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)

    def as_dict(self):
        return {
            "reason": self.reason,
            "indices": list(self.indices),
            "residual": self.residual,
            "detail": self.detail,
        }
