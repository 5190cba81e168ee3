"""Exception and warning types shared by all modules.

Input problems derive from ``InputError`` (a ``ValueError``) and numerical
failures from ``NumericError`` (an ``ArithmeticError``).  The CLI maps the
first family to exit code 2 and the second to exit code 1.
"""


class InputError(ValueError):
    """Arguments outside the domain of an operation."""


class NumericError(ArithmeticError):
    """A computation could not reach its accuracy target."""


class PoleAt(InputError):
    def __init__(self, z, n=None):
        self.z = z
        self.n = n
        super().__init__(f"argument {z!r} is at a gamma pole (n={n})")


class GammaPole(InputError):
    def __init__(self, where):
        self.where = where
        super().__init__(f"gamma pole in factor {where}")


class SineZero(InputError):
    pass


class NonIntegerDifference(InputError):
    pass


class Divergent(InputError):
    pass


class LowerParamPole(InputError):
    pass


class DegenerateParameters(InputError):
    pass


class DegeneratePoints(InputError):
    pass


class ConditionCViolation(InputError):
    def __init__(self, report):
        self.report = report
        lines = "; ".join(v.describe() for v in report.violations)
        super().__init__(f"Condition C violated: {lines}")


class BranchCutError(InputError):
    pass


class NonConvergentWindow(InputError):
    pass


class HalfIntegerPole(InputError):
    pass


class PoleCollision(InputError):
    pass


class NonConvergent(InputError):
    """A residue or power series diverges at the requested argument."""


class TruncationCapHit(UserWarning):
    """A series hit its term cap; the returned value is a best estimate."""


class BudgetExhausted(NumericError):
    pass


class ExtrapolationUnstable(NumericError):
    pass


class OracleNotConverged(NumericError):
    pass


class StepTooLarge(NumericError):
    pass


class NearIntegerOrder(UserWarning):
    """Hankel order close to an integer; value obtained by extrapolation."""


class NearDegenerateWarning(UserWarning):
    """A Condition C difference is within 1e-6 of an integer."""
