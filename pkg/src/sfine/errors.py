"""Exception hierarchy shared by every module of the package."""


class SfineError(Exception):
    """Base class for all errors raised by :mod:`sfine`."""


class ZeroParavector(SfineError, ZeroDivisionError):
    pass


class SingularMultivector(SfineError, ArithmeticError):
    pass


class SingularBasis(SfineError, ArithmeticError):
    pass


class SingularOperator(SfineError, ArithmeticError):
    def __init__(self, message, rcond=None):
        super().__init__(message)
        self.rcond = rcond


class OnSpectrumSphere(SfineError, ValueError):
    """A point lies (numerically) on the sphere [s] of another point."""


class OnSpectrum(SfineError, ValueError):
    """A resolvent was requested at a point of the S-spectrum."""


class SphereCollision(SfineError, ValueError):
    """Two-variable identity evaluated with s in [p]."""


class NonCommutingB(SfineError, ValueError):
    pass


class InvalidConstruction(SfineError, ValueError):
    pass


class RankMismatch(SfineError, ValueError):
    pass


class SamplerExhausted(SfineError, RuntimeError):
    pass


class ContourTouchesSpectrum(SfineError, ValueError):
    pass


class SideMismatch(SfineError, ValueError):
    pass


class NotIntrinsic(SfineError, ValueError):
    pass


class SpectrumNotSplit(SfineError, ValueError):
    pass


class GridTooSmall(SfineError, ValueError):
    pass


class AxisTooClose(SfineError, ValueError):
    pass


class ConfigInvalid(SfineError, ValueError):
    pass
