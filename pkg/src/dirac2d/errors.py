"""Exception hierarchy shared by all modules."""


class DiracError(ValueError):
    """Base class for every error raised by dirac2d."""


class InvalidSizeError(DiracError):
    pass


class LengthMismatchError(DiracError):
    pass


class DomainError(DiracError):
    pass


class OutOfDomainError(DiracError):
    """A plaquette or level does not fit in the requested region."""


class NonDifferentiablePointError(DiracError):
    """Gradient requested at the Dirac point (m = 0, xi = 0)."""


class SingularResolventError(DiracError):
    def __init__(self, message: str, modulus: float):
        super().__init__(message)
        self.modulus = modulus


class ThresholdLevelError(DiracError):
    pass


class OutOfTheoremRangeError(DiracError):
    pass


class ShiftCollisionError(DiracError):
    def __init__(self, message: str, shift: float):
        super().__init__(message)
        self.shift = shift


class FitWindowError(DiracError):
    pass


class BudgetError(DiracError):
    pass


class ResolutionError(DiracError):
    pass


class SchemaError(DiracError):
    def __init__(self, message: str, path: str = ""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path
