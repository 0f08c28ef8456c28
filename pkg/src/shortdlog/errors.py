"""Exception types raised across the package."""


class ShortDlogError(Exception):
    """Base class for all errors raised by this package."""


class InvalidArgumentError(ShortDlogError, ValueError):
    pass


class InvalidModulusError(InvalidArgumentError):
    pass


class NotInvertibleError(ShortDlogError, ArithmeticError):
    """Raised when an inverse modulo ``n`` does not exist.

    The offending gcd is kept on the exception since a factoring caller can
    use it directly.
    """

    def __init__(self, value: int, modulus: int, gcd: int):
        super().__init__(f"{value} is not invertible modulo {modulus} (gcd {gcd})")
        self.value = value
        self.modulus = modulus
        self.gcd = gcd


class GenerationFailedError(ShortDlogError, RuntimeError):
    pass


class ExhaustiveModeUnavailableError(ShortDlogError, ValueError):
    """Raised when an exhaustive/oracle computation would be too large."""


class DegenerateSubsetError(InvalidArgumentError):
    pass


class InvalidBasisError(InvalidArgumentError):
    pass


class TooManyCandidatesError(ShortDlogError, RuntimeError):
    pass


class InconsistentCandidateError(ShortDlogError, RuntimeError):
    pass
