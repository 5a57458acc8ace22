"""Exception hierarchy shared across the package."""


class GbasScreenError(Exception):
    """Base class for all package errors."""


class ParseError(GbasScreenError, ValueError):
    def __init__(self, message: str, line: int):
        self.line = line
        super().__init__(f"line {line}: {message}" if line > 0 else message)


class ConfigError(GbasScreenError, ValueError):
    pass


class NonConvergence(GbasScreenError, ArithmeticError):
    pass


class SingularGeometry(GbasScreenError, ArithmeticError):
    pass


class NumericalFailure(GbasScreenError, ArithmeticError):
    pass


class Unscreenable(GbasScreenError):
    """No admissible broadcast parameters make every unsafe geometry unusable."""

    def __init__(self, message: str, epoch: float | None = None):
        self.epoch = epoch
        super().__init__(message if epoch is None else f"epoch {epoch:g} s: {message}")


class IntegrityError(GbasScreenError):
    """An algorithm's output failed re-verification. Always a bug."""

    def __init__(self, message: str, epoch: float | None = None):
        self.epoch = epoch
        super().__init__(message if epoch is None else f"epoch {epoch:g} s: {message}")


class EmptyInput(GbasScreenError, ValueError):
    pass
