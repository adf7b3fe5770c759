"""Exception hierarchy shared by all modules."""


class ShellHomError(Exception):
    """Base class for every error raised by this package."""


class DegenerateChart(ShellHomError):
    pass


class DerivativeUnavailable(ShellHomError):
    pass


class DegenerateImmersion(ShellHomError):
    pass


class NotIsometric(ShellHomError):
    def __init__(self, message, defect=None):
        super().__init__(message)
        self.defect = defect


class OutOfThickness(ShellHomError):
    pass


class NotCoercive(ShellHomError):
    pass


class SingularBlock(ShellHomError):
    pass


class FrameMismatch(ShellHomError):
    pass


class ShapeMismatch(ShellHomError):
    pass


class BadGamma(ShellHomError):
    pass


class NoConvergence(ShellHomError):
    def __init__(self, message, residual_history=None):
        super().__init__(message)
        self.residual_history = list(residual_history or [])


class NotSPD(ShellHomError):
    pass


class NotConvex(ShellHomError):
    pass


class TooLarge(ShellHomError):
    pass


class ConfigError(ShellHomError):
    pass
