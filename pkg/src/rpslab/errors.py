"""Exception hierarchy shared across rpslab."""


class RpsError(Exception):
    """Base class for every error raised by rpslab."""


class ConfigError(RpsError, ValueError):
    """Invalid model or experiment configuration.

    ``violations`` holds every problem found, as ``(field_path, message)``.
    """

    def __init__(self, violations):
        if isinstance(violations, str):
            violations = [("", violations)]
        self.violations = list(violations)
        lines = [f"{path}: {msg}" if path else msg for path, msg in self.violations]
        super().__init__("; ".join(lines))


class DomainError(RpsError, ValueError):
    pass


class ArgumentOrderError(DomainError):
    pass


class AlignmentError(RpsError, ValueError):
    """A time or shift does not sit on the simulation grid."""


class DivergenceError(RpsError, ArithmeticError):
    def __init__(self, step, time, magnitude):
        self.step = step
        self.time = time
        self.magnitude = magnitude
        super().__init__(
            f"state left the guard region at step {step} (t={time!r}, |x|={magnitude!r})"
        )


class NumericError(RpsError, ArithmeticError):
    pass


class PreconditionError(RpsError, ValueError):
    pass


class UnsupportedModelError(RpsError, TypeError):
    pass


class DegenerateFitError(RpsError, ValueError):
    pass
