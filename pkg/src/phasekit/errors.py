"""Exception types raised by phasekit."""


class PhasekitError(Exception):
    """Base class for all phasekit errors."""


class ValidationError(PhasekitError, ValueError):
    """An input object violates its declared invariants."""


class TruncationError(PhasekitError):
    """Truncation of the Fock space loses more weight than allowed."""


class ConvergenceError(PhasekitError, ArithmeticError):
    """A series did not converge within its term budget."""


class ConfigError(PhasekitError, ValueError):
    """A run configuration violates a precondition."""


class SpecParseError(PhasekitError, ValueError):
    """A textual state/observable spec could not be parsed.

    ``position`` is the 0-based character offset where parsing failed.
    """

    def __init__(self, message, text="", position=0):
        self.text = text
        self.position = position
        super().__init__(f"{message} (at position {position} in {text!r})")
