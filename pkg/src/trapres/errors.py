"""Exception hierarchy shared by all modules."""


class TrapresError(Exception):
    """Base class for every error raised by the package."""


class ValidationError(TrapresError):
    """One or more geometry invariants are violated.

    ``violations`` holds one ``(name, message)`` pair per failed invariant so
    callers can report all of them at once.
    """

    def __init__(self, violations):
        self.violations = list(violations)
        msg = "; ".join(f"{name}: {text}" for name, text in self.violations)
        super().__init__(msg)

    @property
    def names(self):
        return [name for name, _ in self.violations]


class NotCritical(ValidationError):
    pass


class DegenerateMode(ValidationError):
    pass


class NodalOpening(ValidationError):
    pass


class ApertureOutOfRange(ValidationError):
    pass


class BadEpsilon(ValidationError):
    pass


class OutOfDomain(TrapresError):
    pass


OutsideDomain = OutOfDomain


class NearSpectrum(TrapresError):
    pass


class CoincidentPoints(TrapresError):
    pass


class NoConvergence(TrapresError):
    pass


class PoleHit(TrapresError):
    pass


class AtPole(TrapresError):
    pass


class NearInteriorSpectrum(NearSpectrum):
    pass


class CountMismatch(TrapresError):
    def __init__(self, message, roots=None, count=None):
        super().__init__(message)
        self.roots = roots
        self.count = count


class IllConditioned(TrapresError):
    def __init__(self, message, cond=None):
        super().__init__(message)
        self.cond = cond


class NotConverged(TrapresError):
    pass


class OracleFailed(TrapresError):
    pass


class FitUnstable(TrapresError):
    pass


class ParseError(TrapresError):
    def __init__(self, line, key, message):
        self.line = line
        self.key = key
        super().__init__(f"line {line}: {key!r}: {message}")
