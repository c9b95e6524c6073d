"""Exception types raised by the solvers and the config layer."""


class OQBMError(Exception):
    """Base class for every error raised by this package."""


class NonConvergence(OQBMError):
    """A principal-value integral did not reach its tolerance."""


class DegenerateBath(OQBMError):
    """J(omega) vanishes at the trap frequency, so gamma is undefined."""


class PositivityViolation(OQBMError):
    """The Kossakowski determinant came out negative."""


class UnknownKey(OQBMError, KeyError):
    def __init__(self, key, where="coefficients"):
        self.key = key
        super().__init__(f"unknown key {key!r} in {where}")

    def __str__(self):
        return self.args[0]


class MissingKey(OQBMError, KeyError):
    def __init__(self, key):
        self.key = key
        super().__init__(f"missing required key {key!r}")

    def __str__(self):
        return self.args[0]


class ParseError(OQBMError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


class GridTooNarrow(OQBMError):
    """The density reaches the Dirichlet boundary."""


class UnsupportedProfile(OQBMError):
    """Closed-form initial moments only exist for the unit Gaussian (j = 2)."""


class DegenerateAngle(OQBMError):
    """A log argument in the cumulant initial state is not positive."""


class DegenerateDistribution(OQBMError):
    """Variance is not positive, so standardized statistics are undefined."""


class BlowUp(OQBMError):
    """An integration produced non-finite or runaway values.

    ``time`` is the first time at which the failure was detected and
    ``partial`` carries whatever trajectory was recorded before it.
    """

    def __init__(self, message, time, partial=None):
        self.time = time
        self.partial = partial
        super().__init__(f"{message} (t = {time:.6g})")
