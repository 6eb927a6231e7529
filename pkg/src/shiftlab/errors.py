"""Exception hierarchy shared by all shiftlab modules.

Every error carries a short machine-readable ``code`` so the command line
front end can turn it into a JSON error record.
"""


class ShiftLabError(Exception):
    code = "error"

    def __init__(self, message, **details):
        super().__init__(message)
        self.details = details

    def to_dict(self):
        out = {"error": self.code, "message": str(self)}
        for key, value in self.details.items():
            out[key] = value if isinstance(value, (int, str, bool, type(None))) else repr(value)
        return out


class InvalidArgument(ShiftLabError, ValueError):
    code = "invalid-argument"


class HorizonError(ShiftLabError):
    """A sequence or index set is not decidable far enough."""
    code = "horizon-error"


class BudgetError(ShiftLabError):
    code = "budget-error"


class EmptyShiftError(ShiftLabError):
    code = "empty-shift"


class ParseError(ShiftLabError):
    code = "parse-error"


class NotFoundError(ShiftLabError):
    code = "not-found"


class RatioViolation(ShiftLabError):
    code = "ratio-violation"
