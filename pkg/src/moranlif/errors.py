"""Exception hierarchy.

Input problems derive from :class:`InputError` and numerical failures from
:class:`NumericalError`; the command line maps them to exit codes 2 and 3.
"""


class MoranLifError(Exception):
    """Base class for every error raised by the package."""


class InputError(MoranLifError, ValueError):
    pass


class NumericalError(MoranLifError, ArithmeticError):
    pass


class DimensionMismatch(InputError):
    pass


class IndexOutOfRange(InputError, IndexError):
    pass


class InvalidLattice(InputError):
    pass


class GalFormatError(InputError):
    pass


class EmptyRange(InputError):
    pass


class MissingColumn(InputError):
    pass


class NonNumericValue(InputError):
    def __init__(self, row, column, value):
        self.row = row
        self.column = column
        self.value = value
        super().__init__(f"row {row}: column {column!r} holds non-numeric value {value!r}")


class MissingValue(InputError):
    def __init__(self, column, rows):
        self.column = column
        self.rows = list(rows)
        shown = ", ".join(str(r) for r in self.rows[:10])
        more = " ..." if len(self.rows) > 10 else ""
        super().__init__(
            f"{len(self.rows)} row(s) with missing {column!r} rejected (rows {shown}{more})"
        )


class DuplicateId(InputError):
    def __init__(self, ident, row=None):
        self.ident = ident
        self.row = row
        where = f" at row {row}" if row is not None else ""
        super().__init__(f"duplicate id {ident!r}{where}")


class EmptyDataset(InputError):
    pass


class MalformedGeoJson(InputError):
    pass


class JoinKeyMissing(InputError):
    pass


class ZeroVariance(NumericalError):
    """All raw values are equal, so the standardized vector is undefined."""


class SingularSystem(NumericalError):
    pass
