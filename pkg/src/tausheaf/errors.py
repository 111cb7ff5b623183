"""Exception hierarchy shared by all modules."""


class TauSheafError(Exception):
    """Base class; ``code`` is the short name used in JSON reports."""

    code = "error"

    def __init__(self, message="", **context):
        super().__init__(message)
        self.context = context


class DegenerateInput(TauSheafError):
    code = "DegenerateInput"


class DenominatorCapExceeded(TauSheafError):
    code = "DenominatorCapExceeded"


class ExtensionCapExceeded(TauSheafError):
    code = "ExtensionCapExceeded"


class SingularMatrix(TauSheafError):
    code = "SingularMatrix"


class NotInvertible(TauSheafError):
    code = "NotInvertible"


class LangSearchExhausted(TauSheafError):
    code = "LangSearchExhausted"


class RootChoiceAmbiguous(TauSheafError):
    code = "RootChoiceAmbiguous"


class HypothesisViolated(TauSheafError):
    code = "HypothesisViolated"


class NotBlockTriangular(TauSheafError):
    code = "NotBlockTriangular"


class NilpotencyBoundExceeded(TauSheafError):
    code = "NilpotencyBoundExceeded"


class DimensionMismatch(TauSheafError):
    code = "DimensionMismatch"


class BasesInequivalent(TauSheafError):
    code = "BasesInequivalent"


class UnsupportedShape(TauSheafError):
    code = "UnsupportedShape"


class NotNilpotent(TauSheafError):
    code = "NotNilpotent"


class TailNotDominated(TauSheafError):
    code = "TailNotDominated"


class MismatchDetected(TauSheafError):
    code = "MismatchDetected"


class InfeasibleCell(TauSheafError):
    code = "InfeasibleCell"


class ParseError(TauSheafError):
    code = "ParseError"

    def __init__(self, message, line=None, column=None):
        loc = ""
        if line is not None:
            loc = f" (line {line}, column {column})"
        super().__init__(message + loc, line=line, column=column)
        self.line = line
        self.column = column
