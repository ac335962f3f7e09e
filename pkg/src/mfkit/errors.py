"""Exception hierarchy.

Every error carries a stable machine-readable ``code`` used by the CLI.
Input problems map to exit status 2, numerical degeneracies to 3.
"""


class MultifractalError(Exception):
    code = "E_INTERNAL"
    exit_status = 1


class InputError(MultifractalError, ValueError):
    code = "E_INPUT"
    exit_status = 2


class NumericalError(MultifractalError, ArithmeticError):
    code = "E_DEGENERATE"
    exit_status = 3


class NonPositivePrice(InputError):
    def __init__(self, index, value=None):
        self.index = int(index)
        msg = f"non-positive price at index {self.index}"
        if value is not None:
            msg += f" ({value!r})"
        super().__init__(msg)


class AlignmentError(InputError):
    pass


class GridMismatch(InputError):
    pass


class WindowTooShort(InputError):
    pass


class ScaleTooLarge(InputError):
    pass


class EmptyFitRange(InputError):
    pass


class DegenerateSeries(NumericalError):
    pass


class InsufficientData(NumericalError):
    pass


class RankDeficientFit(NumericalError):
    pass


class DegenerateDetrend(NumericalError):
    pass


class NonContiguousValidity(NumericalError):
    pass


class ZeroDenominator(NumericalError):
    def __init__(self, scale):
        self.scale = scale
        super().__init__(f"single-series fluctuation function vanishes at scale {scale}")
