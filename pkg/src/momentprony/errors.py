"""Exception types raised by the reconstruction pipeline."""


class MomentError(ValueError):
    """Base class for invalid inputs to the moment machinery."""


class IncompleteMomentsError(MomentError):
    def __init__(self, missing, message=None):
        self.missing = tuple(missing) if missing is not None else None
        if message is None:
            message = f"moment table is missing index {self.missing}"
        super().__init__(message)


class SeparationError(MomentError):
    pass


class RankDeficientError(MomentError):
    pass


class NonIdentifiableError(RuntimeError):
    """The data do not determine the support at the requested order."""


class NoKernelError(NonIdentifiableError):
    pass


class SpectralGapError(NonIdentifiableError):
    pass
