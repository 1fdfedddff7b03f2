"""Exception types shared across the package."""


class MskError(Exception):
    """Base class for errors raised by msk."""


class GateFailure(MskError):
    """A mathematical gate rejected the data.

    ``gate`` names the criterion that failed (``"convergence"``,
    ``"complete-monotonicity"``, ``"psd"``, ``"modulus"``, ...).
    """

    def __init__(self, gate, message, detail=None):
        super().__init__(message)
        self.gate = gate
        self.detail = detail


class NotConvergedError(GateFailure):
    def __init__(self, message, report=None):
        super().__init__("convergence", message, report)
        self.report = report


class MonotonicityError(GateFailure):
    def __init__(self, message, detail=None):
        super().__init__("complete-monotonicity", message, detail)


class ModulusSpreadError(GateFailure):
    def __init__(self, message, spread=None):
        super().__init__("modulus", message, spread)
        self.spread = spread


class ExactIdentityError(MskError):
    """An exact identity that must always hold did not.

    This indicates a bug, not bad input.
    """
