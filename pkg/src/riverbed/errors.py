class NumericalError(RuntimeError):
    """Failure of a numerical solve (maps to CLI exit code 2)."""


class DryStateError(NumericalError):
    def __init__(self, message, time=None, cell=None):
        super().__init__(message)
        self.time = time
        self.cell = cell


class CFLError(NumericalError):
    def __init__(self, message, time=None, cell=None):
        super().__init__(message)
        self.time = time
        self.cell = cell


class SingularBoundaryError(NumericalError):
    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time
