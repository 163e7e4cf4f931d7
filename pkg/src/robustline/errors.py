"""Exception types shared across the toolkit."""


class DataError(ValueError):
    """Bad input data or a violated operation precondition.

    The CLI maps this (and I/O errors) to exit code 2, as opposed to
    usage errors (exit 1) and internal bugs (traceback).
    """


class TrainingDiverged(RuntimeError):
    """Raised when a training run produces a non-finite loss or gradient."""

    def __init__(self, message: str, epoch: int, step: int):
        super().__init__(message)
        self.epoch = epoch
        self.step = step
