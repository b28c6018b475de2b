"""Exception types shared across the package."""


class ParameterError(ValueError):
    """An argument or configuration value is out of range or inconsistent."""


class ShapeError(ValueError):
    """Array dimensions do not match what an operation expects."""


class FormatError(ValueError):
    """A binary or text artifact file is malformed; message names the offset."""


class NumericError(ArithmeticError):
    """A numerical guarantee (hermiticity, unitarity, bounded fidelity) failed."""


class TrainingDivergedError(NumericError):
    """The training loss became non-finite."""

    def __init__(self, epoch, batch, message=None):
        self.epoch = epoch
        self.batch = batch
        super().__init__(
            message or f"training diverged at epoch {epoch}, batch {batch}"
        )


class AnalysisError(NumericError):
    """A post-hoc analysis cannot produce a meaningful result on this input."""
