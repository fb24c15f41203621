"""Toolkit-wide exception types."""


class ShapeError(ValueError):
    """An image or vector does not match the shape a model expects."""


class TrainingDivergedError(RuntimeError):
    """A training loop produced a non-finite loss; traces are attached."""

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = history or []


class InversionDivergedError(RuntimeError):
    """Latent optimization hit a non-finite loss or gradient."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace or []


class CheckpointError(RuntimeError):
    """A checkpoint failed its integrity check (hash mismatch, missing file)."""


class CheckpointKindError(TypeError):
    """A checkpoint of one model kind was loaded as another."""


class CalibrationError(ValueError):
    """Threshold calibration received unusable pair data."""


class ConfigError(ValueError):
    """A run configuration failed validation."""

    def __init__(self, errors):
        super().__init__("; ".join(errors))
        self.errors = list(errors)


class StageError(RuntimeError):
    """A pipeline stage failed; carries the stage name for reporting."""

    def __init__(self, stage, cause):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause
