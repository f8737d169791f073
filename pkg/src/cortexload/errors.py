"""Exception hierarchy.

Errors are grouped by pipeline stage so the command line can map each group
to its own exit status.
"""


class CortexloadError(Exception):
    """Base class for every error raised by this package."""


# numerics / model construction
class DimensionError(CortexloadError, ValueError):
    pass


class ConfigurationError(CortexloadError, ValueError):
    pass


class ContractError(CortexloadError, ValueError):
    pass


class LabelError(CortexloadError, ValueError):
    pass


# data ingestion and preprocessing
class PipelineError(CortexloadError):
    """Raised by the preprocessing stages; ``stage`` names the failing step."""

    def __init__(self, message, stage=None):
        super().__init__(message if stage is None else f"[{stage}] {message}")
        self.stage = stage


class ParseError(CortexloadError, ValueError):
    def __init__(self, message, path=None, line=None):
        where = ""
        if path is not None:
            where = f"{path}:{line}: " if line is not None else f"{path}: "
        super().__init__(where + message)
        self.path = path
        self.line = line


class IngestionError(PipelineError):
    pass


class FilterDesignError(PipelineError):
    pass


class ConvergenceError(PipelineError):
    def __init__(self, message, delta):
        super().__init__(f"{message} (final delta {delta:.3e})", stage="ica")
        self.delta = delta


class RankError(PipelineError):
    pass


class LabelingError(PipelineError):
    pass


class StratificationError(PipelineError):
    pass


# training
class TrainingError(CortexloadError):
    pass


class NumericError(TrainingError):
    pass


class StatisticsError(CortexloadError, ValueError):
    pass
