"""Pipeline error types and their exit codes."""


class PipelineError(Exception):
    """Base class for fatal pipeline errors.

    Every subclass names the stage it belongs to and the process exit code the
    CLI reports for it.
    """

    stage = "pipeline"
    code = 1

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message

    def to_dict(self) -> dict:
        """Machine-readable form printed by the CLI on failure."""
        return {"stage": self.stage, "code": self.code, "message": self.message}


class ConfigurationError(PipelineError):
    stage = "config"
    code = 2


class IngestError(PipelineError):
    stage = "ingest"
    code = 3


class ResolutionError(PipelineError):
    stage = "resolve"
    code = 4


class NetworkError(PipelineError):
    stage = "network"
    code = 5


class PercolationError(PipelineError):
    stage = "percolate"
    code = 6


class IndicatorError(PipelineError):
    stage = "indicators"
    code = 7
