"""Exception hierarchy shared by the pipeline and the CLI."""


class TopicScoreError(Exception):
    """Base class for all errors raised by this package."""

    code = "error"


class ConfigError(TopicScoreError, ValueError):
    """Invalid user input: bad parameters, infeasible synthetic configs."""

    code = "invalid_config"


class CorpusFormatError(ConfigError):
    """A corpus file could not be parsed.

    ``lineno`` is the 1-based line of the offending record, or ``None`` when
    the problem is not tied to a single line.
    """

    code = "corpus_format"

    def __init__(self, message, lineno=None):
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)
        self.lineno = lineno


class NumericalError(TopicScoreError, ArithmeticError):
    """A numerical stage failed (eigen-gap too small, singular system, ...)."""

    code = "numerical_failure"
