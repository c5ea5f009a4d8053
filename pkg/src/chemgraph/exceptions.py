"""Exception hierarchy shared by every chemgraph module."""


class ChemGraphError(Exception):
    """Base class for all errors raised by chemgraph."""


class ShapeError(ChemGraphError, ValueError):
    """Tensor dimensions do not agree."""


class EmptyAggregationError(ChemGraphError, ValueError):
    """An aggregation was asked to reduce zero rows."""


class NonFiniteError(ChemGraphError, ValueError):
    """A NaN or Inf value was produced or supplied."""


class GraphValidationError(ChemGraphError, ValueError):
    """A graph violates one or more GraphTensor invariants."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class EncodingError(ChemGraphError, ValueError):
    """A raw attribute could not be encoded by a feature schema."""


class NumericalError(ChemGraphError, ArithmeticError):
    """A linear system or factorization failed."""


class UndefinedMetricError(ChemGraphError, ValueError):
    """A metric is undefined for the supplied values."""


class TrainingError(ChemGraphError, RuntimeError):
    """Training diverged or was configured inconsistently."""


class CheckpointError(ChemGraphError, ValueError):
    """A checkpoint is malformed or does not match the data it is used with."""


class GraphFileError(ChemGraphError, ValueError):
    """A graph file is well-formed JSON but structurally invalid."""

    def __init__(self, problems):
        self.problems = [problems] if isinstance(problems, str) else list(problems)
        super().__init__("; ".join(self.problems))


class ParseError(ChemGraphError, ValueError):
    """A file could not be parsed; ``line`` and ``column`` are 1-based."""

    def __init__(self, path, message, line=None, column=None):
        self.path, self.line, self.column = path, line, column
        where = f"{path}:{line}:{column}" if line is not None else str(path)
        super().__init__(f"{where}: {message}")


class ConfigError(ChemGraphError, ValueError):
    """A run configuration is missing fields or disagrees with the data."""
