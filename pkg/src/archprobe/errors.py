"""Exception hierarchy shared across the package."""


class ArchprobeError(Exception):
    """Base class for all errors raised by archprobe."""


class ProfileParseError(ArchprobeError):
    """Malformed profiler log. Carries the offending line number when known."""

    def __init__(self, message, line=None, path=None):
        self.message = message
        self.line = line
        self.path = path
        prefix = ""
        if path is not None:
            prefix += f"{path}: "
        if line is not None:
            prefix += f"line {line}: "
        super().__init__(prefix + message)


class UnitError(ProfileParseError):
    """Unknown or missing time unit in a duration token."""


class InvariantError(ArchprobeError):
    """A domain value violates one of its structural invariants."""


class UnknownArchitectureError(ArchprobeError):
    """Architecture name has no family mapping."""


class FeatureError(ArchprobeError):
    """Invalid featurization request (empty corpus, empty projection, ...)."""


class TrainingError(ArchprobeError):
    """Invalid classifier input: degenerate classes, non-finite values,
    dimension mismatches between fit and predict."""


class EvaluationError(ArchprobeError):
    """Invalid evaluation input (labels outside the candidate set, ...)."""


class SelectionError(ArchprobeError):
    """Invalid feature-selection request (unsupported estimator, bad m)."""


class SynthSpecError(ArchprobeError):
    """Invalid synthetic-corpus specification."""


class TraceError(ArchprobeError):
    """Malformed profiler trace document."""


class ConfigError(ArchprobeError):
    """Invalid run configuration (CLI or pipeline)."""
