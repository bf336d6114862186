"""Exception hierarchy shared by the engine, dataset and harness layers."""


class DeaError(Exception):
    """Base class for every error raised by dea_app."""


class GeometryError(DeaError, ValueError):
    """Invalid box or polygon (non-positive extents, non-finite values)."""


class ConfigurationError(DeaError, ValueError):
    """Invalid configuration value or unknown configuration key."""


class CodecError(DeaError, ValueError):
    """Encode/decode precondition violated."""


class LossError(DeaError, ValueError):
    """Loss evaluated on a sample that cannot be a valid positive."""


class PredictionFormatError(DeaError):
    """Malformed row in a prediction file."""

    def __init__(self, message: str, line_no: int = 0):
        super().__init__(f"line {line_no}: {message}" if line_no else message)
        self.line_no = line_no


class AnnotationParseError(DeaError):
    """Raised when an annotation file contains malformed lines.

    `issues` holds every ParseIssue found and `scene` the objects that did
    parse, so callers can decide whether a partial scene is usable.
    """

    def __init__(self, issues, scene=None):
        self.issues = list(issues)
        self.scene = scene
        first = self.issues[0] if self.issues else None
        summary = f"{len(self.issues)} malformed line(s)"
        if first is not None:
            summary += f"; first at line {first.line_no}: {first.message}"
        super().__init__(summary)
