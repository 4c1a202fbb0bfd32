"""Exception types shared across the package."""


class MvForgeError(Exception):
    """Base class for all package-specific errors."""


class EmptyInput(MvForgeError):
    """The input carried no rows or no columns."""


class MalformedCsv(MvForgeError):
    """CSV syntax error (e.g. unclosed quote). Carries the byte offset."""

    def __init__(self, message: str, offset: int, line: int):
        super().__init__(f"{message} (line {line}, offset {offset})")
        self.offset = offset
        self.line = line


class CardinalityError(MvForgeError):
    """A chart must encode between 1 and 4 columns."""


class ShapeError(MvForgeError):
    """Tensor dimensions do not match the declared model shapes."""


class VersionError(MvForgeError):
    """A serialized model carries an unsupported format version."""


class LayoutError(MvForgeError):
    """Feature-layout version of a model does not match the featurizer."""


class CorruptError(MvForgeError):
    """A serialized model failed structural validation."""


class EmptyDataset(MvForgeError):
    """A training or evaluation routine received no data."""


class EmptyMV(MvForgeError):
    """A multi-chart scoring call received a dashboard with no charts."""


class TooManyCharts(MvForgeError):
    """A dashboard exceeded the 12-chart sequence limit."""


class PositionError(MvForgeError):
    """A chart position index is out of range for the dashboard."""


class InfeasibleRequest(MvForgeError):
    """A recommendation request cannot be satisfied under its constraints."""


class InsufficientHistory(MvForgeError):
    """A provenance log has fewer than two distinct dashboard snapshots."""


class SessionClosed(MvForgeError):
    """An operation was attempted on a closed authoring session."""


class UnknownVersion(MvForgeError):
    """A history restore referenced a sequence number with no snapshot."""


class ConsentDenied(MvForgeError):
    """Log export was requested for a session without storage consent."""
