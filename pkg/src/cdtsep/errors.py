"""Exception types shared across the package."""


class CdtsepError(Exception):
    """Base class for all package-specific errors."""


class AudioFormatError(CdtsepError, ValueError):
    """Raised for malformed or unreadable audio/model files."""


class UnsupportedEncodingError(CdtsepError, ValueError):
    """Raised for well-formed files in an encoding we do not handle."""


class UnsupportedRateError(CdtsepError, ValueError):
    """Raised when a resampling request is not an integer decimation."""


class DegenerateSignalError(CdtsepError, ValueError):
    """Raised for silent or constant signals where scaling is undefined."""


class FrameAlignmentError(CdtsepError, ValueError):
    """Raised when frame sets that must share geometry do not."""


class TrainingDivergedError(CdtsepError, RuntimeError):
    """Raised when training produces a non-finite parameter.

    The epoch (0-based) at which divergence was detected is stored on the
    exception so callers can report it.
    """

    def __init__(self, epoch: int):
        self.epoch = epoch
        super().__init__(f"training diverged: non-finite parameter after epoch {epoch}")


class DegenerateReferencesError(CdtsepError, ValueError):
    """Raised when reference signals are too collinear to project onto."""
