"""Exception types shared across the package."""


class StyleBrushError(Exception):
    """Base class for all stylebrush errors."""


class ContainerFormatError(StyleBrushError):
    """Raised when a tensor container is malformed (bad magic/version,
    truncation, duplicate names, unknown dtype)."""


class ConfigurationError(StyleBrushError):
    """Raised when a backend is misconfigured, e.g. missing or
    shape-inconsistent weights."""


class EmptySelectionError(StyleBrushError):
    """Raised when a dip's weights vanish everywhere at feature resolution,
    so no style statistics can be extracted."""


class SolverError(StyleBrushError):
    """Raised when the conjugate gradient solver fails to converge.

    Carries the final relative residual and the iteration count.
    """

    def __init__(self, message: str, residual: float, iterations: int):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class NoBrushError(StyleBrushError):
    """Raised when painting is attempted before any dip loaded a brush."""


class NothingToUndoError(StyleBrushError):
    """Raised when undo is called with an empty checkpoint stack."""


class ResourceLimitError(StyleBrushError):
    """Raised when an input exceeds a hard resource limit (image size,
    style count)."""


class ScriptError(StyleBrushError):
    """Raised when a session script fails to parse or validate."""
