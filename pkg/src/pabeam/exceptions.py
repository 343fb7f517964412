"""Custom exceptions for the photoacoustic beamforming toolkit."""


class BeamformingError(Exception):
    """Base exception for the beamforming toolkit.

    All custom exceptions inherit from this class and include
    a code for programmatic error handling.
    """

    def __init__(self, code: str, message: str):
        """Initialize exception.

        Args:
            code: Error code for programmatic handling
            message: Human-readable error message
        """
        self.code = code
        self.message = message
        super().__init__(f"{code}: {message}")

    def to_dict(self) -> dict:
        """Convert exception to dictionary format.

        Returns:
            Dictionary with code and message
        """
        return {"error_code": self.code, "message": self.message}


class FileError(BeamformingError):
    """Exception for file-related errors."""

    def __init__(self, message: str):
        """Initialize a FileError exception with a descriptive message.

        Args:
            message: A human-readable description of the file-related error.
        """
        super().__init__("FILE_ERROR", message)


class FormatError(BeamformingError):
    """Exception for malformed RF files and configuration lines."""

    def __init__(self, message: str):
        """Initialize a FormatError exception with a descriptive message.

        Args:
            message: A human-readable description of the format problem.
        """
        super().__init__("FORMAT_ERROR", message)


class ValidationError(BeamformingError):
    """Exception for violated invariants and preconditions.

    The message always starts with the name of the offending field or
    invariant, e.g. ``"sound_speed: Field required"``.
    """

    def __init__(self, message: str):
        """Initialize a ValidationError exception with a descriptive message.

        Args:
            message: A human-readable description of the validation error.
        """
        super().__init__("VALIDATION_ERROR", message)


class SolverError(BeamformingError):
    """Exception when a loaded covariance matrix cannot be solved."""

    def __init__(
        self,
        message: str,
        index: int | None = None,
        pixel: tuple[int, int] | None = None,
    ):
        """Initialize a SolverError exception.

        Args:
            message: A human-readable description of the solver failure.
            index: Flat batch index of the failing snapshot, when known.
            pixel: ``(ix, iz)`` image coordinates, attached by the image loop.
        """
        self.index = index
        self.pixel = pixel
        if pixel is not None:
            message = f"{message} at pixel (ix={pixel[0]}, iz={pixel[1]})"
        super().__init__("SOLVER_ERROR", message)


class MetricError(BeamformingError):
    """Exception when an image-quality metric is undefined for its input."""

    def __init__(self, message: str):
        """Initialize a MetricError exception with a descriptive message.

        Args:
            message: A human-readable description of the metric error.
        """
        super().__init__("METRIC_ERROR", message)


def classify_exception(error: Exception) -> BeamformingError:
    """Classify a generic exception into a BeamformingError.

    Args:
        error: The exception to classify

    Returns:
        Appropriate BeamformingError subclass
    """
    if isinstance(error, BeamformingError):
        return error

    # Imported lazily so this module stays importable without the numeric stack
    import numpy as np
    import pydantic

    if isinstance(error, pydantic.ValidationError):
        return ValidationError(format_pydantic_error(error))

    if isinstance(error, np.linalg.LinAlgError):
        return SolverError(str(error))

    if isinstance(error, OSError):
        return FileError(str(error))

    root_message = _root_cause_message(error).lower()
    full_context = f"{str(error)} {root_message}".lower()

    if any(
        keyword in full_context
        for keyword in ["file not found", "no such file", "cannot open", "permission denied"]
    ):
        return FileError(str(error))

    if "singular" in full_context:
        return SolverError(str(error))

    return BeamformingError("UNKNOWN", str(error))


def format_pydantic_error(error) -> str:
    """Flatten a pydantic validation error into ``field: message`` pairs.

    Args:
        error: A ``pydantic.ValidationError``

    Returns:
        Semicolon-separated description naming every offending field
    """
    parts = []
    for item in error.errors():
        location = ".".join(str(part) for part in item.get("loc", ()))
        message = str(item.get("msg", "invalid value"))
        # Value errors raised by our validators already start with the field name
        message = message.removeprefix("Value error, ")
        if not location or message.startswith(f"{location}:"):
            parts.append(message)
        else:
            parts.append(f"{location}: {message}")
    return "; ".join(parts)


def _root_cause_message(error: BaseException) -> str:
    """Extract a concise root-cause message from nested exceptions.

    Args:
        error: The exception to analyze

    Returns:
        String representation of the root cause
    """
    try:
        exceptions_attr = getattr(error, "exceptions", None)
        if exceptions_attr and isinstance(exceptions_attr, (list, tuple)) and exceptions_attr:
            first = exceptions_attr[0]
            if isinstance(first, BaseException):
                return _root_cause_message(first)

        # Prefer explicit cause
        cause: BaseException | None = getattr(error, "__cause__", None)
        if cause is not None:
            return _root_cause_message(cause)

        context: BaseException | None = getattr(error, "__context__", None)
        if context is not None:
            return _root_cause_message(context)

        return str(error)
    except Exception:
        return str(error)
