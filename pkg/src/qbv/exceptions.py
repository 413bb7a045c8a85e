"""Shared exception types."""


class DegenerateInputError(ValueError):
    """Raised when an input carries no usable signal (zero-norm feature,
    all-zero waveform).  The HTTP service maps this to status 422."""
