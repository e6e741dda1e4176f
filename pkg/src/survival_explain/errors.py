"""Exception types shared across the toolkit."""


class InputError(ValueError):
    """Invalid user-supplied data or parameters."""


class NumericError(RuntimeError):
    """A computation failed or produced an undefined result."""


class FitError(NumericError):
    """Model fitting did not produce a usable estimate."""
