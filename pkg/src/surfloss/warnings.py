import warnings
from functools import wraps


class SurflossExperimentalWarning(Warning):
    """
    A feature is a qualitative stand-in, and its output should not be taken
    as quantitative.
    """


def experimental(message: str):
    """
    Marks an experimental feature
    """

    def _experimental(func):
        @wraps(func)
        def _inner(*args, **kwargs):
            warnings.warn(message, SurflossExperimentalWarning, stacklevel=2)
            return func(*args, **kwargs)

        return _inner

    return _experimental
