"""Exceptions raised by the pathsig library.

All of them subclass ValueError so callers that only care about bad input
can catch that.
"""


class PathSignatureError(Exception):
    """Base class for every error raised by pathsig."""


class SpaceMismatchError(PathSignatureError, ValueError):
    pass


class FieldError(PathSignatureError, ValueError):
    pass


class NotGroupElementError(PathSignatureError, ValueError):
    pass


class ConstantTermError(PathSignatureError, ValueError):
    pass


class WordError(PathSignatureError, ValueError):
    pass


class ShapeError(PathSignatureError, ValueError):
    pass


class NonFiniteValueError(PathSignatureError, ValueError):
    pass


class SerializationError(PathSignatureError, ValueError):
    pass
