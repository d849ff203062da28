"""Exception hierarchy shared across the package."""


class LipLinkError(Exception):
    """Base class for all liplink errors."""


# -- container / file format --

class BadMagic(LipLinkError):
    pass


class TruncatedStream(LipLinkError):
    pass


class ZeroDimension(LipLinkError):
    pass


class ChecksumMismatch(LipLinkError):
    pass


class SpecMismatch(LipLinkError):
    pass


# -- structured text parsing --

class SchemaError(LipLinkError):
    pass


class WrongPointCount(SchemaError):
    pass


class DuplicateText(SchemaError):
    pass


# -- geometry / preprocessing --

class DegenerateBox(LipLinkError):
    """All mouth points coincide; caller should fall back to a heuristic crop."""


# -- tensor math --

class ShapeMismatch(LipLinkError):
    pass


class OddDimension(LipLinkError):
    pass


class LabelOutOfRange(LipLinkError):
    pass


class BadK(LipLinkError):
    pass


# -- dataset --

class EmptyDataset(LipLinkError):
    pass


class EmptySplit(LipLinkError):
    pass


class BadParams(LipLinkError):
    pass


class LengthMismatch(LipLinkError):
    pass


# -- storage --

class NotFound(LipLinkError):
    pass
