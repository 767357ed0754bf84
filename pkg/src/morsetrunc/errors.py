"""Exception hierarchy shared by every module of the package."""

from __future__ import annotations


class MorseTruncError(ValueError):
    """Base class for all domain errors raised by morsetrunc."""


class TreeError(MorseTruncError):
    pass


class DepthMismatch(TreeError):
    pass


class MissingMarking(TreeError):
    pass


class EmptyInternalNode(TreeError):
    pass


class UnknownBundle(TreeError):
    pass


class InvalidRefinement(TreeError):
    pass


class TreeFormatError(TreeError):
    """Malformed tree JSON (bad rational, duplicate labels, wrong shape)."""


class PointOffSimplex(MorseTruncError):
    pass


class ExactUnsupported(MorseTruncError):
    pass


class ZeroSamples(MorseTruncError):
    pass


class QOutOfRange(MorseTruncError):
    pass


class IndivisibleTwist(MorseTruncError):
    pass


class LevelOutOfRange(MorseTruncError):
    pass


class NonPolynomialTail(MorseTruncError):
    pass


class IndexOutOfRange(MorseTruncError):
    pass
