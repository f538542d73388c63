"""Exception types shared across the package."""


class BevliftError(Exception):
    """Base class for all package errors."""


class IoFailure(BevliftError):
    """A file could not be read or written."""


class FormatError(BevliftError):
    """A file's contents do not match the declared format."""


class EmptyCloud(BevliftError):
    """Operation requires a nonempty point cloud."""


class OutOfRange(BevliftError):
    """Point lies outside the grid range."""


class DomainError(BevliftError):
    """Scalar argument outside its documented domain."""


class NotNormalized(BevliftError):
    """Intensities must lie in [0, 1] before rasterization."""


class BadKernel(BevliftError):
    """Dilation kernel must be an odd positive integer."""


class BadArgs(BevliftError):
    """Non-positive grid/prompt arguments."""


class LengthMismatch(BevliftError):
    """RLE counts do not sum to h*w."""


class NegativeCount(BevliftError):
    """RLE counts must be non-negative."""


class EmptyMask(BevliftError):
    """Operation requires a mask with at least one foreground pixel."""


class EmptyInput(BevliftError):
    """Operation requires at least one input point."""


class SegmenterUnavailable(BevliftError):
    """The segmenter endpoint reported a failure or is unreachable."""


class SegmenterTimeout(BevliftError):
    """No segmenter response within the configured timeout."""


class ProtocolError(BevliftError):
    """Malformed segmenter response."""


class NoSupportingPoints(BevliftError):
    """No LiDAR points fall inside the detected footprint."""


class PlacementFailure(BevliftError):
    """Synthetic scene placement could not satisfy the minimum gap."""


class FrameIdMismatch(BevliftError):
    """Detection and ground-truth files cover different frame ids."""


class ConfigError(BevliftError):
    """Invalid pipeline configuration."""
