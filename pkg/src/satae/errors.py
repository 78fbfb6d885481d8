"""Exception types raised across the package."""


class SataeError(Exception):
    """Base class for all package errors."""


class EmptySaturationSet(SataeError):
    """The activation has no flat region, so the saturation penalty is undefined."""


class DimensionMismatch(SataeError, ValueError):
    pass


class ShapeMismatch(SataeError, ValueError):
    pass


class GridTooCoarse(SataeError, ValueError):
    pass


class TiedModeReprojection(SataeError):
    """Decoder reprojection was requested on a tied-weight model."""


class NonFiniteLoss(SataeError, FloatingPointError):
    def __init__(self, message, alpha=None, epoch=None):
        super().__init__(message)
        self.alpha = alpha
        self.epoch = epoch


class BadMagic(SataeError, ValueError):
    pass


class TruncatedFile(SataeError, ValueError):
    pass


class PatchTooLarge(SataeError, ValueError):
    pass


class NotTwoDimensional(SataeError, ValueError):
    pass
