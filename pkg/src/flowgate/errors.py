"""Exception types shared across the pipeline."""


class FlowgateError(Exception):
    """Base class for every error raised by this package."""


# file formats

class BadMagic(FlowgateError):
    """Sentinel or header of a binary provider file is invalid."""


class Truncated(FlowgateError):
    """Buffer is shorter than its header implies."""


class NonFinite(FlowgateError):
    """A NaN or Inf component where only finite values are allowed."""


# geometry

class DimensionMismatch(FlowgateError):
    """Two rasters that must share dimensions do not."""


class Degenerate(FlowgateError):
    """Too few or collinear correspondences for a homography fit."""


class NoConsensus(FlowgateError):
    """RANSAC inlier ratio fell below the configured floor."""


class ProjectionAtInfinity(FlowgateError):
    """Homography denominator vanishes inside the frame."""


# event splitting

class TooFewFrames(FlowgateError):
    """Operation needs at least two frames."""


class BoundaryOutOfRange(FlowgateError):
    """Split boundary outside the open interval (0, frame_count)."""


# event selection

class EmptyEventList(FlowgateError):
    """Significance requires at least one event."""


class KTooLarge(FlowgateError):
    """Top-k selection with k above the event count."""


class TooManyEvents(FlowgateError):
    """Exhaustive subset enumeration guard tripped."""


# token pruning

class AllZeroScore(FlowgateError):
    """Score field has no positive support; caller keeps the frame unpruned."""


class GridTooFine(FlowgateError):
    """Patch grid is finer than the score field."""


class CountMismatch(FlowgateError):
    """Token list length does not match the mask grid."""


# planning

class CountExceedsLength(FlowgateError):
    """More frames requested from an event than it contains."""


class AnchorsExceedBudget(FlowgateError):
    """Anchor frames alone already exceed the token budget."""


class MissingMask(FlowgateError):
    """A sampled non-anchor frame has no token mask."""


class TokenBudgetExceeded(FlowgateError):
    """Assembled plan's recomputed token total exceeds the base budget."""


# providers

class ProviderFailure(FlowgateError):
    """A flow, saliency, or embedding provider could not deliver."""
