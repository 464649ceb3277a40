"""Exception types shared across the package.

The CLI maps these onto process exit codes (config 2, numeric 3, data 4).
"""


class SparseLRError(Exception):
    """Base class for all package-specific errors."""


class InvalidShapeError(SparseLRError):
    """Array shapes are inconsistent with the operation's contract."""


class InvalidLabelError(SparseLRError):
    """A class label lies outside the valid range."""


class DegenerateBatchError(SparseLRError):
    """Batch statistics requested on a minibatch of fewer than 2 rows."""


class NumericFaultError(SparseLRError):
    """NaN/Inf encountered where finite values are required."""


class MissingInputError(SparseLRError):
    """An operation was invoked without a required input."""


class InvalidRateError(SparseLRError):
    """A pruning rate outside [0, 1)."""


class ExhaustedLayerError(SparseLRError):
    """Structured pruning would leave a layer with no neurons."""


class EmptySampleError(SparseLRError):
    """A statistic was requested over an empty sample."""


class ConfigError(SparseLRError):
    """Malformed or invalid experiment configuration."""


class DataFormatError(SparseLRError):
    """A dataset file does not conform to its binary format."""
