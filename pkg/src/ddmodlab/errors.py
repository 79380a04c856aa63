"""Exception types shared across the toolkit."""


class DdmodlabError(Exception):
    """Base class for all toolkit errors."""


class UnsupportedOrder(DdmodlabError, ValueError):
    """Constellation order not representable (not a power of two / no square QAM)."""


class DimensionMismatch(DdmodlabError, ValueError):
    """Array shape inconsistent with the grid / antenna configuration."""


class TooManyPaths(DdmodlabError, ValueError):
    """More multipath components requested than distinct delay taps exist."""


class WrongBitCount(DdmodlabError, ValueError):
    """Bit vector length does not match the frame payload of the scheme."""


class IndexOutOfRange(DdmodlabError, ValueError):
    """A grid record carries an index outside its declared range."""


class InvalidSize(DdmodlabError, ValueError):
    """Spreading-code book parameters out of range."""


class UnsupportedScheme(DdmodlabError, ValueError):
    """Detector called with a scheme it does not handle."""


class SearchSpaceTooLarge(DdmodlabError, ValueError):
    """Exhaustive joint search would exceed the combinatorial guard."""


class CodebookMismatch(DdmodlabError, ValueError):
    """Walsh code book missing or inconsistent with the scheme parameters."""


class NegativeSaving(DdmodlabError, ValueError):
    """Index-modulation scheme has lower spectral efficiency than the baseline."""


class ConfigError(DdmodlabError, ValueError):
    """Experiment configuration failed strict validation."""
