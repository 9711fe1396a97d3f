"""Exception types raised across the package."""


class DifAltGDminError(Exception):
    """Base class for all errors raised by this package."""


class RankDeficient(DifAltGDminError):
    """A matrix that must have full column rank does not."""


class DimensionMismatch(DifAltGDminError, ValueError):
    pass


class NotSymmetric(DifAltGDminError, ValueError):
    pass


class InvalidSpectrum(DifAltGDminError, ValueError):
    pass


class InsufficientSamples(DifAltGDminError, ValueError):
    def __init__(self, required, available):
        super().__init__(
            f"sample splitting needs at least {required} samples per task, got {available}"
        )
        self.required = required
        self.available = available


class DisconnectedAfterRetries(DifAltGDminError):
    def __init__(self, max_retries, l_nodes, p):
        super().__init__(
            f"no connected Erdos-Renyi graph with L={l_nodes}, p={p} "
            f"after {max_retries} draws"
        )
        self.max_retries = max_retries


class NonpositiveEstimate(DifAltGDminError, ValueError):
    pass


class ConfigError(DifAltGDminError, ValueError):
    """Invalid experiment configuration; the message names the offending field."""


class MissingColumns(DifAltGDminError, ValueError):
    pass
