"""Exception hierarchy shared across the package."""


class HaprefError(Exception):
    """Base class for all package-specific errors."""


class ConfigurationError(HaprefError, ValueError):
    """Invalid configuration: bad catalog size, malformed config values."""


class ProtocolError(HaprefError):
    """A session transition was attempted that the protocol forbids."""


class PhaseError(ProtocolError):
    """Operation does not match the session's current phase."""


class SequencingError(ProtocolError):
    """A comparison was answered out of schedule order."""


class DuplicateResponseError(ProtocolError):
    """A response was recorded twice for the same prompt."""


class DegenerateScaleError(HaprefError, ValueError):
    """All strengths equal: the [-3, +3] normalization is undefined."""


class NonIdentifiableError(HaprefError, ValueError):
    """Comparison graph is not strongly connected and no regularization
    was requested, so the maximum-likelihood strengths diverge."""

    def __init__(self, components):
        self.components = [sorted(c) for c in components]
        parts = "; ".join(str(c) for c in self.components)
        super().__init__(
            f"comparison graph is not strongly connected "
            f"(components: {parts}); use alpha > 0 or collect more data"
        )
