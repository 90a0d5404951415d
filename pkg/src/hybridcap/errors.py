"""Exception hierarchy shared by every module."""


class HybridCapError(Exception):
    """Base class for all toolkit errors."""


class DomainError(HybridCapError, ValueError):
    """An argument lies outside the domain of a formula."""


class InconsistentError(HybridCapError, ValueError):
    """Redundant inputs disagree beyond tolerance."""


class RegimeError(HybridCapError, ValueError):
    """A regime-specific approximation was used outside its validity region."""


class ConvergenceError(HybridCapError, RuntimeError):
    """A numerical refinement did not reach the requested tolerance."""


class ConfigError(HybridCapError, ValueError):
    """A sweep or CLI configuration is malformed."""
