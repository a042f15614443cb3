"""Exception types shared across the package.

The CLI maps each one to a distinct exit status.
"""


class ConfigError(ValueError):
    """Malformed input: bad law specification, missing key, unsorted grid."""


class DomainError(ValueError):
    """Parameters outside the region where a quantity is defined."""


class ConsistencyError(RuntimeError):
    """Two routes to the same quantity disagree (closed form vs optimizer)."""
