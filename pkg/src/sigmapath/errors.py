"""Error taxonomy shared by all modules.

The CLI maps these onto process exit codes: configuration errors exit 2,
resource/budget errors exit 3, identity failures exit 1.
"""


class ConfigurationError(ValueError):
    """Bad user input: unknown catalog name, unsupported variant, empty test set."""


class ResourceBudgetError(RuntimeError):
    """A computation would exceed its declared budget (support size, steps, leaves)."""


class GridTooCoarseError(ResourceBudgetError):
    """A sampling grid is too coarse for the requested functional (e.g. winding step >= pi)."""


class NumericalConsistencyError(RuntimeError):
    """Two independent computation routes disagree beyond tolerance."""
