"""sigmapath: exact and Monte-Carlo checks for sigma-finite path measures."""

__version__ = "0.1.0"

from .chain import MarkovKernel, PathRecord, catalog, propagate, step  # noqa: F401
