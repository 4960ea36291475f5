"""Diagonal products, Følner tiling shifts and their orbit-equivalence coupling with Z."""

from .errors import CapExceeded, ConfigError, HypothesisError, InvariantError
from .groups import DihedralBackend, GroupBackend, TableBackend, cyclic_table, product_backend
from .schedule import Profile, Schedule, synthesize
from .delta import DeltaElement, DiagonalProduct

__all__ = [
    "CapExceeded",
    "ConfigError",
    "DeltaElement",
    "DiagonalProduct",
    "DihedralBackend",
    "GroupBackend",
    "HypothesisError",
    "InvariantError",
    "Profile",
    "Schedule",
    "TableBackend",
    "cyclic_table",
    "product_backend",
    "synthesize",
]
