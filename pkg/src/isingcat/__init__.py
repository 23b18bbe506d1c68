"""Driven, dissipative Ising chains of two-level systems and their
Schrodinger-cat steady states."""

from .chain import ChainSpec, build_eigenstructure
from .bath import BathSpec, CouplingSpec
from .partition import build_partition

__all__ = ["ChainSpec", "BathSpec", "CouplingSpec", "build_eigenstructure",
           "build_partition"]
__version__ = "0.1.0"
