"""Entanglement and parity breaking in dimerized spin-s XY chains in a transverse field.

Submodules: ``spin`` (operators, density matrices), ``pair`` (a single pair),
``meanfield`` (self-consistent pair mean field), ``entanglement``,
``chain`` (exact diagonalization), ``largespin`` and ``cli``.
"""

from .pair import ModelParams
from .policy import (
    DEFAULT_POLICY,
    DimerlabError,
    DomainError,
    NonConvergenceError,
    NumericPolicy,
    ResourceLimitError,
)

__all__ = [
    "ModelParams",
    "NumericPolicy",
    "DEFAULT_POLICY",
    "DimerlabError",
    "DomainError",
    "NonConvergenceError",
    "ResourceLimitError",
]
