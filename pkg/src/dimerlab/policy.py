"""Numeric tolerances and error types shared by every module."""

from __future__ import annotations

from dataclasses import dataclass, fields, replace


class DimerlabError(Exception):
    """Base class for library errors."""


class DomainError(DimerlabError, ValueError):
    """Input outside the domain where an operation is defined."""


class ResourceLimitError(DimerlabError):
    """Requested Hilbert-space dimension exceeds the configured cap."""


class NonConvergenceError(DimerlabError):
    """An iterative procedure did not reach its tolerance.

    ``best_residual`` carries the smallest residual seen, ``where`` an optional
    description of the offending point (used by the CLI for exit code 2).
    """

    def __init__(self, message: str, best_residual: float = float("nan"), where: str = ""):
        super().__init__(message)
        self.best_residual = best_residual
        self.where = where


@dataclass(frozen=True)
class NumericPolicy:
    assembly_tol: float = 1e-12
    eig_residual: float = 1e-9
    psd_slack: float = 1e-10
    trace_tol: float = 1e-10
    norm_tol: float = 1e-8
    negativity_cutoff: float = 1e-12
    entropy_cutoff: float = 1e-14
    schmidt_cutoff: float = 1e-12
    dense_max_dim: int = 8192
    max_dim: int = 2_000_000
    lanczos_maxiter: int = 20000
    mf_tol: float = 1e-10
    mf_max_iter: int = 5000
    mf_damping: float = 0.5
    mf_tie_tol: float = 1e-10
    phase_threshold: float = 1e-6
    degeneracy_tol: float = 1e-9
    crossing_grid: int = 400
    crossing_tol: float = 1e-10

    def updated(self, **overrides) -> "NumericPolicy":
        known = {f.name: f.type for f in fields(self)}
        unknown = set(overrides) - set(known)
        if unknown:
            raise KeyError(f"unknown numeric policy keys: {sorted(unknown)}")
        cast = {k: type(getattr(self, k))(v) for k, v in overrides.items()}
        return replace(self, **cast)


DEFAULT_POLICY = NumericPolicy()
