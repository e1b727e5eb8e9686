"""Negativity, entropies and entanglement spectra of bipartite states."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .policy import DEFAULT_POLICY, DomainError, NumericPolicy
from .spin import DensityMatrix, partial_trace, partial_transpose

__all__ = [
    "EntanglementReport",
    "negativity",
    "pure_state_negativity",
    "entropy",
    "entanglement_spectrum",
    "schmidt_coefficients",
    "report",
]


@dataclass
class EntanglementReport:
    negativity: float
    entropy: float
    spectrum: np.ndarray
    schmidt_rank: int


def negativity(rho: DensityMatrix, policy: NumericPolicy = DEFAULT_POLICY) -> float:
    """``(Tr|rho^T2| - 1)/2``, i.e. minus the sum of negative eigenvalues of
    the partial transpose. Eigenvalues above ``-negativity_cutoff`` count as zero."""
    if len(rho.dims) != 2:
        raise DomainError("negativity needs a bipartite density matrix")
    w = np.linalg.eigvalsh(partial_transpose(rho, 1))
    return float(-w[w < -policy.negativity_cutoff].sum())


def schmidt_coefficients(psi: np.ndarray, dims: Sequence[int]) -> np.ndarray:
    da, db = dims
    psi = np.asarray(psi)
    if psi.size != da * db:
        raise DomainError(f"state of size {psi.size} does not match dims {tuple(dims)}")
    return np.linalg.svd(psi.reshape(da, db), compute_uv=False)


def _check_norm(psi: np.ndarray, policy: NumericPolicy) -> None:
    norm = np.linalg.norm(psi)
    if abs(norm - 1) > policy.norm_tol:
        raise DomainError(f"state is not normalized (norm {norm!r})")


def pure_state_negativity(psi: np.ndarray, dims: Sequence[int], policy: NumericPolicy = DEFAULT_POLICY) -> float:
    """``((Tr sqrt(rho_1))^2 - 1)/2`` for a pure bipartite state.

    ``Tr sqrt(rho_1)`` is the sum of Schmidt coefficients, so this equals the
    sum over pairs ``i<j`` of products of Schmidt coefficients.
    """
    _check_norm(psi, policy)
    sv = schmidt_coefficients(psi, dims)
    return float((sv.sum() ** 2 - 1) / 2)


def entropy(rho: DensityMatrix, policy: NumericPolicy = DEFAULT_POLICY) -> float:
    """Von Neumann entropy in bits."""
    p = np.linalg.eigvalsh(rho.rho)
    p = p[p > policy.entropy_cutoff]
    return float(max(0.0, -(p * np.log2(p)).sum()))


def entanglement_spectrum(psi: np.ndarray, dims: Sequence[int]) -> np.ndarray:
    """Eigenvalues of the first-side reduced state, descending, zero padded
    to the first subsystem dimension."""
    sv = schmidt_coefficients(psi, dims)
    out = np.zeros(dims[0])
    out[: sv.size] = np.sort(sv**2)[::-1]
    return out


def report(psi: np.ndarray, dims: Sequence[int], policy: NumericPolicy = DEFAULT_POLICY) -> EntanglementReport:
    spec = entanglement_spectrum(psi, dims)
    rho1 = partial_trace(DensityMatrix.from_state(psi, dims), 0)
    return EntanglementReport(
        negativity=pure_state_negativity(psi, dims, policy),
        entropy=entropy(rho1, policy),
        spectrum=spec,
        schmidt_rank=int((spec > policy.schmidt_cutoff).sum()),
    )
