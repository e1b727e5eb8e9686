"""Spin-s operator algebra and small dense/sparse linear-algebra helpers.

Single-site basis is ordered by ascending ``m``: index 0 holds ``m = -s``.
Spins are passed around as the integer ``two_s`` so that half-integer
values never go through floating point.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .policy import DEFAULT_POLICY, DomainError, NonConvergenceError, NumericPolicy, ResourceLimitError

__all__ = [
    "SpinOps",
    "DensityMatrix",
    "spin_operators",
    "kron",
    "kron_chain",
    "hermitian_eig",
    "fix_phase",
    "partial_trace",
    "partial_transpose",
    "site_parity_chain",
    "parity_mask",
    "projector",
]


@dataclass(frozen=True)
class SpinOps:
    two_s: int
    sx: np.ndarray
    sy: np.ndarray
    sz: np.ndarray
    sp: np.ndarray
    sm: np.ndarray
    parity: np.ndarray

    @property
    def s(self) -> float:
        return self.two_s / 2

    @property
    def dim(self) -> int:
        return self.two_s + 1

    @property
    def m_values(self) -> np.ndarray:
        return np.arange(self.dim) - self.two_s / 2


def spin_operators(two_s: int) -> SpinOps:
    """Spin matrices for spin ``s = two_s/2`` built from the ladder operators.

    ``S+|m> = sqrt(s(s+1) - m(m+1)) |m+1>``; ``parity`` is ``(-1)^(m+s)``.
    """
    if int(two_s) != two_s or two_s < 1:
        raise DomainError(f"two_s must be a positive integer, got {two_s!r}")
    two_s = int(two_s)
    s = two_s / 2
    m = np.arange(two_s + 1) - s
    up = np.sqrt(s * (s + 1) - m[:-1] * (m[:-1] + 1))
    splus = np.diag(up, k=-1).astype(float)
    sminus = splus.T.copy()
    sx = (0.5 * (splus + sminus)).astype(complex)
    sy = (-0.5j * (splus - sminus)).astype(complex)
    sz = np.diag(m).astype(complex)
    parity = np.diag((-1.0) ** np.arange(two_s + 1))
    return SpinOps(two_s, sx, sy, sz, splus, sminus, parity)


def _check_dim(dim: int, policy: NumericPolicy) -> None:
    if dim > policy.max_dim:
        raise ResourceLimitError(f"dimension {dim} exceeds cap {policy.max_dim}")


def kron(a, b, policy: NumericPolicy = DEFAULT_POLICY):
    """Kronecker product; sparse if either factor is sparse."""
    _check_dim(a.shape[0] * b.shape[0], policy)
    if sp.issparse(a) or sp.issparse(b):
        return sp.kron(a, b, format="csr")
    return np.kron(a, b)


def kron_chain(factors: Sequence, policy: NumericPolicy = DEFAULT_POLICY):
    dim = int(np.prod([f.shape[0] for f in factors]))
    _check_dim(dim, policy)
    out = factors[0]
    for f in factors[1:]:
        out = kron(out, f, policy)
    return out


def fix_phase(vecs: np.ndarray) -> np.ndarray:
    """Rotate each column so its largest-magnitude entry is real positive."""
    vecs = np.asarray(vecs)
    single = vecs.ndim == 1
    if single:
        vecs = vecs[:, None]
    # first entry within rounding of the column maximum, so ties resolve stably
    mags = np.abs(vecs)
    idx = np.argmax(mags >= mags.max(axis=0) * (1 - 1e-9), axis=0)
    pivots = vecs[idx, np.arange(vecs.shape[1])]
    vecs = vecs * (np.abs(pivots) / pivots)
    return vecs[:, 0] if single else vecs


def _hermiticity_defect(m) -> float:
    if sp.issparse(m):
        d = m - m.conj().T
        return float(abs(d).max()) if d.nnz else 0.0
    return float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0


def hermitian_eig(m, k: int | None = None, policy: NumericPolicy = DEFAULT_POLICY):
    """Ascending eigenpairs of a Hermitian matrix.

    Dense input (or sparse of dimension ``<= policy.dense_max_dim``) goes to
    LAPACK; a sparse matrix with ``k`` set above the dense limit uses ARPACK's
    restarted Lanczos with a deterministic all-ones start vector, and every
    returned pair is checked against ``policy.eig_residual``.
    """
    n = m.shape[0]
    if m.shape != (n, n):
        raise DomainError("matrix must be square")
    scale = max(1.0, _max_abs(m))
    if _hermiticity_defect(m) > policy.assembly_tol * scale * 10:
        raise DomainError("matrix is not Hermitian")

    if k is not None and sp.issparse(m) and n > policy.dense_max_dim and k < n - 1:
        v0 = np.ones(n) / np.sqrt(n)
        try:
            w, v = spla.eigsh(m, k=k, which="SA", v0=v0, tol=0, maxiter=policy.lanczos_maxiter)
        except spla.ArpackNoConvergence as exc:
            raise NonConvergenceError(f"Lanczos did not converge for k={k}") from exc
        order = np.argsort(w)
        w, v = w[order], v[:, order]
        res = np.linalg.norm(m @ v - v * w, axis=0)
        if np.any(res > policy.eig_residual * scale):
            raise NonConvergenceError("Lanczos residual above tolerance", best_residual=float(res.max()))
        return w, fix_phase(v)

    dense = m.toarray() if sp.issparse(m) else np.asarray(m)
    if k is None:
        w, v = la.eigh(dense)
    else:
        w, v = la.eigh(dense, subset_by_index=[0, min(k, n) - 1])
    return w, fix_phase(v)


def _max_abs(m) -> float:
    if sp.issparse(m):
        return float(abs(m).max()) if m.nnz else 0.0
    return float(np.max(np.abs(m))) if m.size else 0.0


def projector(psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi)
    return np.outer(psi, psi.conj())


@dataclass(frozen=True)
class DensityMatrix:
    """Trace-one positive Hermitian matrix with subsystem dimensions."""

    rho: np.ndarray
    dims: tuple[int, ...]

    def __post_init__(self):
        rho = np.asarray(self.rho)
        dims = tuple(int(d) for d in self.dims)
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "dims", dims)
        if rho.shape != (int(np.prod(dims)),) * 2:
            raise DomainError(f"rho shape {rho.shape} does not match dims {dims}")

    def validate(self, policy: NumericPolicy = DEFAULT_POLICY) -> "DensityMatrix":
        if abs(np.trace(self.rho) - 1) > policy.trace_tol:
            raise DomainError("trace differs from one")
        if _hermiticity_defect(self.rho) > policy.assembly_tol * 10:
            raise DomainError("density matrix not Hermitian")
        if np.linalg.eigvalsh(self.rho).min() < -policy.psd_slack:
            raise DomainError("density matrix not positive semidefinite")
        return self

    @classmethod
    def from_state(cls, psi: np.ndarray, dims: Sequence[int]) -> "DensityMatrix":
        return cls(projector(psi), tuple(dims))

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.rho)


def partial_trace(rho: DensityMatrix, keep: Sequence[int] | int) -> DensityMatrix:
    keep = sorted({keep} if isinstance(keep, (int, np.integer)) else set(keep))
    n = len(rho.dims)
    if not keep or any(not 0 <= k < n for k in keep):
        raise DomainError(f"invalid subsystem selection {keep} for dims {rho.dims}")
    t = rho.rho.reshape(rho.dims + rho.dims)
    traced = [i for i in range(n) if i not in keep]
    # trace the highest index first so the remaining axis numbers stay valid
    for count, i in enumerate(sorted(traced, reverse=True)):
        nleft = n - count
        t = np.trace(t, axis1=i, axis2=i + nleft)
    kept_dims = tuple(rho.dims[k] for k in keep)
    d = int(np.prod(kept_dims))
    return DensityMatrix(t.reshape(d, d), kept_dims)


def partial_transpose(rho: DensityMatrix, which: int = 1) -> np.ndarray:
    if len(rho.dims) != 2:
        raise DomainError("partial transpose is implemented for bipartite states only")
    if which not in (0, 1):
        raise DomainError(f"subsystem index must be 0 or 1, got {which}")
    da, db = rho.dims
    t = rho.rho.reshape(da, db, da, db)
    t = t.transpose(2, 1, 0, 3) if which == 0 else t.transpose(0, 3, 2, 1)
    return t.reshape(da * db, da * db)


def parity_mask(two_s: int, n_sites: int, policy: NumericPolicy = DEFAULT_POLICY) -> np.ndarray:
    """``(-1)^sum(m_i + s)`` for every product basis state, as int8."""
    d = two_s + 1
    _check_dim(d**n_sites, policy)
    local = (-1) ** np.arange(d)
    mask = np.ones(1, dtype=np.int8)
    for _ in range(n_sites):
        mask = np.multiply.outer(mask, local).ravel().astype(np.int8)
    return mask


def site_parity_chain(two_s: int, n_sites: int, policy: NumericPolicy = DEFAULT_POLICY):
    """Global S^z parity of ``n_sites`` spins as a sparse diagonal matrix."""
    return sp.diags(parity_mask(two_s, n_sites, policy).astype(float), format="csr")
