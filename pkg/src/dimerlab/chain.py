"""Exact diagonalization of the dimerized 2n-site chain.

Sites ``2i, 2i+1`` (0-based) form the strongly coupled pairs; bonds
``(2i+1, 2i+2)`` carry the extra factor ``alpha``. The cyclic chain closes
with an ``alpha`` bond between the last and first site.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp
from scipy.optimize import brentq

from .entanglement import entropy, negativity
from .meanfield import gmf_observables, solve_self_consistent
from .pair import ModelParams
from .policy import DEFAULT_POLICY, DomainError, NonConvergenceError, NumericPolicy, ResourceLimitError
from .spin import DensityMatrix, hermitian_eig, parity_mask, partial_trace, spin_operators

__all__ = [
    "ChainOperator",
    "ParitySpectra",
    "ScanRecord",
    "build_chain_hamiltonian",
    "ground_states_by_parity",
    "chain_ground_state",
    "pair_density_matrix",
    "field_scan",
    "parity_transition_fields",
]

# parity blocks above this size go to Lanczos; below, dense LAPACK is faster
LANCZOS_MIN_BLOCK = 1024


@dataclass
class ChainOperator:
    """Field-free part of the chain Hamiltonian plus its diagonal Sz_total,
    so field scans only rebuild a diagonal."""

    params: ModelParams
    bonds: sp.csr_matrix
    sz_total: np.ndarray
    parity_mask: np.ndarray
    n_sites: int

    @property
    def dim(self) -> int:
        return self.bonds.shape[0]

    @property
    def local_dim(self) -> int:
        return self.params.two_s + 1

    def matrix(self, b: float | None = None) -> sp.csr_matrix:
        b = self.params.b if b is None else b
        return (self.bonds + sp.diags(b * self.sz_total)).tocsr()


def _site_op(op, site: int, n_sites: int, d: int):
    left = sp.identity(d**site, format="csr")
    right = sp.identity(d ** (n_sites - site - 1), format="csr")
    return sp.kron(sp.kron(left, sp.csr_matrix(op)), right, format="csr")


def build_chain_hamiltonian(p: ModelParams, policy: NumericPolicy = DEFAULT_POLICY) -> ChainOperator:
    """Sparse real Hamiltonian of ``2 * p.n_pairs`` spins.

    Bonds use ``jx SxSx + jy SySy = (jx+jy)/4 (S+S- + S-S+) + (jx-jy)/4 (S+S+ + S-S-)``
    so everything stays real.
    """
    n_sites = 2 * p.n_pairs
    d = p.two_s + 1
    dim = d**n_sites
    if dim > policy.max_dim:
        raise ResourceLimitError(f"chain dimension {dim} exceeds cap {policy.max_dim}")
    ops = spin_operators(p.two_s)
    splus = [_site_op(ops.sp, i, n_sites, d) for i in range(n_sites)]
    sminus = [s.T.tocsr() for s in splus]

    bonds = [(2 * i, 2 * i + 1, 1.0) for i in range(p.n_pairs)]
    bonds += [(2 * i + 1, 2 * i + 2, p.alpha) for i in range(p.n_pairs - 1)]
    if p.boundary == "cyclic" and n_sites > 2:
        bonds.append((n_sites - 1, 0, p.alpha))

    cp = (p.jx + p.jy) / 4
    cm = (p.jx - p.jy) / 4
    h = sp.csr_matrix((dim, dim))
    for i, j, w in bonds:
        if w == 0:
            continue
        hop = splus[i] @ sminus[j]
        pair = splus[i] @ splus[j]
        h = h - w * (cp * (hop + hop.T) + cm * (pair + pair.T))

    m = np.arange(d) - p.s
    sz_total = np.zeros(1)
    for _ in range(n_sites):
        sz_total = np.add.outer(sz_total, m).ravel()
    return ChainOperator(p, h.tocsr(), sz_total, parity_mask(p.two_s, n_sites, policy), n_sites)


@dataclass
class ParitySpectra:
    """Lowest levels of each global-parity block; vectors live in the full space."""

    energies: dict[int, np.ndarray]
    vectors: dict[int, np.ndarray]

    @property
    def ground_parity(self) -> int:
        return 1 if self.energies[1][0] <= self.energies[-1][0] else -1

    @property
    def ground_energy(self) -> float:
        return float(min(self.energies[1][0], self.energies[-1][0]))


def ground_states_by_parity(
    h: ChainOperator, k: int = 2, b: float | None = None, policy: NumericPolicy = DEFAULT_POLICY,
    vectors: bool = True,
) -> ParitySpectra:
    mat = h.matrix(b)
    energies, vecs = {}, {}
    for sign in (1, -1):
        idx = np.flatnonzero(h.parity_mask == sign)
        block = mat[idx][:, idx]
        kk = min(k, idx.size)
        if idx.size > LANCZOS_MIN_BLOCK and kk < idx.size - 1:
            w, v = _lanczos(block, kk, policy)
        else:
            w, v = hermitian_eig(block.toarray(), k=kk, policy=policy)
        energies[sign] = w
        if vectors:
            full = np.zeros((h.dim, kk))
            full[idx] = v
            vecs[sign] = full
    return ParitySpectra(energies, vecs)


def _lanczos(block, k: int, policy: NumericPolicy):
    from scipy.sparse.linalg import ArpackNoConvergence, eigsh

    n = block.shape[0]
    # one extra pair buys robustness when the k-th level is nearly degenerate
    kk = min(k + 1, n - 2)
    try:
        w, v = eigsh(block, k=kk, which="SA", v0=np.ones(n) / math.sqrt(n), tol=0,
                     maxiter=policy.lanczos_maxiter)
    except ArpackNoConvergence as exc:
        raise NonConvergenceError(f"Lanczos did not converge (block dim {n})") from exc
    order = np.argsort(w)[:k]
    w, v = w[order], v[:, order]
    scale = max(1.0, float(abs(block).max()))
    res = np.linalg.norm(block @ v - v * w, axis=0)
    if np.any(res > policy.eig_residual * scale):
        raise NonConvergenceError("Lanczos residual above tolerance", best_residual=float(res.max()))
    return w, v


def chain_ground_state(h: ChainOperator, b: float | None = None, policy: NumericPolicy = DEFAULT_POLICY,
                       left_limit: bool = True):
    """Ground energy, state and parity. At a parity crossing the state is
    taken from the lower-field side when ``left_limit``; the returned flag
    marks such points."""
    b = h.params.b if b is None else b
    spec = ground_states_by_parity(h, 2, b, policy)
    e_p, e_m = spec.energies[1][0], spec.energies[-1][0]
    degenerate = abs(e_p - e_m) < policy.degeneracy_tol * h.params.jx * max(1, h.n_sites)
    sign = spec.ground_parity
    if degenerate and left_limit:
        probe = ground_states_by_parity(h, 1, max(b - 1e-6 * h.params.jx, 0.0), policy, vectors=False)
        sign = probe.ground_parity
    return spec, sign, degenerate


def pair_density_matrix(psi: np.ndarray, two_s: int, n_sites: int, first_site: int = 0) -> DensityMatrix:
    """Reduced state of sites ``first_site, first_site + 1``."""
    d = two_s + 1
    t = psi.reshape((d,) * n_sites)
    t = np.moveaxis(t, [first_site, first_site + 1], [0, 1]).reshape(d * d, -1)
    return DensityMatrix(t @ t.conj().T, (d, d))


@dataclass
class ScanRecord:
    b: float
    b_scaled: float
    energy: float
    gs_parity: int
    gap_same_parity: float
    gap_opposite_parity: float
    m: float
    n12: float
    s1: float
    s2: float
    sx_gmf: float = math.nan
    n12_gmf: float = math.nan
    s1_gmf: float = math.nan
    s2_gmf: float = math.nan
    m_gmf: float = math.nan
    energy_gmf: float = math.nan
    degenerate: bool = False
    rho12_eigenvalues: np.ndarray = field(default=None, repr=False)


def _scan_point(h: ChainOperator, B: float, with_gmf: bool, policy: NumericPolicy) -> ScanRecord:
    p = h.params
    spec, sign, degenerate = chain_ground_state(h, B, policy)
    psi = spec.vectors[sign][:, 0]
    e0 = float(spec.energies[sign][0])
    rho12 = pair_density_matrix(psi, p.two_s, h.n_sites)
    rho1 = partial_trace(rho12, 0)
    m = float(np.dot(np.abs(psi) ** 2, h.sz_total)) / h.n_sites
    rec = ScanRecord(
        b=float(B),
        b_scaled=float(B / p.j_scale),
        energy=e0,
        gs_parity=int(sign),
        gap_same_parity=float(spec.energies[sign][1] - e0) if spec.energies[sign].size > 1 else math.nan,
        gap_opposite_parity=float(spec.energies[-sign][0] - e0),
        m=m,
        n12=negativity(rho12, policy),
        s1=entropy(rho1, policy),
        s2=entropy(rho12, policy),
        degenerate=bool(degenerate),
        rho12_eigenvalues=np.sort(rho12.eigenvalues())[::-1],
    )
    if with_gmf:
        sol = solve_self_consistent(p.with_(b=float(B)), policy=policy)
        obs = gmf_observables(sol, n_pairs=p.n_pairs)
        rec.sx_gmf, rec.n12_gmf, rec.s1_gmf, rec.s2_gmf = obs["sx"], obs["n12"], obs["s1"], obs["s2"]
        rec.m_gmf, rec.energy_gmf = obs["m"], obs["energy"]
    return rec


def field_scan(
    p: ModelParams,
    b_grid: Sequence[float],
    with_gmf: bool = True,
    threads: int = 1,
    policy: NumericPolicy = DEFAULT_POLICY,
    h: ChainOperator | None = None,
) -> list[ScanRecord]:
    """Exact (and optionally GMF) observables of pair (1,2) along raw fields ``b_grid``."""
    b_grid = np.asarray(b_grid, dtype=float)
    if np.any(np.diff(b_grid) <= 0):
        raise DomainError("field grid must be strictly ascending")
    h = build_chain_hamiltonian(p, policy) if h is None else h

    def point(B):
        try:
            return _scan_point(h, B, with_gmf, policy)
        except NonConvergenceError as exc:
            exc.where = exc.where or f"b={B:.12g}"
            raise

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            return list(pool.map(point, b_grid))
    return [point(B) for B in b_grid]


def parity_transition_fields(
    p: ModelParams,
    b_range: tuple[float, float] | None = None,
    points: int = 300,
    policy: NumericPolicy = DEFAULT_POLICY,
    h: ChainOperator | None = None,
) -> list[float]:
    """Fields where the exact ground-state parity flips, ascending.

    The difference of the lowest levels of the two parity blocks is sampled
    on ``points`` fields and every sign change is refined by Brent's method.
    Two flips between neighbouring samples would be missed, so ``points``
    must resolve the spacing of transitions.
    """
    h = build_chain_hamiltonian(p, policy) if h is None else h
    lo, hi = b_range if b_range is not None else (0.0, 1.2 * p.bc_mf)

    def delta(B):
        spec = ground_states_by_parity(h, 1, B, policy, vectors=False)
        return float(spec.energies[1][0] - spec.energies[-1][0])

    grid = np.linspace(lo, hi, points)
    vals = np.array([delta(B) for B in grid])
    out = []
    for i in range(points - 1):
        if vals[i] == 0:
            out.append(float(grid[i]))
        elif vals[i] * vals[i + 1] < 0:
            out.append(float(brentq(delta, grid[i], grid[i + 1], xtol=1e-11 * p.jx, rtol=1e-14)))
    return out
