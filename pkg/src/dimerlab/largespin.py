"""Large-spin behaviour of an isolated pair.

Anisotropic case: parity-projected aligned states and the bosonic (RPA)
limit of the negativity. XX case: fixed-magnetization block ground states
and their gaussian Schmidt profile.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as la

from .pair import ModelParams, pair_spectrum_by_parity
from .policy import DomainError
from .spin import spin_operators

__all__ = [
    "ThetaStateProps",
    "XxBlockSolution",
    "GaussianEstimate",
    "theta_state_properties",
    "coherent_state",
    "theta_pair_states",
    "golden_section_max",
    "theta_overlap",
    "rpa_occupation",
    "rpa_negativity_entropy",
    "xx_block_ground_state",
    "xx_block_negativity",
    "xx_block_state",
    "gaussian_negativity",
    "uniform_schmidt_state",
]


@dataclass
class ThetaStateProps:
    theta: float
    p_plus: float
    p_minus: float
    n_plus: float
    n_minus: float
    overlap: float


def theta_state_properties(two_s: int, chi: float) -> ThetaStateProps:
    """Schmidt weights and negativities of ``|theta,theta> +- |-theta,-theta>``
    with ``cos(theta) = sqrt(chi)``."""
    if chi <= 0 or chi > 1:
        raise DomainError("chi must lie in (0, 1]")
    s = two_s / 2
    theta = math.acos(math.sqrt(chi))
    c2s = math.cos(theta) ** (2 * s)
    c4s = c2s * c2s
    return ThetaStateProps(
        theta=theta,
        p_plus=(1 + c2s) ** 2 / (2 * (1 + c4s)),
        p_minus=0.5,
        n_plus=(1 - c4s) / (2 * (1 + c4s)),
        n_minus=0.5,
        overlap=c4s,
    )


def coherent_state(two_s: int, theta: float) -> np.ndarray:
    """``exp(-i theta S^y) |-s>``: maximal spin at angle ``theta`` from ``-z``,
    tilted towards ``-x``."""
    ops = spin_operators(two_s)
    rot = la.expm(-1j * theta * ops.sy).real
    return rot[:, 0].copy()


def theta_pair_states(two_s: int, theta: float) -> tuple[np.ndarray, np.ndarray]:
    """Normalized ``|Theta_+>`` and ``|Theta_->``; the minus state is
    undefined at ``theta = 0`` and returned as zeros there."""
    a = coherent_state(two_s, theta)
    b = coherent_state(two_s, -theta)
    aa, bb = np.kron(a, a), np.kron(b, b)
    out = []
    for sign in (1, -1):
        v = aa + sign * bb
        n = np.linalg.norm(v)
        out.append(v / n if n > 1e-12 else np.zeros_like(v))
    return out[0], out[1]


def golden_section_max(f, lo: float, hi: float, tol: float = 1e-8) -> tuple[float, float]:
    invphi = (math.sqrt(5) - 1) / 2
    a, b = lo, hi
    c, d = b - invphi * (b - a), a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    x = (a + b) / 2
    return x, f(x)


def theta_overlap(p: ModelParams, parity: int = 1, grid: int = 64) -> tuple[float, float]:
    """Largest ``|<Theta_parity|psi_parity>|`` over ``theta`` for the isolated
    pair, with ``psi`` the lowest state of that parity sector.

    A coarse grid picks the basin, golden-section search refines it.
    """
    spec = pair_spectrum_by_parity(p.with_(alpha=0.0))
    psi = spec.psi_plus if parity == 1 else spec.psi_minus
    k = 0 if parity == 1 else 1

    def f(theta):
        return abs(theta_pair_states(p.two_s, theta)[k] @ psi)

    ts = np.linspace(1e-6, math.pi / 2, grid)
    i = int(np.argmax([f(t) for t in ts]))
    lo, hi = ts[max(i - 1, 0)], ts[min(i + 1, grid - 1)]
    return golden_section_max(f, lo, hi, 1e-8)


def rpa_occupation(p: ModelParams) -> float:
    """Mean boson number ``f`` of the two-mode large-spin expansion of the
    isolated pair. Below ``B_c = jx s`` the expansion is around the
    parity-breaking mean field, above it around the aligned state."""
    bc = p.jx * p.s
    B, chi = abs(p.b), p.chi
    x = B / bc
    if x < 1:
        w_p = bc * math.sqrt((1 + x * x) * (1 + chi))
        prod = (1 - x * x) * (1 - chi)
        lam = bc
    else:
        w_p = bc * math.sqrt((x + 1) * (x + chi))
        prod = (x - 1) * (x - chi)
        lam = B
    if prod <= 0:
        raise DomainError(f"bosonic frequencies vanish (chi={chi}, B/B_c={x})")
    w_m = bc * math.sqrt(prod)
    w_mid = (w_p + w_m) / 2
    return 0.5 * (math.sqrt(1 + (lam**2 - w_mid**2) / (w_p * w_m)) - 1)


def rpa_negativity_entropy(p: ModelParams) -> tuple[float, float]:
    """Bosonic large-spin limit of the pair negativity and pair entropy (bits).

    Below ``B_c`` the restored parity adds ``1/2`` to the negativity and one
    bit to the entropy.
    """
    f = rpa_occupation(p)
    below = abs(p.b) < p.jx * p.s
    core = f + math.sqrt(f * (f + 1))
    n12 = 2 * core + 0.5 if below else core
    s2 = (f + 1) * math.log2(f + 1) - (f * math.log2(f) if f > 0 else 0.0) + (1.0 if below else 0.0)
    return n12, s2


@dataclass
class XxBlockSolution:
    two_s: int
    m_block: int
    coeffs: np.ndarray
    m_values: np.ndarray
    energy: float
    sigma_sq: float

    @property
    def r_m(self) -> float:
        return self.sigma_sq / (self.two_s / 2)


def _xx_block(two_s: int, M: int, jx: float):
    s = two_s / 2
    m = np.arange(max(-s, M - s), min(s, M + s) + 0.5)
    if m.size == 0:
        raise DomainError(f"empty magnetization block M={M}")
    # <m+1, M-m-1| S1+ S2- |m, M-m>
    mm = m[:-1]
    m2 = M - mm
    off = -0.5 * jx * np.sqrt(s * (s + 1) - mm * (mm + 1)) * np.sqrt(s * (s + 1) - m2 * (m2 - 1))
    return m, off


def _block_ground(two_s: int, M: int, B: float, jx: float):
    m, off = _xx_block(two_s, M, jx)
    if m.size == 1:
        return B * M, m, np.ones(1)
    w, v = la.eigh_tridiagonal(np.full(m.size, B * M), off, select="i", select_range=(0, 0))
    vec = v[:, 0]
    return float(w[0]), m, vec * np.sign(vec.sum())


def xx_block_ground_state(two_s: int, b_over_bc: float, m_override: int | None = None, jx: float = 1.0) -> XxBlockSolution:
    """Ground state of the XX pair inside the block of total ``S^z = M``.

    Without ``m_override`` the block of lowest ground energy among
    ``M = -2s, ..., 0`` is taken. Coefficients are indexed by the first
    spin's ``m`` and made positive.
    """
    s = two_s / 2
    B = b_over_bc * jx * s
    if m_override is not None:
        if abs(m_override) > two_s:
            raise DomainError(f"|M| must not exceed 2s = {two_s}")
        M = int(m_override)
        e, m, c = _block_ground(two_s, M, B, jx)
    else:
        best = None
        for M in range(-two_s, 1):
            e, m, c = _block_ground(two_s, M, B, jx)
            if best is None or e < best[0] - 1e-12 * jx:
                best = (e, m, c, M)
        e, m, c, M = best
    sigma_sq = float(np.sum(c**2 * (m - M / 2) ** 2))
    return XxBlockSolution(two_s, M, c, m, e, sigma_sq)


def xx_block_state(sol: XxBlockSolution) -> np.ndarray:
    """Embed the block ground state into the full ``(2s+1)^2`` pair space."""
    d = sol.two_s + 1
    s = sol.two_s / 2
    psi = np.zeros(d * d)
    for m, c in zip(sol.m_values, sol.coeffs):
        psi[int(m + s) * d + int(sol.m_block - m + s)] = c
    return psi


def xx_block_negativity(sol: XxBlockSolution) -> float:
    """Pure-state negativity from the coefficients, which are the Schmidt
    coefficients of the block state."""
    return float((np.abs(sol.coeffs).sum() ** 2 - 1) / 2)


@dataclass
class GaussianEstimate:
    negativity: float
    coeffs: np.ndarray
    overlap: float
    applicable: bool


def gaussian_negativity(sol: XxBlockSolution) -> GaussianEstimate:
    """``sqrt(2 pi sigma^2) - 1/2`` with the gaussian profile
    ``exp(-(m - M/2)^2 / (4 sigma^2))`` compared against the exact coefficients."""
    if sol.coeffs.size < 2 or sol.sigma_sq <= 0:
        warnings.warn("single-coefficient block: gaussian model not applicable", stacklevel=2)
        return GaussianEstimate(0.0, sol.coeffs.copy(), 1.0, False)
    g = np.exp(-((sol.m_values - sol.m_block / 2) ** 2) / (4 * sol.sigma_sq))
    g /= np.linalg.norm(g)
    return GaussianEstimate(
        negativity=math.sqrt(2 * math.pi * sol.sigma_sq) - 0.5,
        coeffs=g,
        overlap=float(abs(g @ sol.coeffs)),
        applicable=True,
    )


def uniform_schmidt_state(two_s: int) -> np.ndarray:
    """``sum_m |m, -m> / sqrt(2s+1)``, a maximally entangled spin-s pair."""
    d = two_s + 1
    psi = np.zeros(d * d)
    for i in range(d):
        psi[i * d + (d - 1 - i)] = 1.0
    return psi / math.sqrt(d)
