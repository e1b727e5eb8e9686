"""A single spin-s pair, isolated or dressed by a uniform mean field.

Conventions: ``jx`` is the x coupling, ``jy = chi * jx``, ``b`` the raw
transverse field. Figures and the CLI use the scaled field ``b / (2 jx s)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import NamedTuple

import numpy as np
from scipy.optimize import brentq

from .policy import DEFAULT_POLICY, DomainError, NumericPolicy
from .spin import fix_phase, parity_mask, spin_operators

__all__ = [
    "ModelParams",
    "PairSpectrum",
    "FactorizingPoint",
    "pair_operators",
    "build_pair_hamiltonian",
    "pair_ground_state",
    "pair_spectrum_by_parity",
    "spin1_analytic",
    "spin1_zero_field_negativity",
    "pair_transition_fields",
    "factorizing_field",
]


@dataclass(frozen=True)
class ModelParams:
    two_s: int
    jx: float = 1.0
    chi: float = 0.75
    alpha: float = 0.0
    b: float = 0.0
    n_pairs: int = 4
    boundary: str = "cyclic"

    def __post_init__(self):
        if int(self.two_s) != self.two_s or self.two_s < 1:
            raise DomainError(f"two_s must be a positive integer, got {self.two_s!r}")
        if not self.jx > 0:
            raise DomainError("jx must be positive")
        if abs(self.chi) > 1:
            raise DomainError("|chi| must not exceed 1")
        if not 0 <= self.alpha <= 1:
            raise DomainError("alpha must lie in [0, 1]")
        if self.b < 0:
            raise DomainError("field must be non-negative")
        if self.n_pairs < 1:
            raise DomainError("n_pairs must be at least 1")
        if self.boundary not in ("cyclic", "open"):
            raise DomainError(f"unknown boundary {self.boundary!r}")
        object.__setattr__(self, "two_s", int(self.two_s))

    @property
    def s(self) -> float:
        return self.two_s / 2

    @property
    def jy(self) -> float:
        return self.chi * self.jx

    @property
    def j_scale(self) -> float:
        """Field unit of the figures, ``2 jx s``."""
        return 2 * self.jx * self.s

    @property
    def b_scaled(self) -> float:
        return self.b / self.j_scale

    @property
    def bc_mf(self) -> float:
        """Critical field of the single-spin mean field, ``jx s (1 + alpha)``."""
        return self.jx * self.s * (1 + self.alpha)

    @property
    def bc(self) -> float:
        return self.jx * self.s

    def with_(self, **changes) -> "ModelParams":
        return replace(self, **changes)

    def at_scaled_field(self, b_scaled: float) -> "ModelParams":
        return replace(self, b=b_scaled * self.j_scale)


class PairOperators(NamedTuple):
    sz_tot: np.ndarray
    sx1: np.ndarray
    sx2: np.ndarray
    sz1: np.ndarray
    xx: np.ndarray
    yy: np.ndarray
    parity: np.ndarray


@lru_cache(maxsize=None)
def pair_operators(two_s: int) -> PairOperators:
    """Real two-site operators; ``yy`` is real because ``sy (x) sy`` is."""
    ops = spin_operators(two_s)
    eye = np.eye(ops.dim)
    sx, sz = ops.sx.real, ops.sz.real
    sx1, sx2 = np.kron(sx, eye), np.kron(eye, sx)
    sz1 = np.kron(sz, eye)
    xx = np.kron(sx, sx)
    yy = np.kron(ops.sy, ops.sy).real
    out = PairOperators(
        sz1 + np.kron(eye, sz), sx1, sx2, sz1, xx, yy,
        parity_mask(two_s, 2).astype(float),
    )
    for arr in out:
        arr.setflags(write=False)
    return out


def build_pair_hamiltonian(p: ModelParams, mf_sx: float = 0.0) -> np.ndarray:
    """``B Sz_t - jx S1x S2x - jy S1y S2y - alpha jx <Sx> (S1x + S2x)``."""
    o = pair_operators(p.two_s)
    h = p.b * o.sz_tot - p.jx * o.xx - p.jy * o.yy
    if mf_sx:
        h = h - p.alpha * p.jx * mf_sx * (o.sx1 + o.sx2)
    return h


def pair_ground_state(p: ModelParams, mf_sx: float = 0.0) -> tuple[float, np.ndarray]:
    w, v = np.linalg.eigh(build_pair_hamiltonian(p, mf_sx))
    return float(w[0]), fix_phase(v[:, 0])


@dataclass
class PairSpectrum:
    e_plus: float
    e_minus: float
    psi_plus: np.ndarray
    psi_minus: np.ndarray
    full_levels: list[tuple[float, int]] = field(default_factory=list)

    @property
    def ground_parity(self) -> int:
        return 1 if self.e_plus <= self.e_minus else -1

    @property
    def ground_state(self) -> np.ndarray:
        return self.psi_plus if self.ground_parity == 1 else self.psi_minus


def _sector_eigs(h: np.ndarray, mask: np.ndarray, sign: int):
    idx = np.flatnonzero(mask == sign)
    w, v = np.linalg.eigh(h[np.ix_(idx, idx)])
    full = np.zeros((h.shape[0], v.shape[1]), dtype=v.dtype)
    full[idx] = v
    return w, full


def pair_spectrum_by_parity(p: ModelParams, mf_sx: float = 0.0) -> PairSpectrum:
    """Lowest level and state of each pair S^z-parity sector (no mean field)."""
    if mf_sx != 0:
        raise DomainError("parity sectors are only defined for a vanishing mean field")
    h = build_pair_hamiltonian(p)
    mask = pair_operators(p.two_s).parity
    wp, vp = _sector_eigs(h, mask, 1)
    wm, vm = _sector_eigs(h, mask, -1)
    levels = sorted([(float(e), 1) for e in wp] + [(float(e), -1) for e in wm])
    return PairSpectrum(float(wp[0]), float(wm[0]), fix_phase(vp[:, 0]), fix_phase(vm[:, 0]), levels)


def _spin1_index(m1: int, m2: int) -> int:
    return (m1 + 1) * 3 + (m2 + 1)


def spin1_analytic(p: ModelParams) -> PairSpectrum:
    """Closed-form lowest levels and states of an isolated spin-1 pair.

    Independent of the numerical diagonalization; used as its oracle. The
    coefficient ratios are the eigenvector relations of the 4x4 positive
    and 2x2 negative parity blocks, normalized on whichever component stays
    finite at ``chi = 1``.
    """
    if p.two_s != 2:
        raise DomainError("closed forms exist only for s = 1")
    B, jx, jy = p.b, p.jx, p.jy
    u = (jx**2 + jy**2) / 2
    root = math.sqrt(4 * B**2 * (B**2 - jx * jy) + u**2)
    e_plus = -math.sqrt(2 * B**2 + u + root)
    e_minus = -((jx + jy) / 2 + math.sqrt(B**2 + (jx - jy) ** 2 / 4))

    E = -e_plus
    # |E+|^2 - 4B^2, written without cancellation at large B
    if 2 * B**2 > u:
        gap_sq = 2 * B**2 * (jx - jy) ** 2 / (root + 2 * B**2 - u)
    else:
        gap_sq = u - 2 * B**2 + root
    e_minus_2b = gap_sq / (E + 2 * B)
    d = (jx - jy) / 2
    if e_minus_2b > 1e-14 * max(1.0, E):
        a0 = 1.0
        a_m = d / e_minus_2b
        a_p = d / (E + 2 * B)
        a11 = a0 * (jx + jy) / (math.sqrt(2) * E)
    else:
        a_m, a0, a_p, a11 = 1.0, 0.0, 0.0, 0.0
    psi_p = np.zeros(9)
    psi_p[_spin1_index(-1, -1)] = a_m
    psi_p[_spin1_index(0, 0)] = a0
    psi_p[_spin1_index(1, 1)] = a_p
    psi_p[_spin1_index(-1, 1)] = psi_p[_spin1_index(1, -1)] = a11 / math.sqrt(2)
    psi_p /= np.linalg.norm(psi_p)

    r = math.sqrt(B**2 + d**2)
    if B + r > 0:
        b_m, b_p = 1.0, d / (B + r)
    else:
        b_m, b_p = 1.0, 1.0  # B = 0 and chi = 1: degenerate, pick the symmetric member
    psi_m = np.zeros(9)
    psi_m[_spin1_index(-1, 0)] = psi_m[_spin1_index(0, -1)] = b_m / math.sqrt(2)
    psi_m[_spin1_index(0, 1)] = psi_m[_spin1_index(1, 0)] = b_p / math.sqrt(2)
    psi_m /= np.linalg.norm(psi_m)

    levels = sorted([(e_plus, 1), (e_minus, -1)])
    return PairSpectrum(e_plus, e_minus, fix_phase(psi_p), fix_phase(psi_m), levels)


def spin1_zero_field_negativity(chi: float) -> float:
    """Closed-form ground-state negativity of the isolated spin-1 pair at zero field."""
    r = math.sqrt(1 + chi * chi)
    return (1 + chi * (1 + chi + chi * chi + r)) / (2 * r**3)


def pair_transition_fields(p: ModelParams, policy: NumericPolicy = DEFAULT_POLICY) -> list[float]:
    """Fields where the lowest levels of the two parity sectors of the
    isolated pair cross, in ascending order.

    Sign changes of ``e_plus - e_minus`` are bracketed on a uniform grid over
    ``[0, 1.2 jx s]`` and refined with Brent's method. Touching points
    without a sign change are kept as single crossings.
    """
    if p.chi <= 0:
        return []
    p0 = p.with_(alpha=0.0)
    grid = np.linspace(0.0, 1.2 * p.jx * p.s, policy.crossing_grid)

    def gap(B: float) -> float:
        sp_ = pair_spectrum_by_parity(p0.with_(b=B))
        return sp_.e_plus - sp_.e_minus

    vals = np.array([gap(B) for B in grid])
    tol = policy.degeneracy_tol * p.jx
    out: list[float] = []
    for i in range(len(grid) - 1):
        a, b = vals[i], vals[i + 1]
        if abs(a) <= tol:
            if i == 0 or not out or abs(out[-1] - grid[i]) > 1e-9:
                out.append(float(grid[i]))
            continue
        if abs(b) <= tol:
            continue
        if a * b < 0:
            out.append(float(brentq(gap, grid[i], grid[i + 1], xtol=policy.crossing_tol * p.jx)))
    if abs(vals[-1]) <= tol:
        out.append(float(grid[-1]))
    # drop the zero-field point: at B = 0 the sectors are split whenever chi > 0
    return [b for b in out if b > 0]


class FactorizingPoint(NamedTuple):
    field: float
    theta: float


def factorizing_field(p: ModelParams) -> FactorizingPoint:
    """Field ``jx s (1+alpha) sqrt(chi)`` at which the aligned product state
    ``|theta, theta, ...>`` with ``cos(theta) = sqrt(chi)`` is exact."""
    if p.chi <= 0:
        raise DomainError("no factorizing field for chi <= 0")
    return FactorizingPoint(p.bc_mf * math.sqrt(p.chi), math.acos(math.sqrt(p.chi)))
