"""Self-consistent pair mean field (GMF) for the dimerized chain.

The chain ground state is approximated by a product of identical pair
states. With ``<S^y> = 0`` and a uniform ``<S^x>`` the pair feels
``h(x) = h0 - alpha jx x (S1x + S2x)`` and the energy per pair is
``E0(x) + alpha jx x^2``; self-consistency asks ``<S1x>_x = x``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import brentq

from .entanglement import entropy, negativity
from .pair import ModelParams, build_pair_hamiltonian, pair_ground_state, pair_operators
from .policy import DEFAULT_POLICY, NonConvergenceError, NumericPolicy
from .spin import DensityMatrix, partial_trace, projector, spin_operators

__all__ = [
    "DIMERIZED_EVEN",
    "DIMERIZED_ODD",
    "PARITY_BREAKING",
    "MfSolution",
    "PhaseDiagram",
    "default_seeds",
    "solve_self_consistent",
    "critical_alpha",
    "spin1_critical_alpha_zero_field",
    "breaking_intervals",
    "phase_diagram",
    "projected_energy",
    "restored_parity",
    "parity_restored_rho12",
    "conventional_mf",
    "conventional_mf_energy",
    "gmf_observables",
]

DIMERIZED_EVEN = "dimerized-even"
DIMERIZED_ODD = "dimerized-odd"
PARITY_BREAKING = "parity-breaking"
UNCONVERGED = "unconverged"


@dataclass
class MfSolution:
    params: ModelParams
    sx: float
    pair_state: np.ndarray
    energy_per_pair: float
    phase: str
    converged: bool
    iterations: int
    residual: float = 0.0

    @property
    def breaks_parity(self) -> bool:
        return self.phase == PARITY_BREAKING


def _mean_sx(p: ModelParams, x: float) -> tuple[float, float, np.ndarray]:
    e0, psi = pair_ground_state(p, x)
    g = float(psi @ pair_operators(p.two_s).sx1 @ psi)
    return g, e0 + p.alpha * p.jx * x * x, psi


def default_seeds(p: ModelParams) -> list[float]:
    cos_t = min(1.0, p.b / p.bc_mf)
    return [0.0, 0.5 * p.s, p.s * math.sqrt(1 - cos_t**2)]


def _iterate(p: ModelParams, seed: float, policy: NumericPolicy):
    """Damped fixed-point iteration; the step is halved whenever the residual
    changes sign, which is how the 2-cycles of an overshooting map show up."""
    x = float(seed)
    eta = policy.mf_damping
    prev_r = 0.0
    best = math.inf
    for it in range(1, policy.mf_max_iter + 1):
        g, energy, psi = _mean_sx(p, x)
        r = g - x
        best = min(best, abs(r))
        if abs(r) < policy.mf_tol:
            return g, energy, psi, it, abs(r), True
        if prev_r * r < 0:
            eta = max(eta / 2, 1e-3)
        prev_r = r
        x += eta * r
    g, energy, psi = _mean_sx(p, x)
    return x, energy, psi, policy.mf_max_iter, best, False


def _classify(p: ModelParams, sx: float, psi: np.ndarray, policy: NumericPolicy) -> str:
    if sx >= policy.phase_threshold:
        return PARITY_BREAKING
    par = float(psi @ (pair_operators(p.two_s).parity * psi))
    return DIMERIZED_EVEN if par >= 0 else DIMERIZED_ODD


def solve_self_consistent(
    p: ModelParams,
    seeds: Sequence[float] | None = None,
    policy: NumericPolicy = DEFAULT_POLICY,
) -> MfSolution:
    """Run the damped iteration from every seed and keep the converged
    solution of lowest energy per pair.

    Energies within ``policy.mf_tie_tol * jx`` count as equal and the
    smaller order parameter wins. The returned ``sx`` is gauge fixed to be
    non-negative; a negative branch is mapped by the pair parity, which
    flips the sign of ``<S^x>`` and leaves the energy unchanged.
    """
    if seeds is None:
        seeds = default_seeds(p)
    if len(seeds) == 0:
        raise ValueError("at least one seed is required")
    parity = pair_operators(p.two_s).parity
    candidates = []
    best_res = math.inf
    for seed in seeds:
        x, energy, psi, its, res, ok = _iterate(p, seed, policy)
        best_res = min(best_res, res)
        if not ok:
            continue
        if x < 0:
            x, psi = -x, parity * psi
        candidates.append((energy, x, psi, its, res))
    if not candidates:
        raise NonConvergenceError(
            f"no seed converged (alpha={p.alpha}, b={p.b})", best_residual=best_res,
            where=f"alpha={p.alpha:.12g} b={p.b:.12g}",
        )
    e_min = min(c[0] for c in candidates)
    tied = [c for c in candidates if c[0] - e_min <= policy.mf_tie_tol * p.jx]
    energy, x, psi, its, res = min(tied, key=lambda c: c[1])
    if x < policy.phase_threshold:
        x = 0.0
    return MfSolution(p, x, psi, energy, _classify(p, x, psi, policy), True, its, res)


def critical_alpha(p: ModelParams, b: float | None = None, policy: NumericPolicy = DEFAULT_POLICY) -> float:
    """Inter-pair coupling above which ``<S^x> = 0`` stops being stable.

    ``1 / (jx * sum_k |<k|S1x+S2x|0>|^2 / (E_k - E_0))`` over every excited
    state of the isolated pair; zero when the pair ground state is
    degenerate within ``policy.degeneracy_tol``.
    """
    q = p.with_(b=p.b if b is None else b)
    w, v = np.linalg.eigh(build_pair_hamiltonian(q))
    if w[1] - w[0] < policy.degeneracy_tol * p.jx:
        return 0.0
    o = pair_operators(p.two_s)
    amp = v.T @ ((o.sx1 + o.sx2) @ v[:, 0])
    chi_sum = float(np.sum(amp[1:] ** 2 / (w[1:] - w[0])))
    return math.inf if chi_sum == 0 else 1.0 / (p.jx * chi_sum)


def spin1_critical_alpha_zero_field(chi: float) -> float:
    """Closed form of ``critical_alpha`` for the spin-1 pair at zero field.

    ``(1+c)(sqrt(1+c)(4+c) - 4 - 3c)/c^2`` with ``c = chi^2``, rationalized so
    small ``chi`` does not cancel.
    """
    c = chi * chi
    return c * (1 + c) / (math.sqrt(1 + c) * (4 + c) + 4 + 3 * c)


def breaking_intervals(
    p: ModelParams, b_max: float, points: int = 400, policy: NumericPolicy = DEFAULT_POLICY
) -> list[tuple[float, float]]:
    """Field intervals in ``[0, b_max]`` where ``critical_alpha(B) < p.alpha``."""
    grid = np.linspace(0.0, b_max, points)

    def f(B):
        return critical_alpha(p, B, policy) - p.alpha

    vals = np.array([f(B) for B in grid])
    inside = vals < 0
    edges = []
    for i in range(points - 1):
        if inside[i] != inside[i + 1]:
            edges.append(brentq(f, grid[i], grid[i + 1], xtol=1e-12 * p.jx))
    bounds = ([0.0] if inside[0] else []) + edges + ([float(b_max)] if inside[-1] else [])
    return [(float(a), float(b)) for a, b in zip(bounds[::2], bounds[1::2])]


@dataclass
class PhaseDiagram:
    alpha_grid: np.ndarray
    b_grid: np.ndarray
    phase: np.ndarray
    sx: np.ndarray
    alpha_c_curve: np.ndarray

    def dimerized_phases_along(self, i_alpha: int) -> list[str]:
        """Distinct consecutive dimerized labels met along a row of fixed alpha."""
        out: list[str] = []
        prev = None
        for lab in self.phase[i_alpha]:
            if lab != prev and lab in (DIMERIZED_EVEN, DIMERIZED_ODD):
                out.append(lab)
            prev = lab
        return out


def phase_diagram(
    p: ModelParams,
    alpha_grid: Sequence[float],
    b_grid: Sequence[float],
    threads: int = 1,
    policy: NumericPolicy = DEFAULT_POLICY,
) -> PhaseDiagram:
    alpha_grid = np.asarray(alpha_grid, dtype=float)
    b_grid = np.asarray(b_grid, dtype=float)
    if np.any(np.diff(alpha_grid) <= 0) or np.any(np.diff(b_grid) <= 0):
        raise ValueError("grids must be strictly ascending")
    cells = [(i, j) for i in range(alpha_grid.size) for j in range(b_grid.size)]

    def solve(cell):
        i, j = cell
        try:
            return solve_self_consistent(p.with_(alpha=alpha_grid[i], b=b_grid[j]), policy=policy)
        except NonConvergenceError:
            return None

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            sols = list(pool.map(solve, cells))
    else:
        sols = [solve(c) for c in cells]

    phase = np.empty((alpha_grid.size, b_grid.size), dtype=object)
    sx = np.full(phase.shape, np.nan)
    for (i, j), sol in zip(cells, sols):
        phase[i, j] = UNCONVERGED if sol is None else sol.phase
        if sol is not None:
            sx[i, j] = sol.sx
    ac = np.array([critical_alpha(p, B, policy) for B in b_grid])
    return PhaseDiagram(alpha_grid, b_grid, phase, sx, ac)


def projected_energy(sol: MfSolution, n_pairs: int, parity: int) -> float:
    """Chain energy of ``(1 + parity P_z)`` applied to the GMF product state.

    Uses ``<A|H|B>`` between the two broken product states ``A = prod psi+``
    and ``B = prod psi-``, with one inter-pair bond per pair (cyclic) or
    ``n_pairs - 1`` (open).
    """
    p = sol.params
    o = pair_operators(p.two_s)
    sy = spin_operators(p.two_s).sy
    eye = np.eye(p.two_s + 1)
    sy1, sy2 = np.kron(sy, eye), np.kron(eye, sy)
    a = sol.pair_state
    b = o.parity * a
    q = float(a @ b)
    h0 = build_pair_hamiltonian(p)
    n_bonds = n_pairs if p.boundary == "cyclic" else n_pairs - 1

    def bond(x, y):
        xx = (x @ o.sx2 @ y) * (x @ o.sx1 @ y)
        yy = (x.conj() @ sy2 @ y) * (x.conj() @ sy1 @ y)
        return -p.alpha * (p.jx * xx + p.jy * yy).real

    e_aa = n_pairs * float(a @ h0 @ a) + n_bonds * bond(a, a)
    e_ab = n_pairs * float(a @ h0 @ b) * q ** (n_pairs - 1) + n_bonds * bond(a, b) * q ** (n_pairs - 2)
    return (e_aa + parity * e_ab) / (1 + parity * q**n_pairs)


def restored_parity(sol: MfSolution, n_pairs: int) -> int:
    """Parity of the lower-energy symmetry-restored combination."""
    return 1 if projected_energy(sol, n_pairs, 1) <= projected_energy(sol, n_pairs, -1) else -1


def parity_restored_rho12(sol: MfSolution, n_pairs: int | None = None, parity: int | None = None) -> DensityMatrix:
    """Pair reduced state of the parity-projected GMF chain state.

    With ``n_pairs=None`` the overlap ``<psi-|psi+>^(n-1)`` between the two
    symmetry-broken chain states is dropped, leaving
    ``(|psi+><psi+| + |psi-><psi-|)/2`` with ``psi- = (P x P) psi+``. Passing
    ``n_pairs`` keeps it, for the projection of sign ``parity`` (by default
    the one of lower energy).
    """
    d = sol.params.two_s + 1
    psi_p = sol.pair_state
    if not sol.breaks_parity:
        return DensityMatrix(projector(psi_p), (d, d))
    psi_m = pair_operators(sol.params.two_s).parity * psi_p
    rho = 0.5 * (projector(psi_p) + projector(psi_m))
    if n_pairs is not None:
        if parity is None:
            parity = restored_parity(sol, n_pairs)
        q = float(np.vdot(psi_m, psi_p).real)
        cross = parity * q ** (n_pairs - 1) * (np.outer(psi_p, psi_m.conj()) + np.outer(psi_m, psi_p.conj()))
        rho = (2 * rho + cross) / (2 * (1 + parity * q**n_pairs))
    return DensityMatrix(rho, (d, d))


def conventional_mf(p: ModelParams) -> float:
    """``<S^x>`` of the single-spin mean field: ``s sin(theta)`` with
    ``cos(theta) = B / (jx s (1 + alpha))`` below that field, zero above."""
    if p.b >= p.bc_mf:
        return 0.0
    return p.s * math.sqrt(1 - (p.b / p.bc_mf) ** 2)


def conventional_mf_energy(p: ModelParams) -> float:
    """Energy per pair of the optimal aligned product state."""
    if p.b >= p.bc_mf:
        return -2 * p.b * p.s
    return -p.jx * p.s**2 * (1 + p.alpha) - p.b**2 / (p.jx * (1 + p.alpha))


def gmf_observables(sol: MfSolution, n_pairs: int | None = None) -> dict[str, float]:
    """Magnetization per spin, pair negativity and the one- and two-site
    entropies, using the parity-restored state in broken phases.

    ``n_pairs`` selects the finite-chain reduced state; ``None`` drops the
    overlap between the broken chain states.
    """
    rho12 = parity_restored_rho12(sol, n_pairs)
    rho1 = partial_trace(rho12, 0)
    m = float(np.real(np.trace(rho12.rho @ pair_operators(sol.params.two_s).sz_tot))) / 2
    return {
        "sx": sol.sx,
        "m": m,
        "n12": negativity(rho12),
        "s1": entropy(rho1),
        "s2": entropy(rho12),
        "energy": sol.energy_per_pair,
    }
