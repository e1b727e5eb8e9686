import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dimerlab.chain import build_chain_hamiltonian
from dimerlab.entanglement import negativity, pure_state_negativity
from dimerlab.largespin import coherent_state
from dimerlab.meanfield import (
    DIMERIZED_EVEN,
    DIMERIZED_ODD,
    PARITY_BREAKING,
    breaking_intervals,
    conventional_mf,
    conventional_mf_energy,
    critical_alpha,
    gmf_observables,
    parity_restored_rho12,
    phase_diagram,
    projected_energy,
    restored_parity,
    solve_self_consistent,
    spin1_critical_alpha_zero_field,
)
from dimerlab.pair import ModelParams, pair_ground_state, pair_operators
from dimerlab.policy import DEFAULT_POLICY, NonConvergenceError

S1 = ModelParams(2, chi=0.75, alpha=0.05)


def _free_energy(p, x):
    return pair_ground_state(p, x)[0] + p.alpha * p.jx * x * x


@given(st.floats(0.05, 1.0))
def test_critical_alpha_closed_form(chi):
    got = critical_alpha(ModelParams(2, chi=chi))
    assert got == pytest.approx(spin1_critical_alpha_zero_field(chi), rel=1e-9)


def test_critical_alpha_closed_form_unrationalized():
    c = 0.75**2
    raw = (1 + c) * (math.sqrt(1 + c) * (4 + c) - 4 - 3 * c) / c**2
    assert spin1_critical_alpha_zero_field(0.75) == pytest.approx(raw, rel=1e-14)


def test_critical_alpha_reference_values():
    assert critical_alpha(ModelParams(2, chi=0.75)) == pytest.approx(0.0772, abs=1e-3)
    assert critical_alpha(ModelParams(2, chi=1.0)) == pytest.approx(math.sqrt(2) - 1 - 0.272, abs=2e-3)
    assert critical_alpha(ModelParams(3, chi=0.75)) == pytest.approx(0.019, abs=2e-3)


def test_critical_alpha_vanishes_at_pair_crossing():
    p = ModelParams(2, chi=1.0)
    assert critical_alpha(p, b=math.sqrt(2) - 1) == 0.0


@pytest.mark.parametrize("alpha,b", [(0.05, 0.1), (0.05, 0.35), (0.5, 0.2), (1.0, 1.5), (0.2, 0.85)])
def test_solution_is_self_consistent_and_minimal(alpha, b):
    p = S1.with_(alpha=alpha, b=b)
    sol = solve_self_consistent(p)
    assert sol.converged and sol.sx >= 0
    g = float(sol.pair_state @ pair_operators(2).sx1 @ sol.pair_state)
    assert g == pytest.approx(sol.sx, abs=1e-8)
    assert sol.energy_per_pair == pytest.approx(_free_energy(p, sol.sx), abs=1e-12)
    for x in np.linspace(0, p.s, 21):
        assert sol.energy_per_pair <= _free_energy(p, x) + 1e-10


def test_breaking_follows_critical_alpha():
    b = 0.35
    ac = critical_alpha(S1, b)
    assert solve_self_consistent(S1.with_(alpha=0.9 * ac, b=b)).sx == 0.0
    broken = solve_self_consistent(S1.with_(alpha=min(1.0, 1.5 * ac), b=b))
    assert broken.phase == PARITY_BREAKING and broken.sx > 1e-3


def test_dimerized_phase_labels_follow_pair_parity():
    assert solve_self_consistent(S1.with_(b=0.05)).phase == DIMERIZED_EVEN
    assert solve_self_consistent(S1.with_(b=0.65)).phase == DIMERIZED_ODD
    assert solve_self_consistent(S1.with_(b=1.5)).phase == DIMERIZED_EVEN


def test_negative_seed_is_gauge_fixed():
    p = S1.with_(alpha=0.5, b=0.2)
    a = solve_self_consistent(p, seeds=[-0.7])
    b = solve_self_consistent(p, seeds=[0.7])
    assert a.sx == pytest.approx(b.sx, abs=1e-9)
    assert abs(a.pair_state @ b.pair_state) == pytest.approx(1, abs=1e-8)


def test_nonconvergence_is_reported():
    policy = DEFAULT_POLICY.updated(mf_max_iter=2)
    with pytest.raises(NonConvergenceError) as info:
        solve_self_consistent(S1.with_(alpha=0.5, b=0.2), seeds=[0.1], policy=policy)
    assert "alpha=0.5" in info.value.where


def test_breaking_intervals_spin1():
    iv = breaking_intervals(S1, 1.2 * S1.bc_mf)
    assert len(iv) == 2
    np.testing.assert_allclose(iv, [(0.20666, 0.51764), (0.75750, 0.93698)], atol=1e-4)


def test_phase_diagram_threads_match_serial():
    alphas, fields = np.linspace(0, 0.2, 4), np.linspace(0, 1.2, 7)
    a = phase_diagram(S1, alphas, fields)
    b = phase_diagram(S1, alphas, fields, threads=3)
    assert (a.phase == b.phase).all()
    np.testing.assert_array_equal(a.sx, b.sx)
    assert a.dimerized_phases_along(0) == [DIMERIZED_EVEN, DIMERIZED_ODD, DIMERIZED_EVEN]
    with pytest.raises(ValueError):
        phase_diagram(S1, alphas[::-1], fields)


def _product(vecs):
    out = vecs[0]
    for v in vecs[1:]:
        out = np.kron(out, v)
    return out


@pytest.mark.parametrize("b", [0.0, 0.5, 1.3])
def test_conventional_mf_energy_matches_product_state(b):
    p = ModelParams(2, chi=0.75, alpha=0.3, b=b, n_pairs=2)
    sx = conventional_mf(p)
    theta = math.asin(min(1.0, sx / p.s))
    v = _product([coherent_state(2, theta)] * 4)
    h = build_chain_hamiltonian(p).matrix()
    assert float(v @ h @ v) / p.n_pairs == pytest.approx(conventional_mf_energy(p), abs=1e-10)


@pytest.mark.parametrize("b,boundary", [(0.3, "cyclic"), (0.8, "cyclic"), (0.3, "open")])
def test_projected_energy_matches_brute_force(b, boundary):
    p = ModelParams(2, chi=0.75, alpha=0.3, b=b, n_pairs=3, boundary=boundary)
    sol = solve_self_consistent(p)
    assert sol.breaks_parity
    a = sol.pair_state
    m = pair_operators(2).parity * a
    h = build_chain_hamiltonian(p).matrix()
    for sign in (1, -1):
        v = _product([a] * 3) + sign * _product([m] * 3)
        assert projected_energy(sol, 3, sign) == pytest.approx(float(v @ h @ v / (v @ v)), abs=1e-10)


def test_restored_state_is_a_valid_density_matrix():
    sol = solve_self_consistent(S1.with_(b=0.3))
    assert sol.breaks_parity
    par = np.diag(pair_operators(2).parity)
    for n in (None, 2, 4, 50):
        rho = parity_restored_rho12(sol, n).validate()
        np.testing.assert_allclose(par @ rho.rho @ par, rho.rho, atol=1e-12)
    far = parity_restored_rho12(sol, 400).rho
    np.testing.assert_allclose(far, parity_restored_rho12(sol).rho, atol=1e-10)


def test_finite_restoration_reduces_to_pair_state_when_unbroken():
    sol = solve_self_consistent(S1.with_(b=0.05))
    rho = parity_restored_rho12(sol, 4)
    assert negativity(rho) == pytest.approx(pure_state_negativity(sol.pair_state, (3, 3)), abs=1e-12)


def test_observables_in_broken_window():
    sol = solve_self_consistent(S1.with_(b=0.3))
    obs = gmf_observables(sol)
    assert 0.5 < obs["s2"] <= 1 + 1e-12
    assert -1 < obs["m"] < 0
    assert restored_parity(sol, 4) in (1, -1)
