import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dimerlab.entanglement import pure_state_negativity
from dimerlab.largespin import coherent_state
from dimerlab.pair import (
    ModelParams,
    build_pair_hamiltonian,
    factorizing_field,
    pair_ground_state,
    pair_operators,
    pair_spectrum_by_parity,
    pair_transition_fields,
    spin1_analytic,
    spin1_zero_field_negativity,
)
from dimerlab.policy import DomainError


@pytest.mark.parametrize(
    "kw",
    [dict(two_s=0), dict(two_s=2, jx=0), dict(two_s=2, chi=1.5), dict(two_s=2, alpha=2),
     dict(two_s=2, b=-1), dict(two_s=2, n_pairs=0), dict(two_s=2, boundary="twisted")],
)
def test_params_validation(kw):
    with pytest.raises(DomainError):
        ModelParams(**kw)


def test_scaled_field_round_trip():
    p = ModelParams(3, jx=2.0).at_scaled_field(0.25)
    assert p.b == pytest.approx(0.25 * 2 * 2.0 * 1.5)
    assert p.b_scaled == pytest.approx(0.25)


@given(st.integers(1, 5), st.floats(-1, 1), st.floats(0, 3))
def test_hamiltonian_commutes_with_pair_parity(two_s, chi, b):
    h = build_pair_hamiltonian(ModelParams(two_s, chi=chi, b=b))
    par = np.diag(pair_operators(two_s).parity)
    np.testing.assert_allclose(par @ h @ par, h, atol=1e-12)
    np.testing.assert_allclose(h, h.T)


def test_mean_field_term_breaks_parity():
    p = ModelParams(2, alpha=0.5)
    h = build_pair_hamiltonian(p, mf_sx=0.3)
    par = np.diag(pair_operators(2).parity)
    assert np.abs(par @ h @ par - h).max() > 0.1
    with pytest.raises(DomainError):
        pair_spectrum_by_parity(p, mf_sx=0.3)


def test_spin_half_pair_levels():
    # spin-1/2: the even sector holds |dd>, |uu>; the odd sector |du>, |ud>
    p = ModelParams(1, jx=1.0, chi=0.5, b=0.3)
    sp = pair_spectrum_by_parity(p)
    e_even = -math.sqrt(p.b**2 + ((p.jx - p.jy) / 4) ** 2)
    e_odd = -(p.jx + p.jy) / 4
    assert sp.e_plus == pytest.approx(e_even, abs=1e-13)
    assert sp.e_minus == pytest.approx(e_odd, abs=1e-13)


@pytest.mark.parametrize("chi", [0.2, 0.75, 1.0, -0.5])
def test_spin1_closed_forms_match_numerics(chi):
    for b in np.linspace(0.01, 3, 40):
        p = ModelParams(2, chi=chi, b=b)
        a, n = spin1_analytic(p), pair_spectrum_by_parity(p)
        assert a.e_plus == pytest.approx(n.e_plus, abs=1e-11)
        assert a.e_minus == pytest.approx(n.e_minus, abs=1e-11)
        assert abs(a.psi_plus @ n.psi_plus) == pytest.approx(1, abs=1e-10)
        assert abs(a.psi_minus @ n.psi_minus) == pytest.approx(1, abs=1e-10)


def test_spin1_closed_form_rejects_other_spins():
    with pytest.raises(DomainError):
        spin1_analytic(ModelParams(3))


@pytest.mark.parametrize("chi", [0.1, 0.5, 0.75, 1.0])
def test_zero_field_negativity_closed_form(chi):
    sp = pair_spectrum_by_parity(ModelParams(2, chi=chi))
    assert pure_state_negativity(sp.ground_state, (3, 3)) == pytest.approx(spin1_zero_field_negativity(chi), abs=1e-12)


def test_zero_field_negativity_reference_values():
    assert spin1_zero_field_negativity(0.75) == pytest.approx(0.94, abs=1e-12)
    assert spin1_zero_field_negativity(1.0) == pytest.approx(0.25 + 1 / math.sqrt(2), abs=1e-12)


def test_xx_spin1_crossings():
    fields = pair_transition_fields(ModelParams(2, chi=1.0))
    np.testing.assert_allclose(fields, [math.sqrt(2) - 1, 1.0], atol=1e-9)


@pytest.mark.parametrize("two_s", [1, 2, 3, 4, 5])
def test_number_of_crossings_is_2s(two_s):
    fields = pair_transition_fields(ModelParams(two_s, chi=0.75))
    assert len(fields) == two_s
    assert fields[-1] == pytest.approx(factorizing_field(ModelParams(two_s, chi=0.75)).field, abs=1e-8)


def test_weak_anisotropy_first_crossing():
    fields = pair_transition_fields(ModelParams(2, chi=0.05))
    assert fields[0] == pytest.approx(0.0992, abs=1e-3)


def test_crossing_parities_alternate():
    p = ModelParams(3, chi=0.75)
    fields = [0.0] + pair_transition_fields(p) + [2.0]
    mids = [(a + b) / 2 for a, b in zip(fields, fields[1:])]
    signs = [pair_spectrum_by_parity(p.with_(b=m)).ground_parity for m in mids]
    assert all(x == -y for x, y in zip(signs, signs[1:]))


@given(st.integers(1, 6), st.floats(0.05, 1.0), st.floats(0, 1))
def test_factorizing_point_is_exact_product_eigenstate(two_s, chi, alpha):
    p = ModelParams(two_s, chi=chi, alpha=alpha)
    fp = factorizing_field(p)
    # the isolated pair factorizes at jx s sqrt(chi)
    q = p.with_(alpha=0.0, b=fp.field / (1 + alpha))
    v = np.kron(coherent_state(two_s, fp.theta), coherent_state(two_s, fp.theta))
    h = build_pair_hamiltonian(q)
    e = v @ h @ v
    assert np.linalg.norm(h @ v - e * v) < 1e-9
    assert e == pytest.approx(pair_ground_state(q)[0], abs=1e-9)


def test_factorizing_field_needs_positive_chi():
    with pytest.raises(DomainError):
        factorizing_field(ModelParams(2, chi=-0.5))
