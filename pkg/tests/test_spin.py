import itertools

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given
from hypothesis import strategies as st

from dimerlab.policy import DEFAULT_POLICY, DomainError, NonConvergenceError, ResourceLimitError
from dimerlab.spin import (
    DensityMatrix,
    fix_phase,
    hermitian_eig,
    kron,
    kron_chain,
    parity_mask,
    partial_trace,
    partial_transpose,
    spin_operators,
)

two_s_values = st.integers(min_value=1, max_value=8)


@given(two_s_values)
def test_commutators_and_casimir(two_s):
    o = spin_operators(two_s)
    s = two_s / 2
    np.testing.assert_allclose(o.sx @ o.sy - o.sy @ o.sx, 1j * o.sz, atol=1e-12)
    casimir = o.sx @ o.sx + o.sy @ o.sy + o.sz @ o.sz
    np.testing.assert_allclose(casimir, s * (s + 1) * np.eye(two_s + 1), atol=1e-12)
    np.testing.assert_allclose(o.sp, o.sm.conj().T)


@given(two_s_values)
def test_parity_flips_transverse_components(two_s):
    o = spin_operators(two_s)
    p = o.parity
    np.testing.assert_allclose(p @ o.sx @ p, -o.sx, atol=1e-14)
    np.testing.assert_allclose(p @ o.sy @ p, -o.sy, atol=1e-14)
    np.testing.assert_allclose(p @ o.sz @ p, o.sz)


def test_basis_starts_at_minus_s():
    o = spin_operators(3)
    np.testing.assert_allclose(np.diag(o.sz).real, [-1.5, -0.5, 0.5, 1.5])
    assert o.parity[0, 0] == 1 and o.parity[1, 1] == -1


@pytest.mark.parametrize("bad", [0, -2])
def test_rejects_nonpositive_spin(bad):
    with pytest.raises(DomainError):
        spin_operators(bad)


def test_kron_keeps_sparsity_and_checks_cap():
    a = sp.identity(3, format="csr")
    assert sp.issparse(kron(a, np.eye(2)))
    assert not sp.issparse(kron(np.eye(2), np.eye(2)))
    np.testing.assert_allclose(kron_chain([np.eye(2), np.diag([1.0, 2.0])]), np.diag([1.0, 2.0, 1.0, 2.0]))
    with pytest.raises(ResourceLimitError):
        kron(np.eye(2), np.eye(2), DEFAULT_POLICY.updated(max_dim=3))


def test_fix_phase_makes_largest_entry_positive():
    v = np.array([[-0.6, 0.0], [0.8j, -1.0]])
    out = fix_phase(v)
    assert out[1, 0].real > 0 and abs(out[1, 0].imag) < 1e-15
    assert out[1, 1].real > 0
    np.testing.assert_allclose(np.abs(out), np.abs(v))
    # ties go to the first entry
    np.testing.assert_allclose(fix_phase(np.array([-1.0, 1.0])), [1.0, -1.0])


def test_hermitian_eig_rejects_non_hermitian():
    with pytest.raises(DomainError):
        hermitian_eig(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_sparse_path_matches_dense():
    rng = np.random.default_rng(1)
    n = 300
    m = sp.random(n, n, density=0.02, random_state=2)
    m = (m + m.T).tocsr() + sp.diags(rng.normal(size=n))
    policy = DEFAULT_POLICY.updated(dense_max_dim=100)
    w_sparse, v = hermitian_eig(m, k=3, policy=policy)
    w_dense = np.linalg.eigvalsh(m.toarray())[:3]
    np.testing.assert_allclose(w_sparse, w_dense, atol=1e-9)
    assert np.linalg.norm(m @ v - v * w_sparse) < 1e-8


def test_sparse_path_reports_nonconvergence():
    m = sp.diags(np.linspace(0, 1, 400)).tocsr()
    policy = DEFAULT_POLICY.updated(dense_max_dim=10, lanczos_maxiter=1)
    with pytest.raises(NonConvergenceError):
        hermitian_eig(m, k=2, policy=policy)


def _random_rho(rng, dims):
    d = int(np.prod(dims))
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho = a @ a.conj().T
    return DensityMatrix(rho / np.trace(rho), dims)


def _loop_partial_trace(rho, dims, keep):
    """Entry-by-entry oracle over multi-indices."""
    kept = [dims[k] for k in keep]
    traced = [i for i in range(len(dims)) if i not in keep]
    d = int(np.prod(kept))
    out = np.zeros((d, d), dtype=complex)
    t = rho.reshape(tuple(dims) * 2)
    for a in itertools.product(*[range(x) for x in kept]):
        for b in itertools.product(*[range(x) for x in kept]):
            acc = 0
            for c in itertools.product(*[range(dims[i]) for i in traced]):
                row, col = [0] * len(dims), [0] * len(dims)
                for k, ia, ib in zip(keep, a, b):
                    row[k], col[k] = ia, ib
                for i, ic in zip(traced, c):
                    row[i] = col[i] = ic
                acc += t[tuple(row) + tuple(col)]
            out[np.ravel_multi_index(a, kept), np.ravel_multi_index(b, kept)] = acc
    return out


@given(
    st.lists(st.integers(2, 3), min_size=2, max_size=3),
    st.data(),
)
def test_partial_trace_matches_loop_oracle(dims, data):
    keep = data.draw(st.lists(st.integers(0, len(dims) - 1), min_size=1, max_size=len(dims) - 1, unique=True))
    rho = _random_rho(np.random.default_rng(len(dims) * 7 + sum(keep)), tuple(dims))
    got = partial_trace(rho, keep)
    np.testing.assert_allclose(got.rho, _loop_partial_trace(rho.rho, dims, sorted(keep)), atol=1e-13)
    got.validate()


def test_partial_trace_rejects_bad_selection():
    rho = _random_rho(np.random.default_rng(0), (2, 2))
    with pytest.raises(DomainError):
        partial_trace(rho, [2])


def test_partial_transpose_is_involution_and_keeps_trace():
    rho = _random_rho(np.random.default_rng(3), (2, 3))
    pt = partial_transpose(rho, 1)
    assert abs(np.trace(pt) - 1) < 1e-12
    back = partial_transpose(DensityMatrix(pt, (2, 3)), 1)
    np.testing.assert_allclose(back, rho.rho, atol=1e-15)
    # transposing either side gives the same spectrum
    w0 = np.linalg.eigvalsh(partial_transpose(rho, 0))
    w1 = np.linalg.eigvalsh(pt)
    np.testing.assert_allclose(w0, w1, atol=1e-12)


def test_density_matrix_validation():
    with pytest.raises(DomainError):
        DensityMatrix(np.eye(3), (2, 2))
    with pytest.raises(DomainError):
        DensityMatrix(np.diag([1.5, -0.5]), (2,)).validate()
    with pytest.raises(DomainError):
        DensityMatrix(np.eye(2), (2,)).validate()


@given(st.integers(1, 4), st.integers(1, 4))
def test_parity_mask_is_product_of_site_parities(two_s, n_sites):
    mask = parity_mask(two_s, n_sites)
    local = np.diag(spin_operators(two_s).parity)
    expect = np.ones(1)
    for _ in range(n_sites):
        expect = np.kron(expect, local)
    np.testing.assert_array_equal(mask, expect)
