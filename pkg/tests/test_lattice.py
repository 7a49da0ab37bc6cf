import numpy as np
import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from ringdat.lattice import (
    InvalidParameter,
    InvalidTopology,
    RingTopology,
    analytic_spectrum_dimerized,
    analytic_spectrum_isotropic,
    apply_disorder,
    build_dimerized,
    build_hamiltonian,
    build_isotropic,
    dimer_block,
    dimer_fourier_basis,
    hamiltonian_in_units_of_J,
    numeric_spectrum,
    sample_disorder,
    spectral_gap,
)


def exact_eigenvalues(H):
    """Roots of the characteristic polynomial computed symbolically."""
    M = sympy.Matrix(H.tolist()).applyfunc(sympy.nsimplify)
    lam = sympy.symbols("lam")
    roots = sympy.roots(M.charpoly(lam).as_expr(), lam)
    assert sum(roots.values()) == M.shape[0]
    return np.sort([complex(sympy.N(r, 30)).real for r, mult in roots.items() for _ in range(mult)])


def projector(vecs):
    return vecs @ vecs.conj().T


# construction


def test_isotropic_four_sites():
    H = build_isotropic(RingTopology.isotropic(4, 1.0))
    expected = np.zeros((4, 4))
    for a, b in [(0, 1), (1, 2), (2, 3), (3, 0)]:
        expected[a, b] = expected[b, a] = 1.0
    np.testing.assert_array_equal(H, expected)


def test_isotropic_lh1_size_is_circulant(iso32):
    H = build_isotropic(iso32)
    assert iso32.J == 488.5
    np.testing.assert_array_equal(H, np.roll(np.roll(H, 1, axis=0), 1, axis=1))
    assert H[0, 1] == H[0, 31] == 488.5
    assert np.count_nonzero(H) == 64


def test_triangle_eigenvalues_against_characteristic_polynomial():
    H = build_isotropic(RingTopology.isotropic(3, 2.0))
    exact = exact_eigenvalues(H)
    np.testing.assert_allclose(exact, [-2.0, -2.0, 4.0], atol=1e-12)
    np.testing.assert_allclose(numeric_spectrum(H).eigenvalues, exact, atol=1e-12)
    np.testing.assert_allclose(analytic_spectrum_isotropic(RingTopology.isotropic(3, 2.0)).eigenvalues, exact, atol=1e-12)


def test_dimerized_four_sites():
    H = build_dimerized(RingTopology.dimerized(4, 2.0, 1.0))
    # 1-based edges (1,2)=(3,4)=J1, (2,3)=(4,1)=J2
    assert H[0, 1] == H[2, 3] == 2.0
    assert H[1, 2] == H[3, 0] == 1.0
    np.testing.assert_array_equal(H, H.T)
    assert np.count_nonzero(H) == 8


def test_lh1_edges(lh1):
    H = build_dimerized(lh1)
    for j in range(32):
        expected = 600.0 if j % 2 == 0 else 377.0
        assert H[j, (j + 1) % 32] == expected
    assert np.all(np.diag(H) == 0)


def test_equal_couplings_reproduce_isotropic():
    a = build_dimerized(RingTopology.dimerized(10, 1.7, 1.7))
    b = build_isotropic(RingTopology.isotropic(10, 1.7))
    np.testing.assert_array_equal(a, b)


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(n_sites=2, kind="isotropic", J=1.0),
        dict(n_sites=5, kind="dimerized", J1=1.0, J2=1.0),
        dict(n_sites=6, kind="isotropic", J=0.0),
        dict(n_sites=6, kind="dimerized", J1=1.0, J2=-1.0),
        dict(n_sites=6, kind="chain", J=1.0),
    ],
)
def test_invalid_topologies(kwargs):
    with pytest.raises(InvalidTopology):
        RingTopology(**kwargs)


def test_builders_reject_wrong_kind(lh1, iso32):
    with pytest.raises(InvalidTopology):
        build_isotropic(lh1)
    with pytest.raises(InvalidTopology):
        build_dimerized(iso32)


def test_effective_coupling(lh1, iso32):
    assert lh1.effective_J == 488.5
    assert iso32.effective_J == 488.5
    assert lh1.beta == pytest.approx(600 / 377)
    assert lh1.default_sink_source == 17


# disorder


def test_zero_sigma_is_zero_vector():
    d = sample_disorder(12, 0.0, seed=123, index=4)
    np.testing.assert_array_equal(d.offsets, np.zeros(12))


def test_disorder_statistics():
    n = 100_000
    d = sample_disorder(n, 1.0, seed=7, index=0)
    assert abs(d.offsets.mean()) < 4 / np.sqrt(n)
    assert abs(d.offsets.std() - 1.0) < 0.01


def test_disorder_is_reproducible_and_index_dependent():
    a = sample_disorder(32, 0.5, seed=42, index=7)
    b = sample_disorder(32, 0.5, seed=42, index=7)
    np.testing.assert_array_equal(a.offsets, b.offsets)
    c = sample_disorder(32, 0.5, seed=42, index=8)
    e = sample_disorder(32, 0.5, seed=43, index=7)
    assert not np.array_equal(a.offsets, c.offsets)
    assert not np.array_equal(a.offsets, e.offsets)


def test_disorder_scales_with_sigma():
    a = sample_disorder(16, 0.25, seed=1, index=3)
    b = sample_disorder(16, 1.0, seed=1, index=3)
    np.testing.assert_allclose(4 * a.offsets, b.offsets, rtol=1e-15)


def test_negative_sigma_rejected():
    with pytest.raises(InvalidParameter):
        sample_disorder(4, -0.1, seed=0, index=0)


def test_apply_zero_disorder_is_identity(lh1):
    H = build_hamiltonian(lh1)
    np.testing.assert_array_equal(apply_disorder(H, np.zeros(32)), H)


def test_constant_offset_shifts_spectrum_and_keeps_eigenspaces():
    H = build_isotropic(RingTopology.isotropic(8, 1.0))
    shifted = apply_disorder(H, np.full(8, 0.3))
    a, b = numeric_spectrum(H), numeric_spectrum(shifted)
    np.testing.assert_allclose(b.eigenvalues, a.eigenvalues + 0.3, atol=1e-12)
    # compare eigenspaces through projectors, grouped by degenerate level
    levels = np.unique(np.round(a.eigenvalues, 8))
    for lev in levels:
        ia = np.isclose(a.eigenvalues, lev, atol=1e-8)
        ib = np.isclose(b.eigenvalues, lev + 0.3, atol=1e-8)
        dist = np.abs(projector(a.eigenvectors[:, ia]) - projector(b.eigenvectors[:, ib])).max()
        assert dist <= 1e-8


def test_single_site_offset_against_characteristic_polynomial():
    H = apply_disorder(build_isotropic(RingTopology.isotropic(4, 1.0)), np.array([1.0, 0, 0, 0]))
    np.testing.assert_allclose(numeric_spectrum(H).eigenvalues, exact_eigenvalues(H), atol=1e-12)


def test_apply_disorder_accepts_realization_and_checks_shape():
    H = build_isotropic(RingTopology.isotropic(6, 1.0))
    d = sample_disorder(6, 1.0, 0, 0)
    np.testing.assert_array_equal(np.diag(apply_disorder(H, d)), d.offsets)
    with pytest.raises(ValueError):
        apply_disorder(H, np.zeros(5))


@settings(max_examples=30, deadline=None)
@given(
    n=st.integers(2, 32).map(lambda k: 2 * k),
    dimer=st.booleans(),
    sigma=st.floats(0, 3),
    seed=st.integers(0, 2**63),
    index=st.integers(0, 10**6),
)
def test_disordered_hamiltonian_is_symmetric_ring(n, dimer, sigma, seed, index):
    topo = RingTopology.dimerized(n, 1.3, 0.7) if dimer else RingTopology.isotropic(n, 1.0)
    H = hamiltonian_in_units_of_J(topo, sample_disorder(n, sigma, seed, index).offsets)
    np.testing.assert_array_equal(H, H.T)
    i, j = np.nonzero(H)
    off = i != j
    assert np.all(((i[off] - j[off]) % n == 1) | ((j[off] - i[off]) % n == 1))


# spectra


def test_isotropic_four_site_spectrum():
    spec = analytic_spectrum_isotropic(RingTopology.isotropic(4, 1.0))
    np.testing.assert_allclose(spec.eigenvalues, [-2, 0, 0, 2], atol=1e-15)
    assert spec.source == "analytic"


def test_isotropic_lh1_band_edges(iso32):
    ev = analytic_spectrum_isotropic(iso32).eigenvalues
    assert ev[0] == pytest.approx(-977.0, abs=1e-12)
    assert ev[-1] == pytest.approx(977.0, abs=1e-12)


def test_isotropic_formula_sign_convention_even_n(iso32):
    # the textbook -2J cos(2 pi k/N) agrees as a multiset for even N
    k = np.arange(1, 33)
    minus = np.sort(-2 * 488.5 * np.cos(2 * np.pi * k / 32))
    np.testing.assert_allclose(analytic_spectrum_isotropic(iso32).eigenvalues, minus, atol=1e-10)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(3, 64), J=st.floats(0.1, 1000))
def test_isotropic_analytic_matches_numeric(n, J):
    topo = RingTopology.isotropic(n, J)
    a = analytic_spectrum_isotropic(topo).eigenvalues
    b = numeric_spectrum(build_isotropic(topo), vectors=False).eigenvalues
    np.testing.assert_allclose(a, b, atol=1e-10 * 2 * J, rtol=0)


@settings(max_examples=40, deadline=None)
@given(K=st.integers(2, 32), J1=st.floats(0.1, 1000), J2=st.floats(0.1, 1000))
def test_dimerized_analytic_matches_numeric(K, J1, J2):
    topo = RingTopology.dimerized(2 * K, J1, J2)
    a = analytic_spectrum_dimerized(topo).eigenvalues
    b = numeric_spectrum(build_dimerized(topo), vectors=False).eigenvalues
    np.testing.assert_allclose(a, b, atol=1e-10 * (J1 + J2), rtol=0)


def test_isotropic_fourier_eigenvectors():
    topo = RingTopology.isotropic(9, 1.5)
    spec = analytic_spectrum_isotropic(topo, vectors=True)
    V = spec.eigenvectors
    H = build_isotropic(topo)
    np.testing.assert_allclose(V.conj().T @ V, np.eye(9), atol=1e-10)
    residual = np.abs(H @ V - V * spec.eigenvalues).max()
    assert residual <= 1e-10 * np.linalg.norm(H, 2)


def test_numeric_eigenvectors_orthonormal(lh1):
    H = build_dimerized(lh1)
    spec = numeric_spectrum(H)
    V = spec.eigenvectors
    np.testing.assert_allclose(V.T @ V, np.eye(32), atol=1e-10)
    assert np.abs(H @ V - V * spec.eigenvalues).max() <= 1e-10 * np.linalg.norm(H, 2)
    assert np.all(np.diff(spec.eigenvalues) >= 0)


def test_isotropic_degeneracy_under_k_reflection():
    topo = RingTopology.isotropic(12, 1.0)
    spec = analytic_spectrum_isotropic(topo)
    energy = dict(zip(spec.labels, spec.eigenvalues))
    for k in range(1, 12):
        assert energy[k] == pytest.approx(energy[12 - k], abs=1e-14)
    # two-fold degenerate except at the band edges
    _, counts = np.unique(np.round(spec.eigenvalues, 10), return_counts=True)
    assert sorted(counts)[:2] == [1, 1] and set(counts) <= {1, 2}


def test_equal_couplings_band_matches_isotropic():
    J = 0.8
    dim = analytic_spectrum_dimerized(RingTopology.dimerized(16, J, J)).eigenvalues
    K = 8
    alpha = 2 * np.pi * np.arange(K) / K
    closed = np.sort(np.concatenate([2 * J * np.abs(np.cos(alpha / 2)), -2 * J * np.abs(np.cos(alpha / 2))]))
    np.testing.assert_allclose(dim, closed, atol=1e-14)
    iso = analytic_spectrum_isotropic(RingTopology.isotropic(16, J)).eigenvalues
    np.testing.assert_allclose(dim, iso, atol=1e-14)


def test_lh1_band_extremes(lh1):
    ev = np.abs(analytic_spectrum_dimerized(lh1).eigenvalues)
    assert ev.min() == pytest.approx(223.0, abs=1e-9)
    assert ev.max() == pytest.approx(977.0, abs=1e-9)


@settings(max_examples=25, deadline=None)
@given(K=st.integers(2, 32), J1=st.floats(0.1, 10), J2=st.floats(0.1, 10))
def test_dimerized_chiral_symmetry_and_gap(K, J1, J2):
    topo = RingTopology.dimerized(2 * K, J1, J2)
    ev = analytic_spectrum_dimerized(topo).eigenvalues
    np.testing.assert_allclose(ev, -ev[::-1], atol=1e-12)
    num = numeric_spectrum(build_dimerized(topo), vectors=False).eigenvalues
    np.testing.assert_allclose(num, -num[::-1], atol=1e-10 * (J1 + J2))
    if K % 2 == 0:
        # alpha_k = pi is on the grid: band minimum |J1 - J2| is attained
        assert np.abs(ev).min() == pytest.approx(abs(J1 - J2), abs=1e-10 * (J1 + J2))
        assert spectral_gap(ev) == pytest.approx(2 * abs(J1 - J2), abs=1e-9 * (J1 + J2))


def test_lh1_gap_is_twice_coupling_difference(lh1):
    assert spectral_gap(analytic_spectrum_dimerized(lh1).eigenvalues) == pytest.approx(446.0, abs=1e-9)
    assert spectral_gap(analytic_spectrum_dimerized(RingTopology.dimerized(32, 500, 500)).eigenvalues) == 0.0


# Bloch blocks


def test_block_zero_equal_couplings():
    h, U, degenerate = dimer_block(0, RingTopology.dimerized(8, 1.0, 1.0))
    assert not degenerate
    assert h[0, 1] == pytest.approx(2.0)
    np.testing.assert_allclose(np.linalg.eigvalsh(h), [-2, 2], atol=1e-14)


def test_block_gap_closing_is_flagged():
    topo = RingTopology.dimerized(8, 1.0, 1.0)
    h, U, degenerate = dimer_block(2, topo)  # alpha = pi
    assert degenerate
    np.testing.assert_allclose(h, np.zeros((2, 2)), atol=1e-14)
    np.testing.assert_allclose(U.conj().T @ U, np.eye(2), atol=1e-14)


def test_lh1_block_at_alpha_pi(lh1):
    h, U, _ = dimer_block(8, lh1)
    np.testing.assert_allclose(np.linalg.eigvalsh(h), [-223, 223], atol=1e-9)


@pytest.mark.parametrize("k", range(16))
def test_blocks_diagonalized_by_U(lh1, k):
    h, U, degenerate = dimer_block(k, lh1)
    assert not degenerate
    e = lh1.J2 * np.sqrt(lh1.beta**2 + 1 + 2 * lh1.beta * np.cos(2 * np.pi * k / 16))
    np.testing.assert_allclose(U.conj().T @ U, np.eye(2), atol=1e-10)
    D = U.conj().T @ h @ U
    np.testing.assert_allclose(D, np.diag([e, -e]), atol=1e-10 * e)


def test_bloch_basis_block_diagonalizes_ring(lh1):
    F = dimer_fourier_basis(32)
    np.testing.assert_allclose(F.conj().T @ F, np.eye(32), atol=1e-12)
    Hk = F.conj().T @ build_dimerized(lh1) @ F
    for k in range(16):
        h, _, _ = dimer_block(k, lh1)
        np.testing.assert_allclose(Hk[2 * k : 2 * k + 2, 2 * k : 2 * k + 2], h, atol=1e-9)
    mask = np.kron(np.eye(16), np.ones((2, 2))).astype(bool)
    assert np.abs(Hk[~mask]).max() < 1e-9


def test_block_index_range(lh1):
    with pytest.raises(InvalidParameter):
        dimer_block(16, lh1)
