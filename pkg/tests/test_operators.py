import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sfine.clifford import DIM, Multivector, Paravector, UnitImaginary, left_matrix
from sfine.errors import InvalidConstruction, RankMismatch, SingularBasis, SingularOperator
from sfine.operators import (
    CliffordOperator,
    conj_operator,
    is_invertible,
    make_commuting_operator,
    op_inverse,
    op_inverse_lifted,
    pseudo_q,
    random_basis,
    s_q,
    s_spectrum,
    spectrum_distance,
)
from sfine.resolvents import random_operator


def random_clifford_operator(rng, d):
    return CliffordOperator(rng.standard_normal((d, d, DIM)))


def naive_product(a, b):
    """Entrywise sum_j a_ij b_jk using the left-regular matrices."""
    d = a.d
    out = np.zeros((d, d, DIM))
    for i in range(d):
        for k in range(d):
            for j in range(d):
                out[i, k] += left_matrix(a.coeffs[i, j]) @ b.coeffs[j, k]
    return out


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 3), st.integers(0, 2**32 - 1))
def test_product_matches_entrywise_sum(d, seed):
    rng = np.random.default_rng(seed)
    a, b = random_clifford_operator(rng, d), random_clifford_operator(rng, d)
    np.testing.assert_allclose((a @ b).coeffs, naive_product(a, b), atol=1e-10)


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 3), st.integers(0, 2**32 - 1))
def test_inverse_both_sides(d, seed):
    rng = np.random.default_rng(seed)
    a = random_clifford_operator(rng, d)
    inv = op_inverse(a)
    eye = CliffordOperator.identity(d)
    scale = max(1.0, inv.norm() * a.norm())
    assert (a @ inv - eye).norm() < 1e-9 * scale
    assert (inv @ a - eye).norm() < 1e-9 * scale


def test_diagonal_fast_path_agrees_with_lift():
    rng = np.random.default_rng(0)
    c = np.zeros((3, 3, DIM))
    for i in range(3):
        c[i, i] = rng.standard_normal(DIM)
    a = CliffordOperator(c)
    assert a.is_diagonal()
    np.testing.assert_allclose(op_inverse(a).coeffs, op_inverse_lifted(a).coeffs, atol=1e-12)


def test_singular_operator_reports_rcond():
    a = CliffordOperator.from_real(np.array([[1.0, 2.0], [2.0, 4.0]]))
    with pytest.raises(SingularOperator) as info:
        op_inverse(a)
    assert info.value.rcond < 1e-12


def test_rank_mismatch():
    with pytest.raises(RankMismatch):
        CliffordOperator.identity(2) @ CliffordOperator.identity(3)


def test_scalings_act_on_the_correct_side():
    a = CliffordOperator.scalar(Multivector.blade(1), 1)
    e2 = Multivector.blade(2)
    assert a.rscale(e2).entry(0, 0).is_close(Multivector.blade(1, 2))
    assert a.lscale(e2).entry(0, 0).is_close(-Multivector.blade(1, 2))


def test_commuting_components_and_spectrum():
    rng = np.random.default_rng(1)
    T = random_operator(rng, 4)
    for i in range(6):
        for j in range(6):
            ci, cj = T.components[i], T.components[j]
            assert np.linalg.norm(ci @ cj - cj @ ci) < 1e-10
    spheres = s_spectrum(T)
    assert sum(sp.multiplicity for sp in spheres) == 4
    radii = sorted(np.linalg.norm(T.eigs[:, 1:], axis=1))
    assert sorted(sp.radius for sp in spheres) == pytest.approx(radii)


def test_spectrum_deduplicates_equal_spheres():
    T = make_commuting_operator([[0, 1, 0, 0, 0, 0], [0, 0, 1, 0, 0, 0], [0, 0, 0, 2, 0, 0]])
    spheres = s_spectrum(T)
    assert [(sp.radius, sp.multiplicity) for sp in spheres] == [(1.0, 2), (2.0, 1)]


def test_t0_rule():
    # T0 != 0 needs one of T1..T5 to vanish: here T2..T5 are zero
    make_commuting_operator([[1.0, 2.0], [0.5, -1.0]])
    full = [[1.0, 1, 1, 1, 1, 1]]
    with pytest.raises(InvalidConstruction):
        make_commuting_operator(full)
    with pytest.raises(InvalidConstruction):
        make_commuting_operator([[1.0, 2.0]], allow_t0=False)


@pytest.mark.parametrize(
    "eigs",
    [[], [[0, 1]] * 17, [[0, np.nan]], [[0, 1, 2, 3, 4, 5, 6]]],
)
def test_invalid_constructions(eigs):
    with pytest.raises(InvalidConstruction):
        make_commuting_operator(eigs)


def test_components_beyond_n_rejected():
    with pytest.raises(InvalidConstruction):
        make_commuting_operator([[0, 1, 0, 0, 1, 0]], n=3)
    T = make_commuting_operator([[0, 1, 0, 1, 0, 0]], n=3)
    assert T.n == 3


def test_singular_basis():
    with pytest.raises(SingularBasis):
        make_commuting_operator([[0, 1], [0, 2]], V=np.array([[1.0, 1.0], [1.0, 1.0]]))


def test_similar_operator_keeps_spectrum():
    rng = np.random.default_rng(2)
    T = random_operator(rng, 3, similar=False)
    T2 = T.similar(random_basis(rng, 3))
    assert [(s.center, s.radius) for s in s_spectrum(T)] == pytest.approx(
        [(s.center, s.radius) for s in s_spectrum(T2)]
    )


def test_conjugate_negates_vector_part():
    rng = np.random.default_rng(3)
    T = random_operator(rng, 2)
    Tb = conj_operator(T)
    np.testing.assert_array_equal(Tb.components[1:], -T.components[1:])
    np.testing.assert_array_equal((T.op + Tb.op).coeffs[..., 1:], 0.0)


def test_both_q_operators_fail_exactly_on_the_spectrum():
    T = make_commuting_operator([[0, 1, 0, 0, 0, 0], [0, 0, 0, 3, 0, 0]])
    rng = np.random.default_rng(4)
    for radius in (1.0, 3.0):
        s = Paravector.from_slice(0.0, radius, UnitImaginary.random(rng))
        assert not is_invertible(pseudo_q(s, T))
        assert not is_invertible(s_q(s, T))
        assert spectrum_distance(s, s_spectrum(T)) < 1e-12
    s = Paravector.from_slice(0.2, 2.0, UnitImaginary.random(rng))
    assert is_invertible(pseudo_q(s, T))
    assert is_invertible(s_q(s, T))


def test_pseudo_q_for_real_s_is_real_polynomial():
    # for real s, Q = s^2 - 2 s T0 + T Tbar, with T Tbar = T0^2 + sum T_i^2
    rng = np.random.default_rng(5)
    T = random_operator(rng, 3)
    s = Paravector(0.7)
    q = pseudo_q(s, T)
    comps = T.components
    expected = 0.49 * np.eye(3) - 1.4 * comps[0] + sum(c @ c for c in comps)
    np.testing.assert_allclose(q.coeffs[..., 0], expected, atol=1e-12)
    np.testing.assert_allclose(q.coeffs[..., 1:], 0.0, atol=1e-12)
