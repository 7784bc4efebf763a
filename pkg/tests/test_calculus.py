import numpy as np
import pytest

from sfine.calculus import (
    CalculusKind,
    apply,
    apply_adaptive,
    default_contour,
    product_rule_check_biharmonic,
    product_rule_check_harmonic,
    riesz_projector,
)
from sfine.clifford import Multivector, UnitImaginary
from sfine.contour import Contour, annulus
from sfine.errors import ContourTouchesSpectrum, NotIntrinsic, SideMismatch, SpectrumNotSplit
from sfine.harness import two_sphere_operator
from sfine.operators import CliffordOperator, make_commuting_operator
from sfine.resolvents import random_operator
from sfine.slice import StemPolynomial

K = CalculusKind


@pytest.fixture(scope="module")
def T():
    return random_operator(np.random.default_rng(3), 2, scale=0.6)


def matrix_power(T, m):
    lift = np.linalg.matrix_power(T.op.lift(), m)
    return CliffordOperator.unlift(lift, T.n)


@pytest.mark.parametrize("m", range(5))
def test_s_calculus_reproduces_powers(T, m):
    c = default_contour(T)
    got = apply(K.S, StemPolynomial.monomial(m), T, c)
    assert (got - matrix_power(T, m)).norm() < 1e-10 * max(1.0, matrix_power(T, m).norm())


def test_right_calculus_reproduces_powers(T):
    f = StemPolynomial.monomial(3, side="right")
    got = apply(K.S, f, T, default_contour(T))
    assert (got - matrix_power(T, 3)).norm() < 1e-10 * matrix_power(T, 3).norm()


def test_convergence_is_geometric(T):
    f = StemPolynomial.monomial(2)
    exact = matrix_power(T, 2)
    errs = [(apply(K.S, f, T, default_contour(T, nodes=n)) - exact).norm() for n in (16, 32)]
    assert errs[0] / errs[1] > 1e3


def test_constants_and_hand_oracles():
    T = random_operator(np.random.default_rng(5), 2)
    c = default_contour(T)
    one = StemPolynomial.real([1.0])
    I = CliffordOperator.identity(T.d, T.n)
    assert (apply(K.S, one, T, c) - I).norm() < 1e-11
    assert apply(K.D, one, T, c).norm() < 1e-11
    # D(x^2) = -8 x0 vanishes when T0 = 0
    assert apply(K.D, StemPolynomial.monomial(2), T, c).norm() < 1e-10
    # D(x) = -4, Delta(x^2) = -8, DDelta(x^3) = 16
    assert (apply(K.D, StemPolynomial.monomial(1), T, c) - I * -4.0).norm() < 1e-10
    assert (apply(K.Delta, StemPolynomial.monomial(2), T, c) - I * -8.0).norm() < 1e-10
    assert (apply(K.DDelta, StemPolynomial.monomial(3), T, c) - I * 16.0).norm() < 1e-9


def test_d_of_square_sees_the_scalar_part():
    eigs = np.zeros((2, 6))
    eigs[:, 0] = 0.5
    eigs[0, 1], eigs[1, 2] = 1.0, 0.4
    T = make_commuting_operator(eigs)
    got = apply(K.D, StemPolynomial.monomial(2), T, default_contour(T))
    assert (got - CliffordOperator.identity(2, T.n) * -4.0).norm() < 1e-10


def test_contour_independence(T):
    f = StemPolynomial((1.0, Multivector.blade(2), 0.5, Multivector.blade(1, 3)))
    c = default_contour(T)
    ref = apply(K.D, f, T, c)
    assert (apply(K.D, f, T, c.scaled(1.3)) - ref).norm() < 1e-9 * max(1.0, ref.norm())
    rng = np.random.default_rng(0)
    for _ in range(5):
        other = apply(K.D, f, T, c.with_J(UnitImaginary.random(rng)))
        assert (other - ref).norm() < 1e-9 * max(1.0, ref.norm())


def test_annulus_matches_disc_when_spectrum_avoids_centre():
    T = two_sphere_operator()
    f = StemPolynomial.monomial(3, Multivector.blade(4))
    disc = apply(K.DDelta, f, T, Contour(0.0, 6.0, UnitImaginary.axis(1), 256))
    ring = apply(K.DDelta, f, T, annulus(0.0, 0.5, 6.0, UnitImaginary.axis(1), 256))
    assert (disc - ring).norm() < 1e-9 * max(1.0, disc.norm())


def test_calculus_errors(T):
    c = default_contour(T)
    with pytest.raises(SideMismatch):
        apply(K.S, StemPolynomial.monomial(1), T, c, side="right")
    S = two_sphere_operator()
    with pytest.raises(ContourTouchesSpectrum):
        apply(K.S, StemPolynomial.monomial(1), S, Contour(0.0, 1.02, UnitImaginary.axis(1)))
    with pytest.raises(ContourTouchesSpectrum):
        apply(K.S, StemPolynomial.monomial(1), S, Contour(0.0, 2.0, UnitImaginary.axis(1)))
    with pytest.raises(NotIntrinsic):
        product_rule_check_biharmonic(StemPolynomial((0.0, Multivector.blade(1))), StemPolynomial.monomial(1), T, c)
    with pytest.raises(SideMismatch):
        product_rule_check_harmonic(StemPolynomial.monomial(1), StemPolynomial.monomial(1, side="right"), T, c)


def test_adaptive_converges(T):
    res = apply_adaptive(K.S, StemPolynomial.monomial(3), T, default_contour(T, nodes=16))
    assert res.converged and res.nodes <= 256
    assert (res.value - matrix_power(T, 3)).norm() < 1e-9


@pytest.mark.parametrize(
    "f, g",
    [
        (StemPolynomial.real([1.0]), StemPolynomial.real([1.0])),
        (StemPolynomial.monomial(1), StemPolynomial.monomial(1)),
        (StemPolynomial.real([1.0, 0.0, 1.0]), StemPolynomial((0.0, 1.0, 0.0, Multivector.blade(1)))),
    ],
    ids=["ones", "z-z", "poly-clifford"],
)
def test_product_rules(T, f, g):
    c = default_contour(T)
    for res in product_rule_check_biharmonic(f, g, T, c) + product_rule_check_harmonic(f, g, T, c):
        assert res.passed, res


def test_projector_values_for_two_spheres():
    T = two_sphere_operator()
    G1 = Contour(0.0, 2.0, UnitImaginary.axis(1))
    G2 = Contour(0.0, 2.5, UnitImaginary.axis(1))
    chi = np.zeros((2, 2))
    chi[0, 0] = 1.0
    for kind, value in ((K.D, -0.25), (K.DDelta, 4.0)):
        pair = riesz_projector(kind, T, G1, G2)
        assert pair.agreement < 1e-12
        expected = CliffordOperator.from_real(value * chi, T.n)
        assert (pair.inner - expected).norm() < 1e-12


def test_projector_of_empty_part_vanishes():
    T = two_sphere_operator(radii=(2.0, 3.0))
    pair = riesz_projector(K.D, T, Contour(0.0, 0.5, UnitImaginary.axis(1)), Contour(0.0, 1.0, UnitImaginary.axis(1)))
    assert pair.inner.norm() < 1e-14 and pair.outer.norm() < 1e-14


def test_projector_errors():
    T = two_sphere_operator()
    with pytest.raises(SpectrumNotSplit):
        riesz_projector(K.D, T, Contour(0.0, 2.0, UnitImaginary.axis(1)), Contour(0.0, 4.0, UnitImaginary.axis(1)))
    with pytest.raises(ValueError):
        riesz_projector(K.S, T, Contour(0.0, 2.0, UnitImaginary.axis(1)), Contour(0.0, 2.5, UnitImaginary.axis(1)))


def test_intrinsic_and_general_polynomials_on_diagonal_operator():
    # diagonal T acts entrywise, so S-calculus on an eigenvalue is scalar evaluation
    eigs = np.zeros((2, 6))
    eigs[0, 1], eigs[1, 3] = 0.7, 1.2
    T = make_commuting_operator(eigs)
    f = StemPolynomial((1.0, Multivector.blade(2), 0.3))
    got = apply(K.S, f, T, default_contour(T))
    from sfine.clifford import Paravector

    for k in range(2):
        x = Paravector(0.0, eigs[k, 1:])
        np.testing.assert_allclose(got.entry(k, k).coeffs, f(x).coeffs, atol=1e-11)
