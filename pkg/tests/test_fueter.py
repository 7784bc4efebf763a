import numpy as np
import pytest

from sfine.clifford import Multivector, Paravector, UnitImaginary
from sfine.errors import AxisTooClose, GridTooSmall, OnSpectrumSphere
from sfine.fueter import (
    Box,
    apply_dirac,
    apply_laplacian,
    check_axiality,
    check_fine_structure_chain,
    check_kernel_identity_D,
    check_kernel_identity_DDelta,
    curves_to_csv,
    grid_function,
    order_estimates,
    richardson_order,
    stem_sampler,
)
from sfine.slice import StemPolynomial

S_POINT = Paravector(0.3, [0.5, 0.2, 0.0, 0.0, 0.0])
PROBES = np.array([[2.0, 1.0, 0.0, 0.0, 0.0, 0.0], [2.25, 0.75, 0.25, -0.25, 0.0, 0.125]])


def coordinate(k):
    def sample(xs):
        out = np.zeros_like(xs)
        out[..., 0] = xs[..., k]
        return out

    return sample


def squared_norm(xs):
    out = np.zeros_like(xs)
    out[..., 0] = np.sum(xs[..., :6] ** 2, axis=-1)
    return out


def grid(sampler, h=2.0**-4, side="left"):
    return grid_function(sampler, Box.cube(), h, side=side)


def test_dirac_on_linear_functions():
    x0 = apply_dirac(grid(coordinate(0))).values_at(PROBES)
    np.testing.assert_allclose(x0, np.tile(np.eye(32)[0], (2, 1)), atol=1e-12)
    z = apply_dirac(grid(stem_sampler(StemPolynomial.monomial(1)))).values_at(PROBES)
    np.testing.assert_allclose(z[:, 0], -4.0, atol=1e-12)
    assert np.abs(z[:, 1:]).max() < 1e-12
    const = apply_dirac(grid(stem_sampler(StemPolynomial((Multivector.blade(1, 2),))))).values_at(PROBES)
    assert np.abs(const).max() == 0.0


def test_laplacian_on_quadratics():
    lap = apply_laplacian(grid(lambda xs: coordinate(0)(xs) * xs[..., :1]))
    np.testing.assert_allclose(lap.values_at(PROBES)[:, 0], 2.0, atol=1e-10)
    np.testing.assert_allclose(apply_laplacian(grid(squared_norm)).values_at(PROBES)[:, 0], 12.0, atol=1e-10)
    assert np.abs(apply_laplacian(grid(coordinate(3))).values_at(PROBES)).max() < 1e-12


def test_dirac_times_conjugate_is_laplacian_on_quadratics():
    f = stem_sampler(StemPolynomial((1.0, Multivector.blade(2), Multivector.blade(1, 3))))
    ddbar = apply_dirac(apply_dirac(grid(f), conjugate=True)).values_at(PROBES)
    lap = apply_laplacian(grid(f)).values_at(PROBES)
    np.testing.assert_allclose(ddbar, lap, atol=1e-9)


@pytest.mark.parametrize("side", ["left", "right"])
def test_kernel_identity_D_converges_at_second_order(side):
    curve = check_kernel_identity_D(S_POINT, side=side, n_probes=20)
    assert curve.order == pytest.approx(2.0, abs=0.1)
    assert curve.extrapolated < 0.01 * curve.residuals[-1]


@pytest.mark.parametrize("side", ["left", "right"])
def test_kernel_identity_DDelta_converges_at_second_order(side):
    curve = check_kernel_identity_DDelta(S_POINT, side=side, n_probes=10)
    assert curve.order == pytest.approx(2.0, abs=0.1)
    assert curve.residuals[-1] < 1e-3


def test_left_and_right_kernels_agree_in_size():
    left = check_kernel_identity_D(S_POINT, side="left", n_probes=10)
    right = check_kernel_identity_D(S_POINT, side="right", n_probes=10)
    np.testing.assert_allclose(left.residuals, right.residuals, rtol=0.5)


def test_wrong_constant_is_rejected_by_a_wide_margin():
    good = check_kernel_identity_D(S_POINT, n_probes=10)
    bad = check_kernel_identity_D(S_POINT, constant=-3.0, n_probes=10)
    assert bad.control and not good.control
    assert bad.residuals[-1] > 1e3 * good.residuals[-1]


def test_kernel_box_must_avoid_the_sphere():
    with pytest.raises(OnSpectrumSphere):
        check_kernel_identity_D(Paravector(2.0, [1.0, 0, 0, 0, 0]))


@pytest.mark.parametrize("degree", [0, 1, 4])
def test_chain_vanishes_exactly_on_low_degree(degree):
    report = check_fine_structure_chain(StemPolynomial.monomial(degree), n_probes=10)
    assert report.all_exact


def test_chain_on_degree_seven_converges_at_second_order():
    report = check_fine_structure_chain(
        StemPolynomial.monomial(7), box=Box.cube(half_width=1.0), hs=(1 / 16, 1 / 32, 1 / 64), n_probes=10
    )
    for curve in report.curves:
        assert curve.order == pytest.approx(2.0, abs=0.15)


def test_d_lap_of_cube_is_constant():
    g = apply_dirac(apply_laplacian(grid(stem_sampler(StemPolynomial.monomial(3))), 1))
    vals = g.values_at(PROBES)
    np.testing.assert_allclose(vals[:, 0], 16.0, atol=1e-8)
    assert np.abs(vals[:, 1:]).max() < 1e-8


def test_axiality():
    box = Box.cube()
    z2 = grid_function(stem_sampler(StemPolynomial.monomial(2)), box, 2.0**-4)
    assert check_axiality(z2, n_probes=20) < 1e-12
    dz3 = apply_dirac(grid_function(stem_sampler(StemPolynomial.monomial(3)), box, 2.0**-4))
    assert check_axiality(dz3, n_probes=20) < 1e-8
    x1 = grid_function(coordinate(1), box, 2.0**-4)
    assert check_axiality(x1, n_probes=20) > 0.1
    with pytest.raises(AxisTooClose):
        check_axiality(grid_function(coordinate(1), Box.cube(center=(0, 0, 0, 0, 0, 0)), 2.0**-4))


def test_grid_too_small():
    g = grid_function(coordinate(0), Box.cube(half_width=0.05), 0.02)
    with pytest.raises(GridTooSmall):
        apply_laplacian(apply_dirac(g), 2)
    with pytest.raises(GridTooSmall):
        grid_function(coordinate(0), Box.cube(half_width=0.01), 0.02)


def test_order_helpers_and_csv():
    hs, res = [0.1, 0.05, 0.025], [1.0, 0.25, 0.0625]
    np.testing.assert_allclose(order_estimates(hs, res), [2.0, 2.0])
    assert richardson_order(hs, res) == pytest.approx(2.0)
    curve = check_kernel_identity_D(S_POINT, n_probes=5)
    lines = curves_to_csv([curve]).strip().splitlines()
    assert lines[0] == "h,identity,max_residual,order_estimate"
    assert len(lines) == 1 + len(curve.hs)
