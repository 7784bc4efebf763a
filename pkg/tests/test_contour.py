import numpy as np
import pytest

from sfine.clifford import UnitImaginary, gp
from sfine.contour import Contour, annulus, as_boundary, boundary_encloses


def test_weights_sum_to_zero():
    rng = np.random.default_rng(0)
    c = Contour(0.3, 2.5, UnitImaginary.random(rng), 256)
    assert np.abs(c.weight_array.sum(axis=0)).max() < 1e-13


def test_weights_equal_ds_times_minus_j():
    J = UnitImaginary.axis(2)
    c = Contour(0.0, 1.0, J, 16)
    theta = c.theta
    ds = np.zeros((16, 32))
    # ds/dtheta = R J e^{J theta} = R (-sin + J cos)
    ds[:, 0] = -np.sin(theta)
    ds[:, 2] = np.cos(theta)
    minus_j = np.zeros(32)
    minus_j[2] = -1.0
    expected = gp(ds, minus_j) * 2 * np.pi / 16
    np.testing.assert_allclose(c.weight_array, expected, atol=1e-15)


def test_trapezoid_integrates_inverse_power():
    # (1/2pi) sum (s - c)^{-1} ds_J = 1 on a circle around c
    J = UnitImaginary.axis(1)
    c = Contour(0.5, 2.0, J, 32)
    from sfine.clifford import inverse_array

    centred = c.node_array.copy()
    centred[:, 0] -= 0.5
    total = gp(inverse_array(centred), c.weight_array).sum(axis=0) / (2 * np.pi)
    assert total[0] == pytest.approx(1.0, abs=1e-14)
    assert np.abs(total[1:]).max() < 1e-14


@pytest.mark.parametrize("nodes", [0, 6, 9, 255])
def test_node_count_validation(nodes):
    with pytest.raises(ValueError):
        Contour(0.0, 1.0, UnitImaginary.axis(1), nodes)


def test_radius_and_orientation_validation():
    with pytest.raises(ValueError):
        Contour(0.0, -1.0, UnitImaginary.axis(1))
    with pytest.raises(ValueError):
        Contour(0.0, 1.0, UnitImaginary.axis(1), orientation=2)


def test_enclosure_and_annulus():
    J = UnitImaginary.axis(1)
    c = Contour(0.0, 2.0, J)
    assert c.encloses(0.0, 1.9) and not c.encloses(0.0, 2.1)
    ring = annulus(0.0, 1.0, 3.0, J)
    assert boundary_encloses(ring, 0.0, 2.0)
    assert not boundary_encloses(ring, 0.0, 0.5)
    assert not boundary_encloses(ring, 0.0, 3.5)
    assert as_boundary(c) == [c]
    with pytest.raises(ValueError):
        annulus(0.0, 3.0, 1.0, J)


def test_nodes_lie_in_the_slice_plane():
    J = UnitImaginary.random(np.random.default_rng(1))
    c = Contour(1.0, 2.0, J, 8)
    vec = c.node_array[:, 1:6]
    cross = vec - np.outer(vec @ J.direction, J.direction)
    assert np.abs(cross).max() < 1e-15
    pts = c.points()
    assert pts[0].x0 == pytest.approx(3.0)
