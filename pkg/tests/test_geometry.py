import math

import numpy as np
import pytest

from jumpbhp.errors import GeometryError, ParameterError
from jumpbhp.geometry import DomainShape, box_region, dist_to_complement, rho, verify_characteristics


def _rotation(theta):
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def test_half_space_distances():
    dom = DomainShape("half-space", d=2)
    pts = np.array([[0.3, 0.2], [-1.0, -0.5]])
    assert np.allclose(dom.dist_to_boundary(pts), [0.2, -0.5])
    assert np.allclose(dist_to_complement(dom, pts), [0.2, 0.0])


def test_bump_distance_below_rho():
    dom = DomainShape("c11-bump", d=2, bump=0.5)
    ch = dom.chart()
    pts = np.array([[0.1, 0.1], [0.05, 0.2]])
    rh = rho(ch, pts)
    dl = dom.dist_to_boundary(pts)
    assert np.all(dl <= rh + 1e-12) and np.all(dl > 0)


def test_rigid_motion_preserves_distance():
    dom = DomainShape("c11-bump", d=2, bump=0.3)
    rot = _rotation(0.7)
    shift = np.array([1.0, -2.0])
    moved = dom.rigidly_moved(rot, shift)
    pts = np.array([[0.1, 0.3], [0.2, 0.05]])
    assert np.allclose(moved.dist_to_boundary(pts @ rot.T + shift), dom.dist_to_boundary(pts))


def test_balls():
    b = DomainShape.make_ball([0.0, 0.0], 2.0)
    assert b.contains(np.array([0.5, 0.5]))
    assert b.dist_to_boundary(np.array([0.0, 0.0])) == pytest.approx(2.0)
    c = DomainShape.make_ball_complement([0.0, 0.0], 1.0)
    assert c.dist_to_boundary(np.array([3.0, 0.0])) == pytest.approx(2.0)


def test_box_faces():
    dom = DomainShape("half-space", d=2)
    box = box_region(dom.chart(), 0.1, 0.2)
    assert box.face(np.array([0.0, 0.05])) == 0
    assert box.face(np.array([0.0, -0.01])) == 1
    assert box.face(np.array([0.0, 0.2])) == 2
    assert box.face(np.array([0.3, 0.05])) == 3


def test_chart_window():
    dom = DomainShape("half-space", d=2)
    with pytest.raises(GeometryError):
        rho(dom.chart(), np.array([5.0, 0.1]))


def test_characteristics():
    assert verify_characteristics(DomainShape("c11-bump", d=2, bump=0.1)).passed
    assert verify_characteristics(DomainShape("half-space", d=3)).passed
    assert not verify_characteristics(DomainShape("lipschitz-cone", d=2)).passed


def test_validation():
    with pytest.raises(ParameterError):
        DomainShape("torus")
    with pytest.raises(ParameterError):
        DomainShape("c11-bump", d=2, R=2.0)
