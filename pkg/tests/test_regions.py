import math

import numpy as np
import pytest
from scipy import integrate

from jumpbhp import engine
from jumpbhp.geometry import DomainShape, box_region
from jumpbhp.kernels import Params, normalization_constant
from jumpbhp.regions import (annulus, annulus_kernel_mass, ball, chart_box, chart_cylinder_band, domain_region,
                             half_space)


def test_margins_are_signed_distances():
    r = ball([0.0, 0.0], 1.0) & half_space([0.0, 1.0], -0.5)
    pts = np.array([[0.0, 0.0], [0.0, 0.9], [0.0, -0.7], [2.0, 0.0]])
    assert np.allclose(r.margin(pts), [0.5, 0.1, -0.2, -1.0])


def test_parabola_margin_and_projection():
    dom = DomainShape("c11-bump", d=2, bump=0.5)
    reg = domain_region(dom)
    x = np.array([0.3, 0.4])
    m = reg.margin(x)[0]
    assert m == pytest.approx(dom.dist_to_boundary(x), rel=1e-10)
    loc = np.empty(2)
    out = np.empty(2)
    engine.project_to_boundary(x, reg.kind, reg.org, reg.rot, reg.par, 0, loc, out)
    assert out[1] == pytest.approx(0.5 * out[0] ** 2, abs=1e-12)
    assert np.linalg.norm(out - x) == pytest.approx(m, rel=1e-9)


def test_cone_margin():
    dom = DomainShape("lipschitz-cone", d=2, cone_slope=0.5)
    reg = domain_region(dom)
    x = np.array([0.0, 1.0])
    assert reg.margin(x)[0] == pytest.approx(1.0 / math.sqrt(1.25))


def test_chart_box_matches_geometry():
    dom = DomainShape("c11-bump", d=2, bump=0.2)
    box = box_region(dom.chart(), 0.05, 0.3)
    reg = chart_box(box)
    rng = np.random.default_rng(0)
    pts = rng.uniform([-0.4, -0.02], [0.4, 0.1], (2000, 2))
    assert np.array_equal(reg.contains(pts), box.contains(pts))


def test_band():
    dom = DomainShape("half-space", d=2)
    band = chart_cylinder_band(dom.chart(), 0.1, 0.2, 1.0)
    assert band.contains(np.array([[0.0, 0.15]]))[0]
    assert not band.contains(np.array([[0.0, 0.05]]))[0]


def test_rotation_moves_region():
    rot = np.array([[0.0, -1.0], [1.0, 0.0]])
    reg = half_space([0.0, 1.0], 0.2)
    moved = reg.moved(rot)
    assert moved.contains(np.array([[-0.5, 0.0]]))[0]
    assert not moved.contains(np.array([[0.5, 0.0]]))[0]


@pytest.mark.parametrize("d", [1, 2, 3])
def test_annulus_kernel_mass_at_center(d):
    prm = Params(d=d, alpha=1.3)
    # at the centre: A * |S| * int_1^2 s^(-1-alpha) ds
    from jumpbhp.kernels import sphere_area
    ref = normalization_constant(d, 1.3) * sphere_area(d) * (1 - 2 ** -1.3) / 1.3
    assert annulus_kernel_mass(prm, 0.0, 1.0, 2.0) == pytest.approx(ref, rel=1e-9)


def test_annulus_kernel_mass_off_center_2d():
    prm = Params(d=2, alpha=0.8)
    A = normalization_constant(2, 0.8)
    x = np.array([0.4, 0.0])
    f = lambda th, s: s * A * np.linalg.norm(x - s * np.array([math.cos(th), math.sin(th)])) ** (-2.8)
    ref, _ = integrate.dblquad(f, 1.0, 2.0, 0.0, 2 * math.pi, epsrel=1e-10)
    assert annulus_kernel_mass(prm, 0.4, 1.0, 2.0) == pytest.approx(ref, rel=1e-7)


def test_annulus_region():
    a = annulus([0.0, 0.0], 1.0, 2.0)
    assert a.contains(np.array([[1.5, 0.0]]))[0]
    assert not a.contains(np.array([[0.5, 0.0]]))[0]
