import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from jumpbhp.errors import ParameterError
from jumpbhp.fields import ChartPower, ConstantField, HalfSpacePower, SmoothBump, SquaredNormField
from jumpbhp.fraclap import (PVQuadSpec, generator_apply, power_1d, power_dd, pv_apply, regime_of,
                             verify_power_bounds)
from jumpbhp.geometry import DomainShape
from jumpbhp.kernels import Params, normalization_constant


def test_p1_vanishes_beyond_cutoff():
    for al in (0.4, 1.0, 1.7):
        for x in (1.0, 1.3, 5.0):
            assert abs(power_1d(1.0, x, al)) < 1e-10


@pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5])
def test_p2_beyond_cutoff(alpha):
    ref = 2 * normalization_constant(1, alpha) / (2 - alpha)
    assert power_1d(2.0, 1.7, alpha) == pytest.approx(ref, rel=1e-8)


def test_continuity_at_unit_distance():
    for p, al in ((1.5, 0.7), (0.8, 1.3)):
        a, b = power_1d(p, 1 - 1e-9, al), power_1d(p, 1 + 1e-9, al)
        assert a == pytest.approx(b, rel=1e-6, abs=1e-8)


def test_rejects_bad_arguments():
    with pytest.raises(ParameterError):
        power_1d(0.0, 0.5, 1.0)
    with pytest.raises(ParameterError):
        power_1d(1.0, -0.5, 1.0)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.2, 2.5), st.floats(0.2, 1.8), st.floats(1e-3, 3.0), st.floats(1.0, 5.0))
def test_dilation_identity(p, alpha, x, lam):
    lhs = power_1d(p, x, alpha, lam)
    rhs = lam ** (p - alpha) * power_1d(p, x / lam, alpha)
    assert lhs == pytest.approx(rhs, rel=1e-8, abs=1e-12)


@pytest.mark.parametrize("p,alpha,x", [(1.4, 1.2, 0.3), (0.7, 0.5, 0.05), (2.3, 1.7, 0.8), (1.0, 1.0, 0.2)])
def test_pv_matches_closed_form_1d(p, alpha, x):
    val = pv_apply(HalfSpacePower(1, p), np.array([x]), Params(d=1, alpha=alpha, lam=1.0))
    assert val == pytest.approx(power_1d(p, x, alpha), rel=1e-6)


def test_pv_matches_reduction_2d():
    prm = Params(d=2, alpha=1.1, lam=1.0)
    x = np.array([0.2, 0.3])
    val = pv_apply(HalfSpacePower(2, 1.5), x, prm)
    assert val == pytest.approx(power_dd(prm, 1.5, 0.2), rel=1e-6)


def test_constants_and_quadratics():
    prm = Params(d=2, alpha=0.9, lam=1.0)
    assert pv_apply(ConstantField(2, 3.0), np.array([0.1, 0.2]), prm) == pytest.approx(0.0, abs=1e-12)
    # int_{|z|<1} |z|^2 A |z|^(-2-alpha) dz = A 2 pi / (2 - alpha)
    ref = normalization_constant(2, 0.9) * 2 * math.pi / (2 - 0.9)
    assert pv_apply(SquaredNormField(2), np.array([0.1, 0.2]), prm) == pytest.approx(ref, rel=1e-8)


def test_generator_without_jumps_is_laplacian():
    dom = DomainShape("c11-bump", d=2, bump=0.1)
    f = ChartPower(dom.chart(), 1.5, cutoff=4 * dom.r0)
    x = np.array([0.01, 0.02])
    val = generator_apply(f, x, Params(d=2, alpha=1.0, a=0.0))
    assert val == pytest.approx(f.laplacian(x))
    # the classical Laplacian of rho^p is positive near the boundary
    assert val > 0


def test_bump_field_regimes():
    dom = DomainShape("half-space", d=2)
    ch = dom.chart()
    r0 = dom.r0
    psi = SmoothBump(ch, r0, 8.0, 12.0)
    near = np.array([[0.1 * r0, 0.05 * r0]])
    assert psi(near)[0] == pytest.approx(8.0 * (0.1 * r0) ** 2 / r0 ** 2)
    far = np.array([[0.6 * r0, 0.2 * r0]])
    assert 8.0 <= psi(far)[0] <= 16.0


def test_regimes():
    assert regime_of(1.5, 1.0) == "p>alpha"
    assert regime_of(1.0, 1.0) == "p=alpha"
    assert regime_of(0.7, 1.0) == "alpha/2<p<alpha"
    assert regime_of(0.5, 1.0) == "p=alpha/2"
    assert regime_of(0.2, 1.0) == "p<alpha/2"


def test_power_bounds_report_rows():
    rep = verify_power_bounds(1.4, 2.2, np.logspace(-3, -1, 5))
    assert rep.regime == "p>alpha"
    rows = list(rep.rows())
    assert len(rows) == 5 and all(len(r) == 4 for r in rows)
    assert rep.passed


def test_relative_schedule_needs_smooth_point():
    f = HalfSpacePower(1, 1.5)
    with pytest.raises(ParameterError):
        pv_apply(f, np.array([0.0]), Params(d=1, alpha=1.0, lam=1.0))
    with pytest.raises(ParameterError):
        pv_apply(f, np.array([0.1]), Params(d=1, alpha=1.0))
