import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from jumpbhp.exit_mc import (AnnulusTarget, Estimate, estimate_exit_time, estimate_harmonic_fns,
                             estimate_harmonic_measure, exact_sum, levy_system_check)
from jumpbhp.kernels import Params
from jumpbhp.regions import ball, half_space
from jumpbhp.samplers import StepPolicy


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-1e6, 1e6, allow_nan=False), max_size=60))
def test_exact_sum_matches_fractions(xs):
    assert exact_sum(xs) == sum((Fraction(x) for x in xs), Fraction(0))


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(0, 10, allow_nan=False), min_size=2, max_size=40), st.randoms())
def test_merge_is_order_free(xs, rnd):
    parts = [Estimate.from_samples(xs[i:i + 3]) for i in range(0, len(xs), 3)]
    shuffled = parts[:]
    rnd.shuffle(shuffled)
    a, b = Estimate(), Estimate()
    for p in parts:
        a = a + p
    for p in shuffled:
        b = b + p
    assert (a.s1, a.s2, a.n) == (b.s1, b.s2, b.n)
    assert a.mean == pytest.approx(np.mean(xs))


def test_brownian_exit_time_off_center():
    est = estimate_exit_time(ball(np.zeros(2), 1.0), Params(d=2, alpha=1.0, a=0.0), np.array([0.5, 0.0]), 20_000,
                             seed=3)
    assert abs(est.mean - 0.1875) < 3.5 * est.stderr


def test_hemisphere_symmetry():
    est = estimate_harmonic_measure(ball(np.zeros(2), 1.0), Params(d=2, alpha=1.0, a=0.0), np.zeros(2),
                                    half_space([1.0, 0.0]), 20_000, seed=4)
    assert abs(est.mean - 0.5) < 3.5 * est.stderr


def test_shared_paths_give_identical_functions():
    t = half_space([0.0, 1.0])
    u, v = estimate_harmonic_fns(ball(np.zeros(2), 1.0), [t, t], Params(d=2, alpha=1.0, a=1.0),
                                 np.array([0.2, 0.1]), 5000, seed=5)
    assert u.s1 == v.s1 and u.mean / v.mean == 1.0


def test_rotation_invariance_of_estimates():
    rot = np.array([[0.6, -0.8], [0.8, 0.6]])
    reg = ball(np.zeros(2), 1.0)
    tgt = half_space([0.0, 1.0], 0.3)
    prm = Params(d=2, alpha=1.3, a=1.0)
    x = np.array([0.1, 0.2])
    a = estimate_harmonic_measure(reg, prm, x, tgt, 20_000, seed=6)
    b = estimate_harmonic_measure(reg.moved(rot), prm, rot @ x, tgt.moved(rot), 20_000, seed=7)
    assert abs(a.mean - b.mean) < 3 * math.hypot(a.stderr, b.stderr)


def test_levy_system_small():
    tgt = AnnulusTarget((0.0, 0.0), 1.0, 2.0)
    lhs, rhs, z = levy_system_check(ball(np.zeros(2), 0.5), Params(d=2, alpha=1.0, a=1.0), np.zeros(2), tgt,
                                    20_000, seed=8)
    assert abs(z) < 3.5
    assert lhs.mean > 0 and rhs.mean > 0


def test_censored_paths_reported():
    pol = StepPolicy(kill_rel=0.05)
    est = estimate_exit_time(ball(np.zeros(2), 1.0), Params(d=2, alpha=1.0, a=0.0), np.zeros(2), 2000, pol, seed=9)
    assert est.censored_fraction > 0.5
    lo, hi = est.bias_bracket
    assert hi >= lo
