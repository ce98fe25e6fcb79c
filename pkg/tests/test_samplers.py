import math

import numpy as np
import pytest
from scipy import integrate, special

from jumpbhp.errors import BudgetError, ParameterError
from jumpbhp.kernels import Params
from jumpbhp.regions import ball
from jumpbhp.samplers import (StepPolicy, SubordinatorRep, jump_rate, mittag_leffler, potential_density,
                              simulate_batch, simulate_until_exit, stable_subordinator_increment,
                              truncated_xa_increment, xa_increment)
from jumpbhp.streams import chunk_generator


def test_mittag_leffler_half_is_erfcx():
    for t in (0.0, 0.1, 1.0, 3.9, 4.1, 50.0):
        assert mittag_leffler(0.5, t) == pytest.approx(special.erfcx(math.sqrt(t)), rel=1e-10)


def test_mittag_leffler_monotone():
    t = np.geomspace(1e-3, 1e3, 40)
    v = mittag_leffler(0.7, t)
    assert np.all(np.diff(v) < 0) and np.all(v > 0)


def test_potential_density_laplace_transform():
    prm = Params(d=1, alpha=1.4, a=0.7)
    s = 2.0
    val, _ = integrate.quad(lambda t: math.exp(-s * t) * potential_density(prm, t), 0, np.inf, limit=200)
    assert val == pytest.approx(1.0 / (s + prm.a ** prm.alpha * s ** (prm.alpha / 2)), rel=1e-6)


def test_subordinator_laplace():
    rng = chunk_generator(1, 0, 0)
    x = stable_subordinator_increment(0.4, 2.0, rng, 200_000)
    e = np.exp(-0.5 * x)
    ref = math.exp(-2.0 * 0.5 ** 0.4)
    assert abs(e.mean() - ref) < 4 * e.std() / math.sqrt(len(e))
    rep = SubordinatorRep(0.4, 0.5)
    assert rep.laplace_exponent(1.0) == pytest.approx(1.0 + 0.5 ** 0.8)


def test_increment_shape_and_a_zero():
    rng = chunk_generator(2, 0, 0)
    x = xa_increment(Params(d=3, alpha=1.0, a=0.0), 0.5, rng, 50_000)
    assert x.shape == (50_000, 3)
    assert x.var(axis=0) == pytest.approx([1.0, 1.0, 1.0], rel=0.03)


def test_truncated_jumps_within_range():
    prm = Params(d=2, alpha=1.2, a=1.0, lam=1.0)
    pol = StepPolicy(eta=0.05)
    rng = chunk_generator(3, 0, 0)
    sizes = np.concatenate([truncated_xa_increment(prm, 1.0, pol, rng)[1].sizes for _ in range(200)])
    assert sizes.size > 0
    assert np.all((sizes >= 0.05) & (sizes < 1.0))
    assert jump_rate(prm, 0.05) > 0


def test_policy_resolution():
    pol = StepPolicy()
    assert pol.resolve_eta(Params(d=2, alpha=1.0, lam=1.0), 10.0) == pytest.approx(1e-3)
    assert pol.resolve_eta(Params(d=2, alpha=1.0), 0.5) == pytest.approx(5e-3)
    with pytest.raises(ParameterError):
        StepPolicy(eta=0.2).resolve_eta(Params(d=2, alpha=1.0, lam=0.1))
    with pytest.raises(ParameterError):
        StepPolicy(c_step=0.0)


def test_budget_error_carries_partial():
    rng = chunk_generator(4, 0, 0)
    with pytest.raises(BudgetError) as exc:
        simulate_until_exit(ball(np.zeros(2), 1.0), Params(d=2, alpha=1.0, a=0.0), np.zeros(2),
                            StepPolicy(max_steps=3), rng)
    assert exc.value.partial.path_steps == 3


def test_start_outside_rejected():
    with pytest.raises(ParameterError):
        simulate_batch(ball(np.zeros(2), 1.0), Params(d=2, alpha=1.0), np.array([2.0, 0.0]), 10, StepPolicy(), 0)


def test_workers_do_not_change_output():
    reg = ball(np.zeros(2), 1.0)
    prm = Params(d=2, alpha=1.0, a=1.0)
    a = simulate_batch(reg, prm, np.zeros(2), 5000, StepPolicy(), 42, workers=1)
    b = simulate_batch(reg, prm, np.zeros(2), 5000, StepPolicy(), 42, workers=3)
    assert np.array_equal(a.times, b.times) and np.array_equal(a.positions, b.positions)


def test_exit_modes():
    reg = ball(np.zeros(2), 0.5)
    b = simulate_batch(reg, Params(d=2, alpha=1.0, a=1.0), np.zeros(2), 3000, StepPolicy(), 5)
    rec = b.record(0)
    assert rec.exit_mode in ("jump-out", "continuous", "censored-near-boundary")
    assert np.all(np.linalg.norm(b.positions, axis=1) >= 0.5 * (1 - 1e-9))
    assert (b.modes == 0).any() and (b.modes == 1).any()
