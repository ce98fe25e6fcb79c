"""Quick closed-form checks of a build, used by ``jumpbhp selftest``."""
from __future__ import annotations

import math

import numpy as np
from scipy import special

from .exit_mc import estimate_exit_time
from .fields import HalfSpacePower
from .fraclap import power_1d, pv_apply
from .kernels import Params, char_exponent, normalization_constant
from .regions import ball
from .samplers import StepPolicy, mittag_leffler, stable_subordinator_increment, xa_increment
from .streams import chunk_generator


def _check(name, value, reference, tol, stderr=None):
    err = abs(value - reference)
    bound = tol if stderr is None else max(tol, 3.0 * stderr)
    return dict(name=name, value=float(value), reference=float(reference), error=float(err),
                stderr=float(stderr) if stderr is not None else 0.0, tolerance=float(bound), passed=bool(err <= bound))


def run_checks(seed: int = 0, workers=None, n_paths: int = 20_000, n_increments: int = 100_000):
    """List of check records; every record carries its tolerance."""
    out = [
        _check("normalization d=1 alpha=1", normalization_constant(1, 1.0), 1.0 / math.pi, 1e-14),
        _check("normalization d=2 alpha=1", normalization_constant(2, 1.0), 0.5 / math.pi, 1e-14),
        _check("power p=1 beyond unit distance", power_1d(1.0, 2.0, 1.3), 0.0, 1e-10),
    ]
    for al in (0.5, 1.0, 1.5):
        ref = 2 * normalization_constant(1, al) / (2 - al)
        out.append(_check(f"power p=2 alpha={al}", power_1d(2.0, 1.5, al) / ref, 1.0, 1e-8))
    prm = Params(d=1, alpha=1.2, lam=1.0)
    val = pv_apply(HalfSpacePower(1, 1.4), np.array([0.3]), prm)
    out.append(_check("principal value vs closed form", val / power_1d(1.4, 0.3, 1.2), 1.0, 1e-4))
    lhs = power_1d(1.3, 0.2, 0.9, lam=2.0)
    rhs = 2.0 ** (1.3 - 0.9) * power_1d(1.3, 0.1, 0.9)
    out.append(_check("power scaling in lam", lhs / rhs, 1.0, 1e-8))
    for b, t in ((0.5, 0.5), (0.5, 20.0)):
        out.append(_check(f"Mittag-Leffler beta=1/2 t={t}", mittag_leffler(b, t), special.erfcx(math.sqrt(t)), 1e-10))

    rng = chunk_generator(seed, 9001, 0)
    xp = Params(d=2, alpha=1.3, a=0.8)
    xi = np.array([0.7, -0.4])
    x = xa_increment(xp, 0.6, rng, n_increments)
    c = np.cos(x @ xi)
    out.append(_check("increment characteristic function", c.mean(), math.exp(-0.6 * char_exponent(xp, xi)), 0.0,
                      c.std(ddof=1) / math.sqrt(len(c))))
    s = stable_subordinator_increment(0.6, 1.0, rng, n_increments)
    e = np.exp(-s)
    out.append(_check("stable subordinator Laplace transform", e.mean(), math.exp(-1.0), 0.0,
                      e.std(ddof=1) / math.sqrt(len(e))))

    est = estimate_exit_time(ball(np.zeros(2), 1.0), Params(d=2, alpha=1.0, a=0.0), np.zeros(2), n_paths,
                             StepPolicy(), seed, stream=9002, workers=workers)
    out.append(_check("Brownian exit time from the unit disc", est.mean, 0.25, 0.0, est.stderr))
    return out
