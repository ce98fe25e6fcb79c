"""Samplers for the mixed process, its truncation and the subordination
machinery, plus exit-time simulation.

Conventions: the Brownian part has generator the Laplacian (per-coordinate
variance ``2t``), the jump part has kernel ``a^alpha A(d, alpha) |z|^(-d-alpha)``
restricted to ``|z| < lam`` when ``params.lam`` is set.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import integrate, special

from . import engine, streams
from .errors import BudgetError, ParameterError
from .kernels import Params, normalization_constant, sphere_area
from .regions import KernelMassTable, Region

__all__ = [
    "SubordinatorRep",
    "ExitRecord",
    "StepPolicy",
    "JumpLog",
    "PathBatch",
    "stable_subordinator_increment",
    "xa_increment",
    "truncated_xa_increment",
    "mittag_leffler",
    "potential_density",
    "simulate_until_exit",
    "simulate_batch",
    "small_jump_variance_rate",
    "jump_rate",
]


# ---------------------------------------------------------------------------
# subordination
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SubordinatorRep:
    """``T^a_t = t + a^2 T_t`` with ``E exp(-s T_t) = exp(-t s^(alpha/2))``."""

    alpha_half: float
    a: float = 1.0

    def __post_init__(self):
        if not 0 < self.alpha_half < 1:
            raise ParameterError("alpha_half must lie in (0, 1)")
        if self.a < 0:
            raise ParameterError("a must be nonnegative")

    def laplace_exponent(self, s):
        """``phi^a(s) = s + a^alpha s^(alpha/2)``."""
        s = np.asarray(s, dtype=float)
        return s + self.a ** (2 * self.alpha_half) * s ** self.alpha_half

    def sample(self, t, rng, size=None):
        return t + self.a ** 2 * stable_subordinator_increment(self.alpha_half, t, rng, size)


def stable_subordinator_increment(alpha_half: float, t: float, rng: np.random.Generator, size=None):
    """Positive ``beta``-stable variable ``T_t`` with ``E e^(-s T_t) = e^(-t s^beta)``.

    Kanter's representation: ``T_1 = (K(U) / E)^((1 - beta)/beta)`` with ``U``
    uniform on (0, 1), ``E`` standard exponential and
    ``K(u) = sin((1-beta) pi u) sin(beta pi u)^(beta/(1-beta)) / sin(pi u)^(1/(1-beta))``;
    then ``T_t = t^(1/beta) T_1``.
    """
    b = float(alpha_half)
    if not 0 < b < 1:
        raise ParameterError("alpha_half must lie in (0, 1)")
    if not t > 0:
        raise ParameterError("t must be positive")
    u = rng.random(size)
    e = rng.standard_exponential(size)
    pu = np.pi * u
    log_k = (np.log(np.sin((1 - b) * pu)) + b / (1 - b) * np.log(np.sin(b * pu))
             - np.log(np.sin(pu)) / (1 - b))
    t1 = np.exp((1 - b) / b * (log_k - np.log(e)))
    return t ** (1.0 / b) * t1


def xa_increment(params: Params, t: float, rng: np.random.Generator, size=None):
    """Exact increment of the mixed process over time ``t``.

    ``X^a_t`` has the law of Brownian motion (generator the Laplacian) run to
    the random time ``S = t + a^2 T_t``.
    """
    if not t > 0:
        raise ParameterError("t must be positive")
    if params.lam is not None:
        raise ParameterError("xa_increment samples the untruncated process")
    shape = () if size is None else (size,) if np.isscalar(size) else tuple(size)
    s = np.full(shape, float(t))
    if params.a > 0:
        s = s + params.a ** 2 * stable_subordinator_increment(0.5 * params.alpha, t, rng, size)
    z = rng.standard_normal(shape + (params.d,))
    return np.sqrt(2.0 * s)[..., None] * z


# ---------------------------------------------------------------------------
# truncated process
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StepPolicy:
    """Discretization knobs of the path simulator.

    ``eta`` (small-jump cut-off) and ``eps_kill`` (censoring distance) are
    absolute when given; otherwise ``eta = min(1e-3 lam, eta_rel * scale)``
    and ``eps_kill = kill_rel * scale`` with ``scale`` the region's length
    scale.  The step is ``min(dt_max, c_step * m^2 * 2 / v)`` where ``m`` is
    the distance to the boundary and ``v`` the per-coordinate variance rate
    (``v = 2`` for plain Brownian motion).
    """

    dt_max: float = 1e-2
    c_step: float = 0.1
    eta: Optional[float] = None
    eta_rel: float = 1e-2
    eps_kill: Optional[float] = None
    kill_rel: float = 1e-4
    bridge: bool = True
    brownian: bool = True
    max_steps: int = 10_000_000

    def __post_init__(self):
        for name in ("dt_max", "c_step", "eta_rel", "kill_rel"):
            if not getattr(self, name) > 0:
                raise ParameterError(f"{name} must be positive")
        if self.eta is not None and not self.eta > 0:
            raise ParameterError("eta must be positive")
        if self.eps_kill is not None and not self.eps_kill > 0:
            raise ParameterError("eps_kill must be positive")
        if self.max_steps < 1:
            raise ParameterError("max_steps must be positive")

    def resolve_eta(self, params: Params, scale: float = 1.0) -> float:
        if self.eta is not None:
            eta = self.eta
        else:
            eta = self.eta_rel * scale
            if params.lam is not None:
                eta = min(eta, 1e-3 * params.lam)
        if params.lam is not None and not eta < params.lam:
            raise ParameterError("small-jump cut-off must be below the truncation radius")
        return float(eta)

    def resolve_kill(self, scale: float = 1.0) -> float:
        return float(self.eps_kill if self.eps_kill is not None else self.kill_rel * scale)


def small_jump_variance_rate(params: Params, eta: float) -> float:
    """Per-coordinate variance rate of the jumps below ``eta``:
    ``(a^alpha A / d) int_{|y|<eta} |y|^(2-d-alpha) dy``."""
    if params.a == 0:
        return 0.0
    d, al = params.d, params.alpha
    return (params.jump_weight * normalization_constant(d, al) * sphere_area(d)
            * eta ** (2 - al) / ((2 - al) * d))


def jump_rate(params: Params, eta: float) -> float:
    """Total rate of jumps with size in ``[eta, lam)``."""
    if params.a == 0:
        return 0.0
    d, al = params.d, params.alpha
    upper = 0.0 if params.lam is None else params.lam ** (-al)
    return params.jump_weight * normalization_constant(d, al) * sphere_area(d) * (eta ** (-al) - upper) / al


def _jump_radii(params, eta, u):
    al = params.alpha
    upper = 0.0 if params.lam is None else params.lam ** (-al)
    return (eta ** (-al) - u * (eta ** (-al) - upper)) ** (-1.0 / al)


@dataclass
class JumpLog:
    times: np.ndarray
    jumps: np.ndarray

    @property
    def sizes(self):
        return np.linalg.norm(self.jumps, axis=1) if len(self.jumps) else np.zeros(0)


def truncated_xa_increment(params: Params, t: float, policy: StepPolicy, rng: np.random.Generator,
                           scale: float = 1.0):
    """Approximate increment of the truncated process over time ``t``.

    Brownian part plus the Gaussian stand-in for jumps below ``eta`` plus the
    exact compound Poisson of jumps in ``[eta, lam)``.  Returns the
    displacement and the log of the compound-Poisson jumps.
    """
    if not t > 0:
        raise ParameterError("t must be positive")
    eta = policy.resolve_eta(params, scale)
    d = params.d
    var = (2.0 if policy.brownian else 0.0) + small_jump_variance_rate(params, eta)
    disp = math.sqrt(var * t) * rng.standard_normal(d)
    rate = jump_rate(params, eta)
    count = rng.poisson(rate * t) if rate > 0 else 0
    times = np.sort(rng.random(count)) * t
    radii = _jump_radii(params, eta, rng.random(count))
    dirs = rng.standard_normal((count, d))
    dirs /= np.linalg.norm(dirs, axis=1)[:, None]
    jumps = radii[:, None] * dirs
    return disp + jumps.sum(axis=0), JumpLog(times, jumps)


# ---------------------------------------------------------------------------
# Mittag-Leffler potential density
# ---------------------------------------------------------------------------

def _ml_series(beta, t, terms=200):
    x = t ** beta
    k = np.arange(terms)
    logs = k * math.log(x) - special.gammaln(1 + k * beta) if x > 0 else None
    if logs is None:
        return 1.0
    signs = np.where(k % 2 == 0, 1.0, -1.0)
    return float(math.fsum(signs * np.exp(logs)))


def _ml_integral(beta, t):
    # E_beta(-t^beta) = int_0^inf exp(-r t) K(r) dr with the spectral density
    # K(r) = sin(beta pi) r^(beta-1) / (pi (r^(2 beta) + 2 r^beta cos(beta pi) + 1)); r = u / t
    sb, cb = math.sin(beta * math.pi), math.cos(beta * math.pi)

    def smooth(u):
        rb = (u / t) ** beta
        return math.exp(-u) * sb / math.pi * t ** (-beta) / (rb * rb + 2 * rb * cb + 1)

    kw = dict(epsabs=0.0, epsrel=1e-12, limit=200)
    lo, _ = integrate.quad(smooth, 0.0, 1.0, weight="alg", wvar=(beta - 1, 0.0), **kw)
    hi, _ = integrate.quad(lambda u: smooth(u) * u ** (beta - 1), 1.0, np.inf, **kw)
    return lo + hi


def mittag_leffler(beta: float, t):
    """``M_beta(t) = E_beta(-t^beta) = sum_n (-1)^n t^(n beta) / Gamma(1 + n beta)``.

    Power series while ``t^beta <= 2``; beyond that the representation as a
    Laplace transform of its (positive) spectral density, which also makes
    complete monotonicity manifest.
    """
    if not 0 < beta < 1:
        raise ParameterError("beta must lie in (0, 1)")
    arr = np.asarray(t, dtype=float)
    if np.any(arr < 0):
        raise ParameterError("t must be nonnegative")
    out = np.empty(arr.shape)
    for idx, tv in np.ndenumerate(arr):
        if tv == 0:
            out[idx] = 1.0
        elif tv ** beta <= 2.0:
            out[idx] = _ml_series(beta, tv)
        else:
            out[idx] = _ml_integral(beta, tv)
    return float(out) if out.ndim == 0 else out


def potential_density(params: Params, t):
    """``u^a(t) = M_{1 - alpha/2}(a^(2 alpha/(2 - alpha)) t)``, whose Laplace
    transform is ``1 / (s + a^alpha s^(alpha/2))``."""
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ParameterError("t must be positive")
    al = params.alpha
    c = params.a ** (2 * al / (2 - al))
    res = mittag_leffler(1 - 0.5 * al, c * t)
    return res


# ---------------------------------------------------------------------------
# exit simulation
# ---------------------------------------------------------------------------

@dataclass
class ExitRecord:
    exit_time: float
    exit_position: np.ndarray
    exit_mode: str
    path_steps: int
    censor_distance: float = 0.0


@dataclass
class PathBatch:
    """Arrays for ``n`` simulated paths (one row per path)."""

    times: np.ndarray
    positions: np.ndarray
    modes: np.ndarray
    steps: np.ndarray
    integral: np.ndarray
    censor_distance: np.ndarray
    eta: float = 0.0
    eps_kill: float = 0.0

    @property
    def n(self):
        return len(self.times)

    @property
    def censored(self):
        return (self.modes == engine.MODE_CENSOR) | (self.modes == engine.MODE_BUDGET)

    def record(self, i) -> ExitRecord:
        return ExitRecord(float(self.times[i]), self.positions[i].copy(), engine.MODE_NAMES[int(self.modes[i])],
                          int(self.steps[i]), float(self.censor_distance[i]))

    @staticmethod
    def concat(parts, eta=0.0, eps_kill=0.0):
        cols = list(zip(*[(p.times, p.positions, p.modes, p.steps, p.integral, p.censor_distance) for p in parts]))
        return PathBatch(*[np.concatenate(c) for c in cols], eta=eta, eps_kill=eps_kill)


def _engine_args(region: Region, params: Params, policy: StepPolicy, table: Optional[KernelMassTable]):
    if region.d != params.d:
        raise ParameterError("region and params disagree on the dimension")
    eta = policy.resolve_eta(params, region.scale) if params.a > 0 else 1.0
    kill = policy.resolve_kill(region.scale)
    var = (2.0 if policy.brownian else 0.0) + small_jump_variance_rate(params, eta)
    rate = jump_rate(params, eta)
    upper = np.inf if params.lam is None else float(params.lam)
    if table is None:
        tab = (np.zeros(params.d), 1.0, np.zeros(0))
    else:
        tab = (np.asarray(table.center, dtype=float), float(table.step), np.asarray(table.values, dtype=float))
    kind, org, rot, par = region.arrays()
    return dict(kind=kind, org=org, rot=rot, par=par, var_rate=var, jump_rate=rate, eta=eta, upper=upper,
                alpha=float(params.alpha), dt_max=float(policy.dt_max), c_step=float(policy.c_step),
                eps_kill=kill, bridge=bool(policy.bridge), max_steps=int(policy.max_steps),
                tab_c=tab[0], tab_h=tab[1], tab_vals=tab[2])


def _run(gen, n, x0, args):
    out = engine.simulate_paths(gen, n, x0, args["kind"], args["org"], args["rot"], args["par"], args["var_rate"],
                                args["jump_rate"], args["eta"], args["upper"], args["alpha"], args["dt_max"],
                                args["c_step"], args["eps_kill"], args["bridge"], args["max_steps"],
                                args["tab_c"], args["tab_h"], args["tab_vals"])
    return PathBatch(*out)


def simulate_until_exit(region: Region, params: Params, x0, policy: StepPolicy, rng: np.random.Generator,
                        table: Optional[KernelMassTable] = None) -> ExitRecord:
    """Simulate one path from ``x0`` until it leaves ``region``."""
    x0 = np.asarray(x0, dtype=float)
    if not region.contains(x0)[0]:
        raise ParameterError("start point must lie in the region")
    args = _engine_args(region, params, policy, table)
    batch = _run(rng, 1, x0, args)
    rec = batch.record(0)
    if batch.modes[0] == engine.MODE_BUDGET:
        raise BudgetError(f"step budget of {policy.max_steps} exhausted", partial=rec)
    return rec


def simulate_batch(region: Region, params: Params, x0, n: int, policy: StepPolicy, seed: int, stream: int = 0,
                   workers: Optional[int] = None, table: Optional[KernelMassTable] = None,
                   chunk_size: int = streams.CHUNK_SIZE) -> PathBatch:
    """``n`` independent paths in fixed-size chunks keyed by ``(seed, stream, chunk)``.

    Output is identical for any number of workers.  Paths that exhaust the
    step budget are kept and counted as censored.
    """
    x0 = np.asarray(x0, dtype=float)
    if not region.contains(x0)[0]:
        raise ParameterError("start point must lie in the region")
    args = _engine_args(region, params, policy, table)

    def work(idx, size):
        return _run(streams.chunk_generator(seed, stream, idx), size, x0, args)

    parts = streams.run_chunks(work, streams.chunk_sizes(n, chunk_size), workers)
    return PathBatch.concat(parts, eta=args["eta"], eps_kill=args["eps_kill"])
