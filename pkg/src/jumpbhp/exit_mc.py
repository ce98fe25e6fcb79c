"""Monte Carlo estimators built on simulated exits.

Estimates keep exact rational running sums, so merging chunk results is
associative and commutative bit for bit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from . import engine
from .kernels import Params
from .regions import KernelMassTable, Region, UnionTarget, annulus, annulus_kernel_table
from .samplers import PathBatch, StepPolicy, simulate_batch

__all__ = [
    "Estimate",
    "exact_sum",
    "estimate_exit_time",
    "estimate_harmonic_measure",
    "estimate_harmonic_fn",
    "estimate_harmonic_fns",
    "levy_system_check",
    "AnnulusTarget",
    "HarmonicFnSpec",
]


def exact_sum(values) -> Fraction:
    """Exact sum of finite doubles as a Fraction.

    Each double is an integer mantissa times a power of two, so the sum is
    computed with integer arithmetic per exponent.
    """
    v = np.asarray(values, dtype=float).ravel()
    if v.size == 0:
        return Fraction(0)
    if not np.all(np.isfinite(v)):
        raise ValueError("exact_sum needs finite values")
    mant, expo = np.frexp(v)
    ints = (mant * 2.0 ** 53).astype(np.int64)
    nz = ints != 0
    ints, expo = ints[nz], expo[nz]
    if ints.size == 0:
        return Fraction(0)
    emin = int(expo.min())
    total = 0
    for e in np.unique(expo):
        sel = ints[expo == e]
        group = 0
        for start in range(0, sel.size, 256):
            group += int(sel[start:start + 256].sum())
        total += group << (int(e) - emin)
    shift = 53 - emin
    return Fraction(total, 1 << shift) if shift >= 0 else Fraction(total << (-shift))


@dataclass
class Estimate:
    """Mean of i.i.d. samples with its standard error.

    ``censored`` counts samples from paths that were censored near the
    boundary (or ran out of steps); they enter the sums with the value the
    estimator assigns them.
    """

    n: int = 0
    s1: Fraction = Fraction(0)
    s2: Fraction = Fraction(0)
    censored: int = 0

    @classmethod
    def from_samples(cls, samples, censored=None) -> "Estimate":
        s = np.asarray(samples, dtype=float)
        c = 0 if censored is None else int(np.count_nonzero(censored))
        return cls(int(s.size), exact_sum(s), exact_sum(s * s), c)

    def merge(self, other: "Estimate") -> "Estimate":
        return Estimate(self.n + other.n, self.s1 + other.s1, self.s2 + other.s2, self.censored + other.censored)

    __add__ = merge

    @property
    def mean(self) -> float:
        return float(self.s1 / self.n) if self.n else math.nan

    @property
    def stderr(self) -> float:
        if self.n < 2:
            return math.nan
        var = (self.s2 - self.s1 * self.s1 / self.n) / (self.n - 1)
        return math.sqrt(max(float(var), 0.0) / self.n)

    @property
    def censored_fraction(self) -> float:
        return self.censored / self.n if self.n else 0.0

    @property
    def bias_bracket(self):
        """``[mean, mean + censored_fraction]`` for indicator estimators."""
        return self.mean, self.mean + self.censored_fraction

    def as_dict(self):
        return {"mean": self.mean, "stderr": self.stderr, "n": self.n, "censored_fraction": self.censored_fraction}


def _batch(region, params, x0, n, policy, seed, stream, workers, table=None) -> PathBatch:
    return simulate_batch(region, params, x0, n, policy or StepPolicy(), seed, stream=stream, workers=workers,
                          table=table)


def estimate_exit_time(region: Region, params: Params, x0, n: int, policy: Optional[StepPolicy] = None,
                       seed: int = 0, stream: int = 0, workers: Optional[int] = None) -> Estimate:
    """``E_x0[tau_region]``; censored paths contribute their censoring time."""
    b = _batch(region, params, x0, n, policy, seed, stream, workers)
    return Estimate.from_samples(b.times, b.censored)


def _hits(batch: PathBatch, target) -> np.ndarray:
    # censored paths sit at their snapped boundary point and count as
    # continuous exits there; paths out of step budget count as misses
    hit = target.contains(batch.positions)
    return hit & (batch.modes != engine.MODE_BUDGET)


def estimate_harmonic_measure(region: Region, params: Params, x0, target, n: int,
                              policy: Optional[StepPolicy] = None, seed: int = 0, stream: int = 0,
                              workers: Optional[int] = None) -> Estimate:
    """``P_x0(X_tau in target)``.

    Censored paths are evaluated at their snapped boundary point, so they
    never hit a target at positive distance from the region.
    """
    b = _batch(region, params, x0, n, policy, seed, stream, workers)
    return Estimate.from_samples(_hits(b, target).astype(float), b.censored)


@dataclass(frozen=True)
class AnnulusTarget:
    """``{r_in < |y - center| < r_out}`` (``r_out`` may be infinite)."""

    center: tuple
    r_in: float
    r_out: float = math.inf

    @property
    def region(self) -> Region:
        return annulus(np.asarray(self.center, dtype=float), self.r_in, self.r_out)

    def contains(self, pts):
        return self.region.contains(pts)

    def table(self, params: Params, rmax: Optional[float] = None, n: int = 2001) -> KernelMassTable:
        rmax = 0.999 * self.r_in if rmax is None else rmax
        return annulus_kernel_table(params, self.center, self.r_in, self.r_out, rmax, n)


def levy_system_check(region: Region, params: Params, x0, target: AnnulusTarget, n: int,
                      policy: Optional[StepPolicy] = None, seed: int = 0, stream: int = 0,
                      workers: Optional[int] = None, table: Optional[KernelMassTable] = None):
    """Both sides of the jump-counting identity for an annular target.

    lhs: fraction of paths whose exit jump lands in the target.
    rhs: mean over paths of ``int_0^tau int_target J(X_s, y) dy ds``.
    The z-score uses the paired per-path difference.
    """
    if table is None:
        table = target.table(params)
    b = _batch(region, params, x0, n, policy, seed, stream, workers, table=table)
    hit = ((b.modes == engine.MODE_JUMP) & target.contains(b.positions)).astype(float)
    lhs = Estimate.from_samples(hit, b.censored)
    rhs = Estimate.from_samples(b.integral, b.censored)
    diff = Estimate.from_samples(hit - b.integral)
    z = diff.mean / diff.stderr if diff.stderr > 0 else 0.0
    return lhs, rhs, float(z)


@dataclass
class HarmonicFnSpec:
    """``u(x) = P_x(X_tau in target)`` with ``tau`` the exit time of ``region``."""

    region: Region
    target: object
    params: Params
    policy: StepPolicy = field(default_factory=StepPolicy)


def estimate_harmonic_fns(region: Region, targets: Sequence, params: Params, x, n: int,
                          policy: Optional[StepPolicy] = None, seed: int = 0, stream: int = 0,
                          workers: Optional[int] = None):
    """Several exit-target functions from one set of paths (common random numbers)."""
    b = _batch(region, params, x, n, policy, seed, stream, workers)
    return [Estimate.from_samples(_hits(b, t).astype(float), b.censored) for t in targets]


def estimate_harmonic_fn(u_spec: HarmonicFnSpec, x, n: int, policy: Optional[StepPolicy] = None, seed: int = 0,
                         stream: int = 0, workers: Optional[int] = None) -> Estimate:
    return estimate_harmonic_fns(u_spec.region, [u_spec.target], u_spec.params, x, n,
                                 policy or u_spec.policy, seed, stream, workers)[0]
