"""Scalar fields with the extra structure the principal-value quadrature needs.

A field is evaluated on an ``(n, d)`` array of points.  Optionally it reports

* ``laplacian(x)``: the classical Laplacian at a point of twice
  differentiability (all fields used here have one in closed form, a.e.),
* ``breaks(x, omega, rmax)``: radii along the ray ``x + r*omega`` where it is
  not smooth (kinks at the boundary, jumps at cut-off spheres),
* ``kinks(x, omega, rmax)``: the subset of breaks where the field has a
  non-smooth power-type singularity (quadrature grades towards those),
* ``smooth_radius(x)``: the radius of a ball around ``x`` on which it is smooth.
"""
from __future__ import annotations

import math

import numpy as np

from .geometry import BoundaryChart

__all__ = [
    "Field",
    "ConstantField",
    "AffineField",
    "SquaredNormField",
    "HalfSpacePower",
    "ChartPower",
    "SmoothBump",
    "SumField",
]


class Field:
    d: int

    def __call__(self, pts):
        raise NotImplementedError

    def laplacian(self, x):
        raise NotImplementedError(f"{type(self).__name__} has no analytic Laplacian")

    def breaks(self, x, omega, rmax):
        return []

    def kinks(self, x, omega, rmax):
        return self.breaks(x, omega, rmax)

    def smooth_radius(self, x):
        return math.inf

    def __add__(self, other):
        return SumField([(1.0, self), (1.0, other)])

    def __sub__(self, other):
        return SumField([(1.0, self), (-1.0, other)])


class ConstantField(Field):
    def __init__(self, d, value=1.0):
        self.d, self.value = d, float(value)

    def __call__(self, pts):
        return np.full(len(np.atleast_2d(pts)), self.value)

    def laplacian(self, x):
        return 0.0


class AffineField(Field):
    def __init__(self, coef, offset=0.0):
        self.coef = np.asarray(coef, dtype=float)
        self.d, self.offset = len(self.coef), float(offset)

    def __call__(self, pts):
        return np.atleast_2d(pts) @ self.coef + self.offset

    def laplacian(self, x):
        return 0.0


class SquaredNormField(Field):
    """``|y - c|^2``."""

    def __init__(self, d, center=None):
        self.d = d
        self.center = np.zeros(d) if center is None else np.asarray(center, dtype=float)

    def __call__(self, pts):
        diff = np.atleast_2d(pts) - self.center
        return np.einsum("ij,ij->i", diff, diff)

    def laplacian(self, x):
        return 2.0 * self.d


class HalfSpacePower(Field):
    """``w_p(y) = ((n . y - b)^+)^p`` for a unit normal ``n`` (default ``e_1``)."""

    def __init__(self, d, p, normal=None, offset=0.0):
        self.d, self.p = d, float(p)
        n = np.eye(d)[0] if normal is None else np.asarray(normal, dtype=float)
        self.normal = n / np.linalg.norm(n)
        self.offset = float(offset)

    def height(self, pts):
        return np.atleast_2d(pts) @ self.normal - self.offset

    def __call__(self, pts):
        s = self.height(pts)
        return np.where(s > 0, np.abs(s) ** self.p, 0.0)

    def laplacian(self, x):
        s = float(self.height(x)[0])
        return self.p * (self.p - 1) * s ** (self.p - 2) if s > 0 else 0.0

    def breaks(self, x, omega, rmax):
        s = float(self.height(x)[0])
        c = float(np.asarray(omega) @ self.normal)
        if c == 0:
            return []
        r = -s / c
        return [r] if 0 < r < rmax else []

    def smooth_radius(self, x):
        return abs(float(self.height(x)[0]))


class ChartPower(Field):
    """``(rho^+)^p`` in a boundary chart, cut off outside ``B(Q, cutoff)``.

    With ``cutoff = 4 r0`` and the chart of a C^{1,1} domain this is the
    function ``h_p`` of the curved-boundary estimates.
    """

    def __init__(self, chart: BoundaryChart, p, cutoff=None):
        self.chart, self.p = chart, float(p)
        self.d = chart.d
        self.cutoff = cutoff

    def _rho(self, pts):
        loc = np.atleast_2d(self.chart.to_local(np.atleast_2d(pts)))
        return self.chart.rho_local(loc), loc

    def __call__(self, pts):
        rh, loc = self._rho(pts)
        val = np.where(rh > 0, np.abs(rh) ** self.p, 0.0)
        if self.cutoff is not None:
            val = np.where(np.linalg.norm(loc, axis=1) < self.cutoff, val, 0.0)
        return val

    def laplacian(self, x):
        rh, loc = self._rho(x)
        rh = float(rh[0])
        if rh <= 0:
            return 0.0
        rt = float(np.linalg.norm(loc[0, :-1]))
        g = self.chart.graph
        grad2 = float(g.dphi_r(rt)) ** 2
        lap_phi = float(g.lap_phi(rt, self.d - 1))
        p = self.p
        return p * (p - 1) * (1 + grad2) * rh ** (p - 2) - p * rh ** (p - 1) * lap_phi

    def breaks(self, x, omega, rmax):
        out = list(self.chart.ray_crossings(x, omega, rmax))
        if self.cutoff is not None:
            out += _sphere_ray_roots(np.asarray(x, dtype=float) - self.chart.Q, np.asarray(omega, dtype=float),
                                     self.cutoff, rmax)
        return sorted(out)

    def kinks(self, x, omega, rmax):
        return list(self.chart.ray_crossings(x, omega, rmax))

    def smooth_radius(self, x):
        rh, loc = self._rho(x)
        gb = self.chart.graph.gradient_bound(self.chart.window)
        r = abs(float(rh[0])) / math.sqrt(1 + gb * gb)
        if self.cutoff is not None:
            r = min(r, abs(self.cutoff - float(np.linalg.norm(loc[0]))))
        return r


def _sphere_ray_roots(y0, w, radius, rmax):
    b = float(y0 @ w)
    c = float(y0 @ y0) - radius * radius
    disc = b * b - c
    if disc < 0:
        return []
    sq = math.sqrt(disc)
    return [r for r in (-b - sq, -b + sq) if 0 < r < rmax]


def smoothstep5(t):
    t = np.clip(t, 0.0, 1.0)
    return t ** 3 * (10 - 15 * t + 6 * t * t)


def smoothstep5_d1(t):
    inside = (t > 0) & (t < 1)
    return np.where(inside, 30 * t * t * (1 - t) ** 2, 0.0)


def smoothstep5_d2(t):
    inside = (t > 0) & (t < 1)
    return np.where(inside, 60 * t * (1 - t) * (1 - 2 * t), 0.0)


class SmoothBump(Field):
    """Blend of ``level_in * |y~|^2 / r0^2`` (for ``|y| < r0/4``) into the
    constant ``plateau`` (for ``|y| > r0/2``), in chart coordinates.

    The blend weight is the quintic smoothstep in ``|y|``, so the field is
    C^2 with closed-form first and second derivatives.
    """

    def __init__(self, chart: BoundaryChart, r0, level_in, plateau):
        self.chart, self.r0 = chart, float(r0)
        self.d = chart.d
        self.level_in, self.plateau = float(level_in), float(plateau)

    def _parts(self, loc):
        rad = np.linalg.norm(loc, axis=1)
        yt2 = np.einsum("ij,ij->i", loc[:, :-1], loc[:, :-1])
        q = self.level_in * yt2 / self.r0 ** 2
        t = (rad - 0.25 * self.r0) / (0.25 * self.r0)
        return rad, yt2, q, t

    def __call__(self, pts):
        loc = np.atleast_2d(self.chart.to_local(np.atleast_2d(pts)))
        _, _, q, t = self._parts(loc)
        s = smoothstep5(t)
        return q + s * (self.plateau - q)

    def laplacian(self, x):
        loc = np.atleast_2d(self.chart.to_local(np.atleast_2d(x)))
        rad, yt2, q, t = (float(v[0]) for v in self._parts(loc))
        m = self.d - 1
        lap_q = 2.0 * self.level_in * m / self.r0 ** 2
        s = float(smoothstep5(t))
        h = 0.25 * self.r0
        s1 = float(smoothstep5_d1(t)) / h
        s2 = float(smoothstep5_d2(t)) / h ** 2
        lap_s = s2 + (self.d - 1) * s1 / rad if rad > 0 else 0.0
        grad_s_dot_grad_q = s1 / rad * 2.0 * self.level_in * yt2 / self.r0 ** 2 if rad > 0 else 0.0
        return (1 - s) * lap_q + (self.plateau - q) * lap_s - 2.0 * grad_s_dot_grad_q

    def breaks(self, x, omega, rmax):
        y0 = np.asarray(x, dtype=float) - self.chart.Q
        w = np.asarray(omega, dtype=float)
        return sorted(_sphere_ray_roots(y0, w, 0.25 * self.r0, rmax) + _sphere_ray_roots(y0, w, 0.5 * self.r0, rmax))

    def kinks(self, x, omega, rmax):
        # C^2 joins need panel nodes only
        return []

    def smooth_radius(self, x):
        rad = float(np.linalg.norm(np.asarray(x, dtype=float) - self.chart.Q))
        return min(abs(rad - 0.25 * self.r0), abs(rad - 0.5 * self.r0))


class SumField(Field):
    def __init__(self, terms):
        self.terms = [(float(c), f) for c, f in terms]
        self.d = self.terms[0][1].d

    def __call__(self, pts):
        return sum(c * f(pts) for c, f in self.terms)

    def laplacian(self, x):
        return sum(c * f.laplacian(x) for c, f in self.terms)

    def breaks(self, x, omega, rmax):
        out = set()
        for _, f in self.terms:
            out.update(f.breaks(x, omega, rmax))
        return sorted(out)

    def kinks(self, x, omega, rmax):
        out = set()
        for _, f in self.terms:
            out.update(f.kinks(x, omega, rmax))
        return sorted(out)

    def smooth_radius(self, x):
        return min(f.smooth_radius(x) for _, f in self.terms)
