"""Regions and exit targets as intersections of simple constraints.

These are the objects the path engine understands.  Builders translate the
geometry module's domains, balls and chart boxes into constraints.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import integrate, special

from . import engine
from .errors import GeometryError, ParameterError
from .geometry import (GRAPH_CAP_ABOVE, GRAPH_CAP_BELOW, GRAPH_CONE, GRAPH_FLAT, GRAPH_PARAB,
                       BoundaryChart, BoxRegion, DomainShape, _rotation_with_last)
from .kernels import Params, normalization_constant

__all__ = [
    "Constraint",
    "Region",
    "UnionTarget",
    "half_space",
    "ball",
    "ball_complement",
    "domain_region",
    "chart_box",
    "chart_cylinder_band",
    "annulus",
    "KernelMassTable",
    "annulus_kernel_table",
]


@dataclass(frozen=True)
class Constraint:
    kind: int
    origin: Tuple[float, ...]
    rotation: Tuple[Tuple[float, ...], ...]
    par: Tuple[float, float] = (0.0, 0.0)


class Region:
    """Open set ``{x : every constraint margin > 0}``.

    ``scale`` is the length used to set relative discretization knobs
    (small-jump cut-off, censoring distance).
    """

    def __init__(self, constraints: Sequence[Constraint], scale: float = 1.0):
        if not constraints:
            raise ParameterError("a region needs at least one constraint")
        self.constraints = tuple(constraints)
        self.d = len(self.constraints[0].origin)
        self.scale = float(scale)
        self.kind = np.array([c.kind for c in self.constraints], dtype=np.int64)
        self.org = np.array([c.origin for c in self.constraints], dtype=float).reshape(-1, self.d)
        self.rot = np.array([c.rotation for c in self.constraints], dtype=float).reshape(-1, self.d, self.d)
        self.par = np.array([c.par for c in self.constraints], dtype=float).reshape(-1, 2)

    def __and__(self, other: "Region") -> "Region":
        return Region(self.constraints + other.constraints, min(self.scale, other.scale))

    def with_scale(self, scale: float) -> "Region":
        return Region(self.constraints, scale)

    def margin(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return engine.margins_of_points(np.ascontiguousarray(pts), self.kind, self.org, self.rot, self.par)

    def contains(self, pts):
        return self.margin(pts) > 0

    def arrays(self):
        return self.kind, self.org, self.rot, self.par

    def moved(self, rotation, shift=None) -> "Region":
        """Image under ``x -> rotation @ x + shift``."""
        rot = np.asarray(rotation, dtype=float)
        shift = np.zeros(self.d) if shift is None else np.asarray(shift, dtype=float)
        out = []
        for c in self.constraints:
            o = rot @ np.asarray(c.origin) + shift
            r = rot @ np.asarray(c.rotation)
            out.append(Constraint(c.kind, tuple(o), tuple(map(tuple, r)), c.par))
        return Region(out, self.scale)


class UnionTarget:
    """Union of regions, used as an exit target."""

    def __init__(self, parts: Sequence[Region]):
        self.parts = tuple(parts)

    def contains(self, pts):
        out = np.zeros(len(np.atleast_2d(pts)), dtype=bool)
        for p in self.parts:
            out |= p.contains(pts)
        return out

    def moved(self, rotation, shift=None):
        return UnionTarget([p.moved(rotation, shift) for p in self.parts])


def _frame(origin, rotation):
    return tuple(np.asarray(origin, dtype=float)), tuple(map(tuple, np.asarray(rotation, dtype=float)))


def half_space(normal, offset=0.0, scale=math.inf) -> Region:
    """``{x : x . n > offset}``."""
    n = np.asarray(normal, dtype=float)
    n = n / np.linalg.norm(n)
    o, r = _frame(offset * n, _rotation_with_last(n) if len(n) > 1 else np.ones((1, 1)) * np.sign(n[0]))
    return Region([Constraint(engine.HALF, o, r)], scale)


def ball(center, radius) -> Region:
    c = np.asarray(center, dtype=float)
    o, r = _frame(c, np.eye(len(c)))
    return Region([Constraint(engine.BALL_IN, o, r, (float(radius), 0.0))], float(radius))


def ball_complement(center, radius, scale=None) -> Region:
    c = np.asarray(center, dtype=float)
    o, r = _frame(c, np.eye(len(c)))
    return Region([Constraint(engine.BALL_OUT, o, r, (float(radius), 0.0))],
                  float(radius) if scale is None else scale)


def annulus(center, r_in, r_out) -> Region:
    """``{r_in < |x - center| < r_out}``; ``r_out = inf`` gives a ball complement."""
    out = ball_complement(center, r_in)
    if math.isfinite(r_out):
        out = out & ball(center, r_out)
    return out


def _graph_constraint(chart: BoundaryChart) -> Constraint:
    g = chart.graph
    o, r = _frame(chart.Q, chart.rotation)
    if g.code == GRAPH_FLAT:
        return Constraint(engine.HALF, o, r)
    if g.code == GRAPH_PARAB:
        return Constraint(engine.PARAB, o, r, (float(g.c), 0.0))
    if g.code == GRAPH_CONE:
        return Constraint(engine.CONE, o, r, (float(g.c), 0.0))
    center = chart.to_world(np.r_[np.zeros(chart.d - 1), g.c if g.code == GRAPH_CAP_BELOW else -g.c])
    oc, rc = _frame(center, np.eye(chart.d))
    kind = engine.BALL_IN if g.code == GRAPH_CAP_BELOW else engine.BALL_OUT
    return Constraint(kind, oc, rc, (float(g.c), 0.0))


def domain_region(domain: DomainShape, scale: Optional[float] = None) -> Region:
    """The domain itself as a region."""
    chart = domain.chart()
    sc = scale if scale is not None else (domain.radius if domain.kind in ("ball", "ball-complement") else domain.R)
    return Region([_graph_constraint(chart)], sc)


def chart_box(box: BoxRegion) -> Region:
    """``D_Q(r1, r2)`` for flat or parabolic charts."""
    chart = box.chart
    g = chart.graph
    if g.code not in (GRAPH_FLAT, GRAPH_PARAB):
        raise GeometryError("chart boxes are supported for flat and parabolic charts")
    kap = float(g.c) if g.code == GRAPH_PARAB else 0.0
    o, r = _frame(chart.Q, chart.rotation)
    cons = [_graph_constraint(chart), Constraint(engine.SLAB_TOP, o, r, (float(box.r1), kap))]
    if chart.d > 1:
        cons.append(Constraint(engine.CYL, o, r, (float(box.r2), 0.0)))
    return Region(cons, min(box.r1, box.r2) if chart.d > 1 else box.r1)


def chart_cylinder_band(chart: BoundaryChart, lo: float, hi: float, r2: float) -> Region:
    """``{lo < rho < hi, |y~| < r2}`` in a flat or parabolic chart."""
    g = chart.graph
    kap = float(g.c) if g.code == GRAPH_PARAB else 0.0
    o, r = _frame(chart.Q, chart.rotation)
    shift = np.asarray(chart.Q) + lo * np.asarray(chart.rotation)[:, -1]
    os_, _ = _frame(shift, chart.rotation)
    bottom = Constraint(engine.PARAB if kap > 0 else engine.HALF, os_, r, (kap, 0.0))
    cons = [bottom, Constraint(engine.SLAB_TOP, o, r, (float(hi), kap))]
    if chart.d > 1:
        cons.append(Constraint(engine.CYL, o, r, (float(r2), 0.0)))
    return Region(cons, hi - lo)


# ---------------------------------------------------------------------------
# kernel mass of annular targets
# ---------------------------------------------------------------------------

@dataclass
class KernelMassTable:
    """``g(|x - center|) = int_target J(x, y) dy`` on a uniform radial grid."""

    center: np.ndarray
    step: float
    values: np.ndarray

    def __call__(self, pts):
        pts = np.atleast_2d(pts)
        u = np.linalg.norm(pts - self.center, axis=1) / self.step
        return np.interp(u, np.arange(len(self.values)), self.values)


def _shell_angular(rho, s, d, alpha):
    """Integral of ``|x - s theta|^(-d-alpha)`` over unit directions, ``|x| = rho``."""
    q = 0.5 * (d + alpha)
    A = rho * rho + s * s
    B = 2.0 * rho * s
    if d == 1:
        return abs(s - rho) ** (-1 - alpha) + (s + rho) ** (-1 - alpha)
    if B == 0.0:
        return (2.0 * math.pi if d == 2 else 4.0 * math.pi) * A ** (-q)
    if d == 2:
        return 2.0 * math.pi * (A + B) ** (-q) * special.hyp2f1(q, 0.5, 1.0, 2.0 * B / (A + B))
    if d == 3:
        return 2.0 * math.pi * ((A - B) ** (1 - q) - (A + B) ** (1 - q)) / (B * (q - 1))
    raise ParameterError("kernel mass tables support d <= 3")


def annulus_kernel_mass(params: Params, rho: float, r_in: float, r_out: float) -> float:
    """``int_{r_in < |y| < r_out} a^alpha A |x - y|^(-d-alpha) dy`` at ``|x| = rho < r_in``."""
    d, alpha = params.d, params.alpha
    if params.lam is not None:
        raise ParameterError("kernel mass tables are for the untruncated kernel")
    if rho >= r_in:
        raise ParameterError("table radius must stay inside the inner sphere")
    f = lambda s: s ** (d - 1) * _shell_angular(rho, s, d, alpha)
    val, _ = integrate.quad(f, r_in, r_out, epsabs=0.0, epsrel=1e-11, limit=200)
    return params.jump_weight * normalization_constant(d, alpha) * val


def annulus_kernel_table(params: Params, center, r_in: float, r_out: float, rmax: float,
                         n: int = 401) -> KernelMassTable:
    """Tabulate the target kernel mass for ``|x - center|`` in ``[0, rmax]``."""
    if rmax >= r_in:
        raise ParameterError("rmax must be smaller than the target's inner radius")
    grid = np.linspace(0.0, rmax, n)
    vals = np.array([annulus_kernel_mass(params, float(r), r_in, r_out) for r in grid])
    return KernelMassTable(np.asarray(center, dtype=float), grid[1] - grid[0], vals)
