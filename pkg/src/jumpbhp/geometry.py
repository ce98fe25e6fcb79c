"""Domain descriptors, boundary charts, distance functions and chart boxes.

Every domain lives in its own *frame*: a rigid motion ``world = origin +
rotation @ local``.  In local coordinates the reference boundary point sits at
the origin and the domain lies above a graph ``y_d > phi(y~)``:

    half-space       phi = 0
    ball             the lower cap of a ball of given radius resting on 0
    ball-complement  the upper cap, domain outside the ball
    c11-bump         phi = bump * |y~|^2
    lipschitz-cone   phi = cone_slope * |y~|   (Lipschitz only)
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import GeometryError, ParameterError

KINDS = ("half-space", "ball", "ball-complement", "c11-bump", "lipschitz-cone")
C11_KINDS = ("half-space", "ball", "ball-complement", "c11-bump")

# graph codes shared with the simulation engine
GRAPH_FLAT, GRAPH_PARAB, GRAPH_CONE, GRAPH_CAP_BELOW, GRAPH_CAP_ABOVE = 0, 1, 2, 3, 4


def _as_points(x, d):
    pts = np.asarray(x, dtype=float)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    if pts.shape[1] != d:
        raise ParameterError(f"expected points in R^{d}, got shape {pts.shape}")
    return pts, single


@dataclass(frozen=True)
class Graph:
    """Graph function ``phi`` of a chart, radially symmetric in ``y~``.

    ``code`` selects the family and ``c`` its single shape parameter
    (bump coefficient, cone slope, or cap radius).
    """

    code: int
    c: float = 0.0

    def phi_r(self, r):
        r = np.asarray(r, dtype=float)
        if self.code == GRAPH_FLAT:
            return np.zeros_like(r)
        if self.code == GRAPH_PARAB:
            return self.c * r * r
        if self.code == GRAPH_CONE:
            return self.c * r
        cap = self.c - np.sqrt(np.maximum(self.c * self.c - r * r, 0.0))
        return cap if self.code == GRAPH_CAP_BELOW else -cap

    def dphi_r(self, r):
        """Radial derivative ``phi'(r)``; ``|grad phi| = |phi'(|y~|)|``."""
        r = np.asarray(r, dtype=float)
        if self.code == GRAPH_FLAT:
            return np.zeros_like(r)
        if self.code == GRAPH_PARAB:
            return 2.0 * self.c * r
        if self.code == GRAPH_CONE:
            return np.full_like(r, self.c)
        g = r / np.sqrt(np.maximum(self.c * self.c - r * r, 1e-300))
        return g if self.code == GRAPH_CAP_BELOW else -g

    def lap_phi(self, rt, m):
        """Laplacian of ``phi`` in ``R^m`` (m = d - 1) at ``|y~| = rt``, a.e."""
        rt = np.asarray(rt, dtype=float)
        if self.code == GRAPH_FLAT or m == 0:
            return np.zeros_like(rt)
        if self.code == GRAPH_PARAB:
            return np.full_like(rt, 2.0 * self.c * m)
        if self.code == GRAPH_CONE:
            with np.errstate(divide="ignore"):
                return np.where(rt > 0, self.c * (m - 1) / np.maximum(rt, 1e-300), np.inf)
        s = np.sqrt(np.maximum(self.c * self.c - rt * rt, 1e-300))
        # phi = c - s: phi'' = c^2/s^3, phi'/r = 1/s
        val = self.c * self.c / s ** 3 + (m - 1) / s
        return val if self.code == GRAPH_CAP_BELOW else -val

    def phi(self, yt):
        yt = np.atleast_2d(yt)
        return self.phi_r(np.linalg.norm(yt, axis=1))

    def grad_phi(self, yt):
        yt = np.atleast_2d(np.asarray(yt, dtype=float))
        r = np.linalg.norm(yt, axis=1)
        g = self.dphi_r(r)
        with np.errstate(invalid="ignore", divide="ignore"):
            unit = np.where(r[:, None] > 0, yt / np.maximum(r, 1e-300)[:, None], 0.0)
        return g[:, None] * unit

    def lipschitz_of_gradient(self, window):
        """Lipschitz constant of ``grad phi`` on ``|y~| < window`` (inf if none)."""
        if self.code == GRAPH_FLAT:
            return 0.0
        if self.code == GRAPH_PARAB:
            return 2.0 * self.c
        if self.code == GRAPH_CONE:
            return math.inf
        if window >= self.c:
            return math.inf
        return self.c * self.c / (self.c * self.c - window * window) ** 1.5

    def gradient_bound(self, window):
        if self.code == GRAPH_FLAT:
            return 0.0
        if self.code == GRAPH_CONE:
            return self.c
        return float(abs(self.dphi_r(min(window, 0.999999 * self.c) if self.code in (GRAPH_CAP_BELOW, GRAPH_CAP_ABOVE) else window)))


@dataclass(frozen=True)
class BoundaryChart:
    """Local coordinate system ``CS_Q`` at a boundary point ``Q``.

    ``rotation`` has the chart axes as columns (last column = inward normal at
    Q); ``window`` is the radius of the ball ``B(Q, window)`` inside which the
    graph description of the domain is valid.
    """

    Q: np.ndarray
    rotation: np.ndarray
    graph: Graph
    window: float
    Lam: float = 1.0

    @property
    def d(self):
        return len(self.Q)

    def to_local(self, x):
        pts, single = _as_points(x, self.d)
        loc = (pts - self.Q) @ self.rotation
        return loc[0] if single else loc

    def to_world(self, y):
        pts, single = _as_points(y, self.d)
        w = self.Q + pts @ self.rotation.T
        return w[0] if single else w

    def rho_local(self, loc):
        loc = np.atleast_2d(loc)
        return loc[:, -1] - self.graph.phi_r(np.linalg.norm(loc[:, :-1], axis=1))

    def ray_crossings(self, x, omega, rmax):
        """Radii ``r`` in ``(0, rmax)`` where ``x + r*omega`` crosses the graph."""
        y0 = self.to_local(np.asarray(x, dtype=float))
        w = np.asarray(omega, dtype=float) @ self.rotation
        return _graph_ray_roots(self.graph, y0, w, rmax)


def _graph_ray_roots(graph, y0, w, rmax):
    yt0, h0 = y0[:-1], y0[-1]
    wt, wh = w[:-1], w[-1]
    if graph.code == GRAPH_FLAT:
        roots = [-h0 / wh] if wh != 0 else []
    elif graph.code == GRAPH_PARAB:
        # h0 + r wh = c |yt0 + r wt|^2
        qa = graph.c * (wt @ wt)
        qb = 2.0 * graph.c * (yt0 @ wt) - wh
        qc = graph.c * (yt0 @ yt0) - h0
        roots = _quadratic_roots(qa, qb, qc)
    else:
        # sampled bracketing for the remaining graph families
        rs = np.linspace(0.0, rmax, 2049)
        pts = y0 + rs[:, None] * w
        g = pts[:, -1] - graph.phi_r(np.linalg.norm(pts[:, :-1], axis=1))
        roots = []
        idx = np.nonzero(np.sign(g[:-1]) * np.sign(g[1:]) < 0)[0]
        for i in idx:
            lo, hi = rs[i], rs[i + 1]
            glo = g[i]
            for _ in range(80):
                mid = 0.5 * (lo + hi)
                p = y0 + mid * w
                gm = p[-1] - graph.phi_r(np.linalg.norm(p[:-1]))
                if np.sign(gm) == np.sign(glo):
                    lo, glo = mid, gm
                else:
                    hi = mid
            roots.append(0.5 * (lo + hi))
    return sorted(r for r in roots if 0.0 < r < rmax)


def _quadratic_roots(a, b, c):
    if abs(a) < 1e-300:
        return [-c / b] if b != 0 else []
    disc = b * b - 4 * a * c
    if disc < 0:
        return []
    sq = math.sqrt(disc)
    q = -0.5 * (b + math.copysign(sq, b))
    roots = [q / a]
    if q != 0:
        roots.append(c / q)
    return roots


def _rotation_with_last(n):
    """Orthonormal frame (columns) whose last axis is the unit vector ``n``."""
    n = np.asarray(n, dtype=float)
    n = n / np.linalg.norm(n)
    d = len(n)
    basis = np.eye(d)
    k = int(np.argmin(np.abs(n)))
    cols = [n]
    for j in [k] + [i for i in range(d) if i != k]:
        v = basis[j] - sum((basis[j] @ c) * c for c in cols)
        if np.linalg.norm(v) > 1e-8:
            cols.append(v / np.linalg.norm(v))
        if len(cols) == d:
            break
    frame = np.column_stack(cols[1:] + [cols[0]])
    if np.linalg.det(frame) < 0 and d > 1:
        frame[:, 0] *= -1
    return frame


@dataclass(frozen=True)
class DomainShape:
    """One member of the domain zoo, placed in the world by a rigid frame.

    ``R`` and ``Lam`` are the C^{1,1} characteristics (normalized so that
    ``R <= 1`` and ``Lam >= 1``); ``R1``/``Lam1`` the Lipschitz ones.
    """

    kind: str
    d: int = 2
    R: float = 1.0
    Lam: float = 1.0
    radius: float = 1.0
    bump: float = 0.1
    cone_slope: float = 0.5
    R1: float = 1.0
    Lam1: Optional[float] = None
    origin: Optional[tuple] = None
    rotation: Optional[tuple] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ParameterError(f"unknown domain kind {self.kind!r}; expected one of {KINDS}")
        if self.d < 1:
            raise ParameterError("dimension must be >= 1")
        if self.kind in C11_KINDS:
            if not 0 < self.R <= 1:
                raise ParameterError(f"localization radius R={self.R} must lie in (0, 1]")
            if self.Lam < 1:
                raise ParameterError(f"Lambda={self.Lam} must be >= 1")
        if self.kind in ("ball", "ball-complement") and self.radius <= 0:
            raise ParameterError("ball radius must be positive")
        if self.kind == "c11-bump" and self.bump < 0:
            raise ParameterError("bump coefficient must be nonnegative")
        if self.kind == "lipschitz-cone" and self.cone_slope <= 0:
            raise ParameterError("cone slope must be positive")
        if self.kind in ("c11-bump", "lipschitz-cone", "ball", "ball-complement") and self.d < 2:
            raise ParameterError(f"{self.kind} needs d >= 2")

    @classmethod
    def make_ball(cls, center, radius=1.0, **kw):
        """Ball ``B(center, radius)`` with its reference point at the bottom."""
        center = np.asarray(center, dtype=float)
        origin = center.copy()
        origin[-1] -= radius
        return cls("ball", d=len(center), radius=radius, origin=tuple(origin), **kw)

    @classmethod
    def make_ball_complement(cls, center, radius=1.0, **kw):
        center = np.asarray(center, dtype=float)
        origin = center.copy()
        origin[-1] += radius
        return cls("ball-complement", d=len(center), radius=radius, origin=tuple(origin), **kw)

    # frame -------------------------------------------------------------
    @property
    def frame_origin(self) -> np.ndarray:
        return np.zeros(self.d) if self.origin is None else np.asarray(self.origin, dtype=float)

    @property
    def frame_rotation(self) -> np.ndarray:
        return np.eye(self.d) if self.rotation is None else np.asarray(self.rotation, dtype=float)

    def rigidly_moved(self, rotation, shift=None) -> "DomainShape":
        """The same domain after ``x -> rotation @ x + shift``."""
        rot = np.asarray(rotation, dtype=float)
        shift = np.zeros(self.d) if shift is None else np.asarray(shift, dtype=float)
        new_rot = rot @ self.frame_rotation
        new_org = rot @ self.frame_origin + shift
        return _replace(self, origin=tuple(new_org), rotation=tuple(map(tuple, new_rot)))

    def to_local(self, x):
        pts, single = _as_points(x, self.d)
        loc = (pts - self.frame_origin) @ self.frame_rotation
        return loc[0] if single else loc

    def to_world(self, y):
        pts, single = _as_points(y, self.d)
        w = self.frame_origin + pts @ self.frame_rotation.T
        return w[0] if single else w

    # characteristics ---------------------------------------------------
    @property
    def r0(self) -> float:
        return self.R / (4.0 * math.sqrt(1.0 + self.Lam ** 2))

    @property
    def graph(self) -> Graph:
        if self.kind == "half-space":
            return Graph(GRAPH_FLAT)
        if self.kind == "c11-bump":
            return Graph(GRAPH_PARAB, self.bump)
        if self.kind == "lipschitz-cone":
            return Graph(GRAPH_CONE, self.cone_slope)
        if self.kind == "ball":
            return Graph(GRAPH_CAP_BELOW, self.radius)
        return Graph(GRAPH_CAP_ABOVE, self.radius)

    @property
    def lipschitz_constant(self) -> float:
        if self.kind == "lipschitz-cone":
            return self.cone_slope if self.Lam1 is None else self.Lam1
        return self.Lam if self.Lam1 is None else self.Lam1

    def chart(self, Q=None) -> BoundaryChart:
        """Chart at the reference point, or at a boundary point ``Q`` of a ball."""
        if Q is None:
            return BoundaryChart(self.frame_origin, self.frame_rotation, self.graph,
                                 self.R if self.kind in C11_KINDS else self.R1, self.Lam)
        Q = np.asarray(Q, dtype=float)
        if self.kind not in ("ball", "ball-complement", "half-space"):
            raise GeometryError("charts at arbitrary boundary points are only available for balls and the half-space")
        if abs(self.dist_to_boundary(Q)) > 1e-9:
            raise GeometryError(f"{Q} is not a boundary point")
        if self.kind == "half-space":
            return BoundaryChart(Q, self.frame_rotation, self.graph, self.R, self.Lam)
        center = self.to_world(np.r_[np.zeros(self.d - 1), self.radius]) if self.kind == "ball" else \
            self.to_world(np.r_[np.zeros(self.d - 1), -self.radius])
        n = center - Q if self.kind == "ball" else Q - center
        return BoundaryChart(Q, _rotation_with_last(n), self.graph, self.R, self.Lam)

    # membership and distances -----------------------------------------
    def contains(self, x):
        loc = np.atleast_2d(self.to_local(x))
        res = self._local_signed(loc) > 0
        return res[0] if np.ndim(x) == 1 else res

    def dist_to_boundary(self, x):
        """Signed Euclidean distance to the boundary, positive inside."""
        loc = np.atleast_2d(self.to_local(x))
        res = self._local_signed(loc)
        return res[0] if np.ndim(x) == 1 else res

    def _local_signed(self, loc):
        yt, h = loc[:, :-1], loc[:, -1]
        r = np.linalg.norm(yt, axis=1)
        if self.kind == "half-space":
            return h
        if self.kind in ("ball", "ball-complement"):
            dist = np.sqrt(r * r + (h - self.radius if self.kind == "ball" else h + self.radius) ** 2)
            return self.radius - dist if self.kind == "ball" else dist - self.radius
        if self.kind == "c11-bump":
            return parabola_signed_distance(r, h, self.bump)
        s = self.cone_slope
        inside = h > s * r
        along = (r + s * h) / math.sqrt(1 + s * s)
        perp = (h - s * r) / math.sqrt(1 + s * s)
        out_dist = np.where(along >= 0, np.abs(perp), np.sqrt(r * r + h * h))
        # inside the (convex) cone the nearest boundary point is on the generating line
        return np.where(inside, perp, -out_dist)


def parabola_signed_distance(r, h, kappa):
    """Signed distance from ``(r, h)`` (r = |y~| >= 0) to ``h = kappa r^2``.

    The foot point ``t`` solves ``2 kappa^2 t^3 + (1 - 2 kappa h) t - r = 0``;
    Newton from a safe bracket with bisection fallback.
    """
    r = np.atleast_1d(np.asarray(r, dtype=float))
    h = np.atleast_1d(np.asarray(h, dtype=float))
    sign = np.where(h > kappa * r * r, 1.0, -1.0)
    if kappa == 0:
        return h.copy()
    out = np.empty_like(r)
    for i in range(r.size):
        out[i] = sign[i] * _parab_dist(r[i], h[i], kappa)
    return out


def _parab_dist(r, h, kappa):
    b = 1.0 - 2.0 * kappa * h
    if r < 1e-14:
        if b < 0:
            t = math.sqrt(-b / (2 * kappa * kappa))
            return math.hypot(t, kappa * t * t - h)
        return abs(h)
    lo, hi = 0.0, r + math.sqrt(max(h, 0.0) / kappa) + 1.0
    g = lambda t: 2 * kappa * kappa * t ** 3 + b * t - r
    t = min(r, hi)
    for _ in range(100):
        gt = g(t)
        if gt > 0:
            hi = t
        else:
            lo = t
        dg = 6 * kappa * kappa * t * t + b
        t_new = t - gt / dg if dg > 0 else 0.5 * (lo + hi)
        if not lo <= t_new <= hi:
            t_new = 0.5 * (lo + hi)
        if abs(t_new - t) <= 1e-15 * max(1.0, t):
            t = t_new
            break
        t = t_new
    return math.hypot(t - r, kappa * t * t - h)


def dist_to_complement(domain: DomainShape, x):
    """Euclidean distance from ``x`` to the complement of the domain (0 outside)."""
    return np.maximum(domain.dist_to_boundary(x), 0.0)


def rho(chart: BoundaryChart, x):
    """Vertical distance ``x_d - phi(x~)`` in the chart; negative below the graph."""
    loc, single = _as_points(chart.to_local(x), chart.d)
    if np.any(np.linalg.norm(loc, axis=1) >= chart.window * (1 + 1e-12)):
        raise GeometryError(f"point outside the chart window B(Q, {chart.window})")
    out = chart.rho_local(loc)
    return out[0] if single else out


@dataclass(frozen=True)
class BoxRegion:
    """``D_Q(r1, r2) = {y in D : 0 < rho_Q(y) < r1, |y~| < r2}``."""

    chart: BoundaryChart
    r1: float
    r2: float

    def __post_init__(self):
        if self.r1 <= 0 or self.r2 <= 0:
            raise ParameterError("box sides must be positive")

    def face(self, x):
        """Integer face code: 0 inside, 1 bottom (rho <= 0), 2 top, 3 side."""
        loc = np.atleast_2d(self.chart.to_local(x))
        rh = self.chart.rho_local(loc)
        rt = np.linalg.norm(loc[:, :-1], axis=1)
        code = np.zeros(len(loc), dtype=np.int8)
        code[rt >= self.r2] = 3
        code[rh >= self.r1] = 2
        code[rh <= 0] = 1
        return code[0] if np.ndim(x) == 1 else code

    def contains(self, x):
        return self.face(x) == 0

    def band(self, lo, hi, x):
        """Membership of ``{lo < rho < hi, |y~| < r2}`` (target annuli of box estimates)."""
        loc = np.atleast_2d(self.chart.to_local(x))
        rh = self.chart.rho_local(loc)
        rt = np.linalg.norm(loc[:, :-1], axis=1)
        return (rh > lo) & (rh < hi) & (rt < self.r2)


FACE_NAMES = {0: "inside", 1: "bottom", 2: "top", 3: "side"}


def box_region(chart: BoundaryChart, r1: float, r2: float) -> BoxRegion:
    return BoxRegion(chart, r1, r2)


@dataclass
class CharacteristicsReport:
    passed: bool
    checks: dict = field(default_factory=dict)


def verify_characteristics(domain: DomainShape, sample_count: int = 200, seed: int = 0) -> CharacteristicsReport:
    """Sample boundary points and check the C^{1,1} chart conditions.

    Checks ``phi(0) = grad phi(0) = 0``, ``|grad phi| <= Lam`` and the Lipschitz
    bound on ``grad phi`` over the chart window, the interior ball of radius
    ``R`` at each sampled boundary point, and the sandwich between ``rho`` and
    the distance to the complement.
    """
    rng = np.random.default_rng(seed)
    chart = domain.chart()
    g = chart.graph
    m = domain.d - 1
    checks = {}
    radii = rng.uniform(0, chart.window, sample_count)
    dirs = rng.standard_normal((sample_count, m))
    dirs /= np.linalg.norm(dirs, axis=1)[:, None]
    yt = radii[:, None] * dirs

    checks["phi_zero_at_origin"] = bool(abs(g.phi_r(0.0)) < 1e-14)
    if domain.kind == "lipschitz-cone":
        checks["gradient_vanishes_at_origin"] = False
        checks["gradient_lipschitz"] = False
        checks["lipschitz_graph"] = bool(g.c <= domain.lipschitz_constant + 1e-12)
        return CharacteristicsReport(passed=False, checks=checks)
    checks["gradient_vanishes_at_origin"] = bool(np.allclose(g.grad_phi(np.zeros((1, m))), 0.0))
    grads = g.grad_phi(yt)
    checks["gradient_bounded"] = bool(np.all(np.linalg.norm(grads, axis=1) <= domain.Lam + 1e-12))
    lip = g.lipschitz_of_gradient(chart.window)
    # empirical check on random pairs as well as the analytic constant
    j = rng.permutation(sample_count)
    num = np.linalg.norm(grads - grads[j], axis=1)
    den = np.linalg.norm(yt - yt[j], axis=1)
    emp = float(np.max(num[den > 0] / den[den > 0])) if np.any(den > 0) else 0.0
    checks["gradient_lipschitz"] = bool(lip <= domain.Lam + 1e-12 and emp <= domain.Lam + 1e-9)
    checks["empirical_gradient_lipschitz"] = emp

    # interior ball of radius R tangent at sampled boundary points
    ok = True
    for k in range(min(sample_count, 64)):
        r = np.linalg.norm(yt[k])
        if domain.kind in ("ball", "ball-complement") and r >= domain.radius:
            continue
        q_loc = np.r_[yt[k], g.phi_r(r)]
        grad = grads[k]
        n = np.r_[-grad, 1.0]
        n /= np.linalg.norm(n)
        center = domain.to_world(q_loc + domain.R * n)
        if domain.dist_to_boundary(center) < domain.R * (1 - 1e-9):
            ok = False
            break
    checks["interior_ball"] = ok

    # sandwich (1 + Lam^2)^(-1/2) rho <= delta <= rho on chart points inside D
    pts_loc = np.column_stack([yt * 0.5, g.phi_r(np.linalg.norm(yt * 0.5, axis=1)) + rng.uniform(0, 0.25 * chart.window, sample_count)])
    inside = np.linalg.norm(pts_loc, axis=1) < chart.window
    pts = domain.to_world(pts_loc[inside])
    rh = rho(chart, pts)
    dl = dist_to_complement(domain, pts)
    lam_fac = 1.0 / math.sqrt(1 + domain.Lam ** 2)
    checks["distance_sandwich"] = bool(np.all(dl <= rh + 1e-12) and np.all(lam_fac * rh <= dl + 1e-12))
    passed = all(v for k, v in checks.items() if isinstance(v, bool))
    return CharacteristicsReport(passed=passed, checks=checks)


def _replace(obj, **kw):
    from dataclasses import replace
    return replace(obj, **kw)
