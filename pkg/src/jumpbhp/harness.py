"""Experiments that turn the estimators into machine-checkable reports.

Each experiment estimates a constant (a comparability ratio, a slope, an
escape probability) on a grid of points, repeats it across scales and
weights, and grades finiteness and stability.  Harmonic functions are
always exit-target probabilities computed on shared paths.
"""
from __future__ import annotations

import math
import zlib
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import stats

from .errors import AccuracyError, GeometryError, ParameterError
from .exit_mc import Estimate, estimate_harmonic_fns
from .fields import ChartPower, SmoothBump
from .fraclap import PVQuadSpec, pv_apply
from .geometry import GRAPH_FLAT, GRAPH_PARAB, BoundaryChart, DomainShape, Graph, box_region
from .kernels import Params
from .regions import Region, ball, ball_complement, chart_box, domain_region, half_space
from .samplers import StepPolicy, simulate_batch, truncated_xa_increment, xa_increment

__all__ = [
    "TestFunctionSpec",
    "TestFunctionReport",
    "ConstantReport",
    "ComplementTarget",
    "test_functions",
    "verify_test_functions",
    "find_delta0",
    "verify_test_function_sweep",
    "run_exit_estimate_experiment",
    "run_exit_lambda_sweep",
    "compare_truncated_full",
    "run_harnack_experiment",
    "run_carleson_experiment",
    "run_bhp_experiment",
    "run_scaling_check",
    "run_lower_bound_experiment",
    "fit_through_origin",
    "stream_id",
]


def stream_id(*keys) -> int:
    """Stable stream number for a tuple of labels."""
    return zlib.crc32(repr(keys).encode()) & 0x7FFFFFFF


def _ratio_spread(values) -> float:
    v = np.asarray(values, dtype=float)
    if v.size == 0 or np.any(~np.isfinite(v)) or np.any(v <= 0):
        return math.inf
    return float(v.max() / v.min())


def _py(obj):
    """Plain-python copy of a report payload (for JSON)."""
    if isinstance(obj, dict):
        return {str(k): _py(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_py(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _py(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    return obj


@dataclass
class ConstantReport:
    """Estimated constant of one experiment with its verdicts.

    ``rows`` holds one dict per grid point and run (with standard errors);
    ``worst_pair`` names the grid pair attaining the constant.
    """

    name: str
    empirical_constant: float
    stability_ratio: float
    verdicts: dict
    constants: dict = field(default_factory=dict)
    descriptors: dict = field(default_factory=dict)
    worst_pair: Optional[dict] = None
    rows: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(bool(v) for v in self.verdicts.values())

    def as_dict(self):
        out = asdict(self)
        out["passed"] = self.passed
        return _py(out)


# ---------------------------------------------------------------------------
# test functions
# ---------------------------------------------------------------------------

def default_test_exponent(alpha: float, gap: float = 1e-3) -> float:
    """Midpoint of ``(1, min(2, 3 - alpha))``, moved at least ``gap`` off alpha."""
    hi = min(2.0, 3.0 - alpha)
    p = 0.5 * (1.0 + hi)
    if abs(p - alpha) < gap:
        p = alpha + gap if alpha + gap < hi else alpha - gap
    return p


@dataclass
class TestFunctionSpec:
    """Barrier functions in the chart of a flat or parabolic boundary,
    rescaled by ``lam``.

    ``u1 = h + h_p`` and ``u2 = h + psi - h_p`` with ``h = rho^+``,
    ``h_p = (rho^+)^p`` cut off outside ``B(Q, 4 r0)`` and ``psi`` the
    smooth bump equal to ``level_in |y~|^2 / r0^2`` near ``Q`` and to
    ``plateau`` away from it.
    """

    __test__ = False

    domain: DomainShape
    alpha: float
    p: Optional[float] = None
    lam: float = 1.0
    r0: Optional[float] = None
    delta: Optional[float] = None
    level_in: Optional[float] = None
    plateau: Optional[float] = None

    def __post_init__(self):
        if self.domain.kind not in ("half-space", "c11-bump"):
            raise ParameterError("test functions need a flat or parabolic boundary")
        if not self.lam >= 1:
            raise ParameterError("lam must be >= 1")
        hi = min(2.0, 3.0 - self.alpha)
        if self.p is None:
            self.p = default_test_exponent(self.alpha)
        if not 1.0 < self.p < hi:
            raise ParameterError(f"p={self.p} outside (1, {hi})")
        if abs(self.p - self.alpha) < 1e-3:
            self.p = self.alpha + 1e-3 if self.alpha + 1e-3 < hi else self.alpha - 1e-3
        if self.r0 is None:
            self.r0 = self.domain.r0
        if self.level_in is None:
            self.level_in = 2.0 ** (self.p + 1)
        if self.plateau is None:
            self.plateau = 1.5 * 2.0 ** (self.p + 1)
        if not 2.0 ** (self.p + 1) <= self.plateau <= 2.0 ** (self.p + 2):
            raise ParameterError("plateau must lie in [2^(p+1), 2^(p+2)]")

    def chart(self) -> BoundaryChart:
        """Chart of ``lam D``: the graph coefficient shrinks to ``bump / lam``."""
        base = self.domain.chart()
        g = base.graph
        graph = Graph(GRAPH_PARAB, g.c / self.lam) if g.code == GRAPH_PARAB else Graph(GRAPH_FLAT)
        return BoundaryChart(base.Q, base.rotation, graph, base.window * self.lam, base.Lam)

    def point(self, rho_value: float, offset: float = 0.0) -> np.ndarray:
        """World point at chart height ``rho`` above ``y~ = offset e_1``."""
        ch = self.chart()
        d = ch.d
        yt = np.zeros(d - 1)
        if d > 1:
            yt[0] = offset
        return ch.to_world(np.r_[yt, float(ch.graph.phi_r(abs(offset))) + rho_value])


def test_functions(spec: TestFunctionSpec):
    """``(u1, u2, h, h_p, psi)`` for the spec."""
    ch = spec.chart()
    h = ChartPower(ch, 1.0, cutoff=4.0 * spec.r0)
    hp = ChartPower(ch, spec.p, cutoff=4.0 * spec.r0)
    psi = SmoothBump(ch, spec.r0, spec.level_in, spec.plateau)
    return h + hp, h + psi - hp, h, hp, psi


test_functions.__test__ = False


def _generator(f, x, params: Params, lam: float, spec: Optional[PVQuadSpec]):
    """Scaled generator value and the quadrature tolerance it carries."""
    lap = float(f.laplacian(np.asarray(x, dtype=float)))
    if params.a == 0:
        return lap, 0.0
    res = pv_apply(f, x, params.with_(lam=lam), spec, full_output=True)
    w = params.jump_weight * lam ** (params.alpha - 2.0)
    return lap + w * res.value, w * res.achieved


@dataclass
class TestFunctionReport:
    passed: bool
    delta0: float
    p: float
    points: np.ndarray
    rho: np.ndarray
    offsets: np.ndarray
    u1_values: np.ndarray
    u2_values: np.ndarray
    achieved: np.ndarray
    slack: float
    verdicts: dict
    history: list = field(default_factory=list)
    descriptors: dict = field(default_factory=dict)

    def as_dict(self):
        return _py(asdict(self))


def _point_check(parts, x, params, lam, spec, slack):
    # the generator is linear: evaluate h, h_p and psi once each
    (gh, eh), (gp, ep), (gs, es) = (_generator(f, x, params, lam, spec) for f in parts)
    g1, g2 = gh + gp, gh + gs - gp
    err = eh + ep + es
    tol = slack + 10.0 * err
    return g1, g2, err, (g2 <= -1.0 + tol) and (g1 >= -tol)


def find_delta0(spec: TestFunctionSpec, params: Params, lo_rel: float = 1e-9, iters: int = 8,
                slack: float = 1e-6, quad: Optional[PVQuadSpec] = None):
    """Largest axis height (on a log scale) where both inequalities hold.

    Returns ``(delta0, history)``; ``delta0 = 0`` when they fail even at
    ``lo_rel * r0``.
    """
    parts = test_functions(spec)[2:]
    hi = 0.2 * spec.r0
    lo = lo_rel * spec.r0
    history = []

    def ok(h):
        try:
            g1, g2, _, good = _point_check(parts, spec.point(h), params, spec.lam, quad, slack)
        except AccuracyError:
            g1 = g2 = math.nan
            good = False
        history.append((h, g1, g2, good))
        return good

    if ok(hi):
        return hi, history
    if not ok(lo):
        return 0.0, history
    for _ in range(iters):
        mid = math.sqrt(lo * hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return lo, history


def verify_test_functions(spec: TestFunctionSpec, params: Params, grid=None, slack: float = 1e-6,
                          quad: Optional[PVQuadSpec] = None, max_shrink: int = 6) -> TestFunctionReport:
    """Check ``G u1 >= 0`` and ``G u2 <= -1`` for the scaled generator ``G``.

    ``grid`` is a list of ``(rho, offset)`` chart coordinates.  Without one,
    the window height is found by :func:`find_delta0` (or taken from
    ``spec.delta``) and checked on heights ``delta * [1e-2, 1]`` at the
    axis and at offsets ``0.2 r0`` and ``0.6 r0``; on failure the window is
    halved and rechecked.
    """
    if params.d != spec.domain.d:
        raise ParameterError("params and domain disagree on the dimension")
    if params.alpha != spec.alpha:
        raise ParameterError("params and spec disagree on alpha")
    parts = test_functions(spec)[2:]
    history = []
    if grid is not None:
        delta = max(r for r, _ in grid)
        tries = 1
    else:
        if spec.delta is not None:
            delta = float(spec.delta)
        else:
            delta, history = find_delta0(spec, params, slack=slack, quad=quad)
        tries = max_shrink
    offsets = (0.0,) if spec.domain.d == 1 else (0.0, 0.2 * spec.r0, 0.6 * spec.r0)
    for _ in range(tries):
        pts = grid if grid is not None else [(delta * f, o) for o in offsets for f in (1e-2, 1.0)]
        if delta <= 0:
            break
        g1s, g2s, errs, oks = [], [], [], []
        for rh, off in pts:
            try:
                g1, g2, e, good = _point_check(parts, spec.point(rh, off), params, spec.lam, quad, slack)
            except AccuracyError as exc:
                g1, g2, e, good = math.nan, math.nan, exc.achieved or math.nan, False
            g1s.append(g1)
            g2s.append(g2)
            errs.append(e)
            oks.append(good)
        if all(oks) or grid is not None:
            break
        delta *= 0.5
    if delta <= 0:
        pts, g1s, g2s, errs, oks = [], [], [], [], [False]
    u1v, u2v = np.array(g1s), np.array(g2s)
    verdicts = {
        "delta0_positive": bool(delta > 0),
        "u1_nonnegative": bool(len(u1v) > 0 and np.all(u1v >= -slack - 10 * np.nan_to_num(errs))),
        "u2_below_minus_one": bool(len(u2v) > 0 and np.all(u2v <= -1 + slack + 10 * np.nan_to_num(errs))),
    }
    arr = np.array(pts, dtype=float).reshape(-1, 2)
    world = np.array([spec.point(r, o) for r, o in arr]).reshape(-1, spec.domain.d)
    return TestFunctionReport(
        passed=all(verdicts.values()), delta0=float(delta), p=float(spec.p), points=world,
        rho=arr[:, 0], offsets=arr[:, 1], u1_values=u1v, u2_values=u2v, achieved=np.array(errs, dtype=float),
        slack=slack, verdicts=verdicts, history=history,
        descriptors=dict(kind=spec.domain.kind, d=spec.domain.d, alpha=spec.alpha, a=params.a, lam=spec.lam,
                         r0=spec.r0, level_in=spec.level_in, plateau=spec.plateau))


def verify_test_function_sweep(domains: Sequence[DomainShape], alphas, weights, lams, slack: float = 1e-6,
                               quad: Optional[PVQuadSpec] = None):
    """Run :func:`verify_test_functions` over a configuration grid.

    Flat configurations run first; a curved configuration is attempted only
    when the flat one with the same ``(alpha, a, lam)`` passed.
    Returns a list of ``(config, report or None)``.
    """
    ordered = sorted(domains, key=lambda dm: dm.kind != "half-space")
    flat_ok = {}
    out = []
    for dm in ordered:
        for al in alphas:
            for a in weights:
                for lam in lams:
                    key = (al, a, lam)
                    cfg = dict(kind=dm.kind, d=dm.d, alpha=al, a=a, lam=lam)
                    if dm.kind != "half-space" and not flat_ok.get(key, False):
                        out.append((cfg, None))
                        continue
                    spec = TestFunctionSpec(dm, al, lam=lam)
                    rep = verify_test_functions(spec, Params(d=dm.d, alpha=al, a=a), slack=slack, quad=quad)
                    if dm.kind == "half-space":
                        flat_ok[key] = flat_ok.get(key, True) and rep.passed
                    out.append((cfg, rep))
    return out


# ---------------------------------------------------------------------------
# helpers for exit experiments
# ---------------------------------------------------------------------------

def fit_through_origin(x, y):
    """Slope of ``y = c x`` and the centred R^2 of that fit."""
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    c = float(x @ y / (x @ x))
    ss_res = float(np.sum((y - c * x) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else (1.0 if ss_res == 0 else 0.0)
    return c, r2


class ComplementTarget:
    """Points at distance ``<= tol`` inside the complement of ``region``
    (boundary points count as outside)."""

    def __init__(self, region: Region, tol: float = 0.0):
        self.region, self.tol = region, float(tol)

    def contains(self, pts):
        return self.region.margin(pts) <= self.tol


def _local_half(chart: BoundaryChart, normal_local, offset: float) -> Region:
    """``{x : <local(x), n> > offset}`` in the chart frame."""
    n_world = np.asarray(chart.rotation) @ np.asarray(normal_local, dtype=float)
    return half_space(n_world, offset + float(np.asarray(chart.Q) @ n_world))


def _shell(chart: BoundaryChart, r: float) -> Region:
    # closed at the sphere so that exits onto it are counted
    return ball_complement(chart.Q, r * (1.0 - 1e-9))


def boundary_targets(domain: DomainShape, chart: BoundaryChart, r: float):
    """Two disjoint exit targets outside ``B(Q, r)`` inside the domain.

    ``top``: directions within 45 degrees of the inward normal.
    ``side``: the rest of the shell with ``y~_1 > r/2``.
    """
    d = chart.d
    dom = domain_region(domain)
    e_n = np.eye(d)[-1]
    cut = r * math.cos(math.pi / 4)
    top = _shell(chart, r) & dom & _local_half(chart, e_n, cut)
    parts = {"top": top}
    if d > 1:
        side = _shell(chart, r) & dom & _local_half(chart, -e_n, -cut) & _local_half(chart, np.eye(d)[0], 0.5 * r)
        parts["side"] = side
    return parts


def _chart_point(chart: BoundaryChart, rho_value: float, offset: float = 0.0):
    d = chart.d
    yt = np.zeros(d - 1)
    if d > 1:
        yt[0] = offset
    return chart.to_world(np.r_[yt, float(chart.graph.phi_r(abs(offset))) + rho_value])


def _estimates(region, targets, params, x, n, policy, seed, stream, workers):
    return estimate_harmonic_fns(region, list(targets), params, x, n, policy, seed, stream, workers)


# ---------------------------------------------------------------------------
# exit-distribution linearity
# ---------------------------------------------------------------------------

def _default_delta0(domain: DomainShape, params: Params):
    spec = TestFunctionSpec(domain, params.alpha)
    return find_delta0(spec, params.with_(lam=None))[0]


def run_exit_estimate_experiment(domain: DomainShape, params: Params, lambda_scale: float, n: int,
                                 delta0: Optional[float] = None, starts: int = 5, start_range=(0.02, 0.2),
                                 policy: Optional[StepPolicy] = None, seed: int = 0,
                                 workers: Optional[int] = None) -> ConstantReport:
    """Exit estimates from the small box ``D_Q(delta0/lam, r0/lam)``.

    For start points on the chart axis with ``delta_D`` log-spaced over
    ``start_range`` times the box height, estimates (i) the probability of
    exiting into ``D_Q(2 delta0/lam, r0/lam)``, (ii) the probability of
    exiting into ``D`` and (iii) the mean exit time, and fits each against
    ``delta_D`` through the origin.  ``params.lam = 1`` simulates the
    truncated process, ``None`` the full one.
    """
    lam = float(lambda_scale)
    if not lam >= 1:
        raise ParameterError("lambda_scale must be >= 1")
    if delta0 is None:
        delta0 = _default_delta0(domain, params)
    if not delta0 > 0:
        raise ParameterError("delta0 must be positive")
    chart = domain.chart()
    r0 = domain.r0
    height = delta0 / lam
    box = box_region(chart, height, r0 / lam)
    region = chart_box(box)
    bigger = chart_box(box_region(chart, 2.0 * height, r0 / lam))
    dom = domain_region(domain)
    policy = policy or StepPolicy()
    deltas = height * np.geomspace(start_range[0], start_range[1], starts)
    rows = []
    q1, q2, q3 = [], [], []
    for i, dlt in enumerate(deltas):
        x = _chart_point(chart, dlt)
        dd = float(domain.dist_to_boundary(x))
        b = simulate_batch(region, params, x, n, policy, seed,
                           stream=stream_id("exit", domain.kind, lam, params.lam, i), workers=workers)
        ok = b.modes != 3
        e1 = Estimate.from_samples((bigger.contains(b.positions) & ok).astype(float), b.censored)
        e2 = Estimate.from_samples((dom.contains(b.positions) & ok).astype(float), b.censored)
        e3 = Estimate.from_samples(b.times, b.censored)
        q1.append(e1)
        q2.append(e2)
        q3.append(e3)
        rows.append(dict(delta_D=dd, lam=lam, p_box=e1.mean, p_box_se=e1.stderr, p_domain=e2.mean,
                         p_domain_se=e2.stderr, exit_time=e3.mean, exit_time_se=e3.stderr,
                         censored_fraction=e3.censored_fraction))
    dd = np.array([r["delta_D"] for r in rows])
    fits = {name: fit_through_origin(dd, [e.mean for e in est]) for name, est in
            (("p_box", q1), ("p_domain", q2), ("exit_time", q3))}
    c8 = float(min(e.mean / (lam * x) for e, x in zip(q1, dd)))
    c9 = float(max(max(e.mean / (lam * x) for e, x in zip(q2, dd)),
                   max(e.mean * lam / x for e, x in zip(q3, dd))))
    verdicts = {f"linear_{k}": bool(v[1] >= 0.9) for k, v in fits.items()}
    verdicts["finite"] = bool(math.isfinite(c8) and math.isfinite(c9) and c8 > 0)
    return ConstantReport(
        name="exit", empirical_constant=c8, stability_ratio=math.nan, verdicts=verdicts,
        constants=dict(C8=c8, C9=c9, slopes={k: v[0] for k, v in fits.items()},
                       r2={k: v[1] for k, v in fits.items()}),
        descriptors=dict(kind=domain.kind, d=domain.d, alpha=params.alpha, a=params.a,
                         truncated=params.lam is not None, lam=lam, delta0=delta0, r0=r0, n=n, seed=seed),
        rows=rows)


def run_exit_lambda_sweep(domain: DomainShape, params: Params, lambdas=(1.0, 2.0, 4.0), n: int = 100_000,
                          delta0: Optional[float] = None, factor: float = 3.0, **kw) -> ConstantReport:
    """Exit experiment at several scales; the lower slope constant must vary
    by less than ``factor`` across them."""
    if delta0 is None:
        delta0 = _default_delta0(domain, params)
    reps = [run_exit_estimate_experiment(domain, params, lam, n, delta0=delta0, **kw) for lam in lambdas]
    c8 = [r.empirical_constant for r in reps]
    spread = _ratio_spread(c8)
    verdicts = {f"lam={lam:g}:{k}": v for lam, r in zip(lambdas, reps) for k, v in r.verdicts.items()}
    verdicts["lambda_uniform"] = bool(spread < factor)
    return ConstantReport(
        name="exit-lambda", empirical_constant=float(min(c8)), stability_ratio=spread, verdicts=verdicts,
        constants=dict(C8=c8, C9=[r.constants["C9"] for r in reps], r2=[r.constants["r2"] for r in reps]),
        descriptors=dict(reps[0].descriptors, lambdas=list(lambdas)),
        rows=[row for r in reps for row in r.rows])


def compare_truncated_full(domain: DomainShape, params: Params, lambda_scale: float, n: int,
                           delta0: Optional[float] = None, **kw) -> ConstantReport:
    """Box-exit probability of the truncated and the full process agree
    within 3 standard errors at every start point."""
    if delta0 is None:
        delta0 = _default_delta0(domain, params)
    tr = run_exit_estimate_experiment(domain, params.with_(lam=1.0), lambda_scale, n, delta0=delta0, **kw)
    fu = run_exit_estimate_experiment(domain, params.with_(lam=None), lambda_scale, n, delta0=delta0, **kw)
    zs = []
    for a, b in zip(tr.rows, fu.rows):
        se = math.hypot(a["p_box_se"], b["p_box_se"])
        zs.append((a["p_box"] - b["p_box"]) / se if se > 0 else 0.0)
    worst = float(np.max(np.abs(zs)))
    return ConstantReport(
        name="exit-truncated-vs-full", empirical_constant=worst, stability_ratio=math.nan,
        verdicts={"agree_3se": bool(worst < 3.0)}, constants=dict(z=zs),
        descriptors=dict(tr.descriptors, truncated="both"), rows=tr.rows + fu.rows)


# ---------------------------------------------------------------------------
# Harnack inequality
# ---------------------------------------------------------------------------

def _harnack_grid(d: int, r: float):
    pts = [np.zeros(d)]
    for k in (0, d - 1):
        for s in (1.0, -1.0):
            v = np.zeros(d)
            v[k] = 0.4 * r * s
            pts.append(v)
    if d > 1:
        v = np.zeros(d)
        v[0] = v[-1] = 0.3 * r
        pts.append(v)
    uniq = []
    for p in pts:
        if not any(np.allclose(p, q) for q in uniq):
            uniq.append(p)
    return np.array(uniq)


def run_harnack_experiment(params: Params, r: float, n: int, a_grid=None, grid=None,
                           policy: Optional[StepPolicy] = None, seed: int = 0, workers: Optional[int] = None,
                           factor: float = 5.0) -> ConstantReport:
    """Interior comparability ``u(x) <= C0 u(y)`` on ``B(0, r/2)``.

    The harmonic functions are the probabilities of exiting ``B(0, r)`` into
    polar caps around ``+e_d``, ``-e_d`` and ``+e_1``, plus the whole
    complement (``u = 1``).  ``C0`` is the largest ratio over grid pairs and
    caps; it is computed for every weight in ``a_grid``.
    """
    if not 0 < r <= 1:
        raise ParameterError("r must lie in (0, 1]")
    d = params.d
    a_grid = (0.25, 1.0, params.m_cap) if a_grid is None else tuple(a_grid)
    grid = _harnack_grid(d, r) if grid is None else np.atleast_2d(np.asarray(grid, dtype=float))
    if np.any(np.linalg.norm(grid, axis=1) >= 0.5 * r):
        raise GeometryError("grid points must lie in B(0, r/2)")
    region = ball(np.zeros(d), r)
    origin = np.zeros(d)
    dirs = {"+e_d": np.eye(d)[-1], "-e_d": -np.eye(d)[-1]}
    if d > 1:
        dirs["+e_1"] = np.eye(d)[0]
    targets = {k: ball_complement(origin, r * (1 - 1e-9)) & half_space(v, r * math.cos(math.pi / 4))
               for k, v in dirs.items()}
    targets["all"] = ball_complement(origin, r * (1 - 1e-9))
    names = list(targets)
    rows, per_a, worst = [], {}, {}
    for a in a_grid:
        prm = params.with_(a=a)
        vals = np.zeros((len(grid), len(names)))
        for i, x in enumerate(grid):
            ests = _estimates(region, targets.values(), prm, x, n, policy, seed,
                              stream_id("harnack", r, a, i), workers)
            vals[i] = [e.mean for e in ests]
            for nm, e in zip(names, ests):
                rows.append(dict(a=a, x=list(map(float, x)), target=nm, u=e.mean, se=e.stderr))
        best, arg = 1.0, None
        for j, nm in enumerate(names[:-1]):
            col = vals[:, j]
            if np.any(col <= 0):
                best, arg = math.inf, dict(target=nm)
                break
            ratio = col.max() / col.min()
            if ratio > best:
                best = float(ratio)
                arg = dict(target=nm, x=grid[int(col.argmax())].tolist(), y=grid[int(col.argmin())].tolist())
        per_a[a] = best
        worst[a] = arg
    c0 = max(per_a.values())
    spread = _ratio_spread(list(per_a.values()))
    sym = {}
    for i, x in enumerate(grid):
        for j, y in enumerate(grid):
            if j > i and np.allclose(x, -y) and abs(x[-1]) < 1e-12:
                row_x = [r_ for r_ in rows if r_["target"] == "+e_d" and r_["a"] == a_grid[0] and r_["x"] == list(map(float, x))]
                row_y = [r_ for r_ in rows if r_["target"] == "+e_d" and r_["a"] == a_grid[0] and r_["x"] == list(map(float, y))]
                if row_x and row_y and row_y[0]["u"] > 0:
                    sym[f"{list(map(float, x))}"] = row_x[0]["u"] / row_y[0]["u"]
    const_max_dev = max(abs(r_["u"] - 1.0) for r_ in rows if r_["target"] == "all")
    verdicts = {"finite": bool(math.isfinite(c0)), "a_stable": bool(spread < factor)}
    a_max = max(per_a, key=per_a.get)
    return ConstantReport(
        name="harnack", empirical_constant=float(c0), stability_ratio=spread, verdicts=verdicts,
        constants=dict(C0_by_a={str(k): v for k, v in per_a.items()}, symmetric_ratio=sym,
                       constant_function_deviation=const_max_dev),
        descriptors=dict(d=d, alpha=params.alpha, r=r, a_grid=list(a_grid), n=n, seed=seed,
                         grid=grid.tolist(), targets=names),
        worst_pair=worst[a_max], rows=rows)


# ---------------------------------------------------------------------------
# Carleson estimate and the escape lower bound
# ---------------------------------------------------------------------------

def _carleson_grid(chart: BoundaryChart, r: float):
    """Chart ``(rho, offset)`` pairs inside ``B(Q, r/2)``, scaled with ``r``."""
    pairs = [(h * r, 0.0) for h in (0.02, 0.05, 0.1, 0.2, 0.3, 0.45)]
    for off in (0.2, -0.2):
        for h in (0.02, 0.1):
            pairs.append((h * r, off * r))
    out = []
    for rh, off in pairs:
        x = _chart_point(chart, rh, off)
        if np.linalg.norm(x - chart.Q) < 0.5 * r:
            out.append((rh, off))
    return out


def _carleson_at(domain, params, r, n, policy, seed, workers, tag):
    chart = domain.chart()
    region = domain_region(domain) & ball(chart.Q, r)
    target = boundary_targets(domain, chart, r)["top"]
    x0 = _chart_point(chart, 0.5 * r)
    pairs = _carleson_grid(chart, r)
    u0 = _estimates(region, [target], params, x0, n, policy, seed, stream_id(tag, r, params.a, "x0"), workers)[0]
    rows = [dict(r=r, a=params.a, rho=0.5 * r, offset=0.0, u=u0.mean, se=u0.stderr, reference=True)]
    ratios = []
    for i, (rh, off) in enumerate(pairs):
        x = _chart_point(chart, rh, off)
        e = _estimates(region, [target], params, x, n, policy, seed, stream_id(tag, r, params.a, i), workers)[0]
        rows.append(dict(r=r, a=params.a, rho=rh, offset=off, u=e.mean, se=e.stderr, reference=False))
        ratios.append(e.mean / u0.mean if u0.mean > 0 else math.inf)
    k = int(np.argmax(ratios))
    return float(max(ratios)), rows, dict(x=list(map(float, _chart_point(chart, *pairs[k]))),
                                          x0=list(map(float, x0)))


def run_carleson_experiment(domain: DomainShape, params: Params, r: float, n: int, a_grid=None,
                            policy: Optional[StepPolicy] = None, seed: int = 0, workers: Optional[int] = None,
                            factor: float = 3.0) -> ConstantReport:
    """``u(x) <= A u(x0)`` on ``D cap B(Q, r/2)`` with ``rho_Q(x0) = r/2``.

    ``u`` is the probability of exiting ``D cap B(Q, r)`` into the top cap
    outside ``B(Q, r)``, so it vanishes on ``D^c cap B(Q, r)``.  The
    constant is estimated at ``r`` and ``r/2`` for each weight in ``a_grid``.
    """
    if domain.kind not in ("lipschitz-cone", "half-space"):
        raise ParameterError("the Carleson experiment needs a Lipschitz domain")
    a_grid = (params.a,) if a_grid is None else tuple(a_grid)
    rows, at_r, at_half, worst = [], {}, {}, {}
    for a in a_grid:
        prm = params.with_(a=a)
        at_r[a], rr, worst[a] = _carleson_at(domain, prm, r, n, policy, seed, workers, "carleson")
        at_half[a], rh, _ = _carleson_at(domain, prm, 0.5 * r, n, policy, seed, workers, "carleson")
        rows += rr + rh
    a_big = max(at_r, key=at_r.get)
    scale_ratio = max(_ratio_spread([at_r[a], at_half[a]]) for a in a_grid)
    a_ratio = _ratio_spread(list(at_r.values()))
    verdicts = {"finite": bool(all(math.isfinite(v) for v in list(at_r.values()) + list(at_half.values()))),
                "scale_stable": bool(scale_ratio < factor)}
    if len(a_grid) > 1:
        verdicts["a_stable"] = bool(a_ratio < factor)
    return ConstantReport(
        name="carleson", empirical_constant=float(max(at_r.values())), stability_ratio=scale_ratio,
        verdicts=verdicts,
        constants=dict(A_at_r={str(k): v for k, v in at_r.items()},
                       A_at_half_r={str(k): v for k, v in at_half.items()}, a_ratio=a_ratio),
        descriptors=dict(kind=domain.kind, d=domain.d, alpha=params.alpha, r=r, a_grid=list(a_grid), n=n,
                         seed=seed),
        worst_pair=worst[a_big], rows=rows)


def run_lower_bound_experiment(domain: DomainShape, params: Params, n: int, depths=None, a_grid=None,
                               policy: Optional[StepPolicy] = None, seed: int = 0,
                               workers: Optional[int] = None, factor: float = 3.0) -> ConstantReport:
    """Escape probability ``P_x(X_tau in D^c)`` from ``D cap B(x, 2 rho_Q(x))``.

    ``x`` runs along the chart axis at heights ``depths`` (default
    ``R1 * [0.4, 0.2, 0.1, 0.05, 0.02]``).  The constant is the minimum over
    the ray; the stability ratio is the spread along the ray.
    """
    chart = domain.chart()
    if depths is None:
        depths = domain.R1 * np.array([0.4, 0.2, 0.1, 0.05, 0.02])
    depths = np.asarray(depths, dtype=float)
    if np.any(depths >= 0.5 * domain.R1):
        raise ParameterError("ray points need rho_Q < R1/2")
    a_grid = (params.a,) if a_grid is None else tuple(a_grid)
    dom = domain_region(domain)
    rows, mins, spreads, ests = [], {}, {}, {}
    for a in a_grid:
        prm = params.with_(a=a)
        vals = []
        for i, rh in enumerate(depths):
            x = _chart_point(chart, rh)
            region = dom & ball(x, 2.0 * rh)
            target = ComplementTarget(dom, tol=1e-9 * rh)
            e = _estimates(region, [target], prm, x, n, policy, seed, stream_id("lower", a, i), workers)[0]
            vals.append(e)
            rows.append(dict(a=a, rho=float(rh), p_escape=e.mean, se=e.stderr,
                             censored_fraction=e.censored_fraction))
        ests[a] = vals
        mins[a] = float(min(v.mean for v in vals))
        spreads[a] = _ratio_spread([v.mean for v in vals])
    lo = min(mins.values())
    spread = max(spreads.values())
    first, last = ests[a_grid[0]][0], ests[a_grid[0]][-1]
    se = math.hypot(first.stderr, last.stderr)
    z_depth = (first.mean - last.mean) / se if se > 0 else 0.0
    verdicts = {"positive": bool(lo > 0), "ray_stable": bool(spread < factor)}
    return ConstantReport(
        name="lowerbound", empirical_constant=lo, stability_ratio=spread, verdicts=verdicts,
        constants=dict(min_by_a={str(k): v for k, v in mins.items()}, z_extreme_depths=float(z_depth)),
        descriptors=dict(kind=domain.kind, d=domain.d, alpha=params.alpha, depths=depths.tolist(),
                         a_grid=list(a_grid), n=n, seed=seed),
        rows=rows)


# ---------------------------------------------------------------------------
# boundary Harnack principle
# ---------------------------------------------------------------------------

def _bhp_grid(chart: BoundaryChart, r: float):
    pairs = [(h * r, 0.0) for h in (0.01, 0.02, 0.05, 0.1, 0.2, 0.4)]
    if chart.d > 1:
        for off in (0.25, -0.25):
            for h in (0.02, 0.1, 0.3):
                pairs.append((h * r, off * r))
    return [(rh, off) for rh, off in pairs if np.linalg.norm(_chart_point(chart, rh, off) - chart.Q) < 0.5 * r]


def _bhp_at(domain, params, r, n, policy, seed, workers):
    chart = domain.chart()
    region = domain_region(domain) & ball(chart.Q, r)
    targets = boundary_targets(domain, chart, r)
    names = list(targets)
    pairs = _bhp_grid(chart, r)
    pts = np.array([_chart_point(chart, rh, off) for rh, off in pairs])
    dist = np.asarray(domain.dist_to_boundary(pts), dtype=float)
    vals = np.zeros((len(pts), len(names)))
    rows = []
    for i, x in enumerate(pts):
        ests = _estimates(region, targets.values(), params, x, n, policy, seed,
                          stream_id("bhp", domain.kind, r, params.a, i), workers)
        vals[i] = [e.mean for e in ests]
        for nm, e in zip(names, ests):
            rows.append(dict(r=r, a=params.a, rho=pairs[i][0], offset=pairs[i][1], delta_D=float(dist[i]),
                             target=nm, u=e.mean, se=e.stderr, censored_fraction=e.censored_fraction))
    best, worst = 1.0, None
    for j, nm in enumerate(names):
        q = vals[:, j] / dist
        if np.any(q <= 0):
            return math.inf, math.inf, rows, dict(target=nm, reason="zero estimate"), (pairs, dist, vals, names)
        c = float(q.max() / q.min())
        if c > best:
            best = c
            worst = dict(target=nm, x=pts[int(q.argmax())].tolist(), y=pts[int(q.argmin())].tolist())
    pair_c = 1.0
    if len(names) > 1:
        ratio = vals[:, 0] / vals[:, 1]
        pair_c = float(ratio.max() / ratio.min())
    return best, pair_c, rows, worst, (pairs, dist, vals, names)


def run_bhp_experiment(domain: DomainShape, params: Params, Q=None, r: float = 1.0, n: int = 100_000,
                       a_grid=None, policy: Optional[StepPolicy] = None, seed: int = 0,
                       workers: Optional[int] = None, decay_window=(1e-2, 1e-1)) -> ConstantReport:
    """Comparability ``u(x)/u(y) <= C delta_D(x)/delta_D(y)`` on ``D cap B(Q, r/2)``.

    Two harmonic functions (exit into the top cap and into the side of the
    shell outside ``B(Q, r)``) are estimated on shared paths at a grid that
    scales with ``r``.  The run is repeated at ``r/2`` and for every weight
    in ``a_grid``.  Verdicts: finite, scale stable (factor 2), stable in
    ``a`` (factor 3), and ``u/delta_D`` within a factor 10 on the axis for
    ``delta_D`` in ``decay_window``.
    """
    if domain.kind not in ("half-space", "c11-bump"):
        raise ParameterError("the boundary Harnack experiment needs a flat or parabolic boundary")
    if Q is not None and not np.allclose(Q, domain.chart().Q):
        raise ParameterError("Q must be the domain's reference point")
    a_grid = (0.25, 1.0, params.m_cap) if a_grid is None else tuple(a_grid)
    rows, c_r, c_half, pair_c, worst, decay = [], {}, {}, {}, {}, {}
    for a in a_grid:
        prm = params.with_(a=a)
        c_r[a], pair_c[a], rr, worst[a], data = _bhp_at(domain, prm, r, n, policy, seed, workers)
        c_half[a], _, rh, _, _ = _bhp_at(domain, prm, 0.5 * r, n, policy, seed, workers)
        rows += rr + rh
        pairs, dist, vals, names = data
        axis = np.array([off == 0.0 for _, off in pairs])
        sel = axis & (dist >= decay_window[0] * (1 - 1e-9)) & (dist <= decay_window[1] * (1 + 1e-9))
        spreads = [_ratio_spread(vals[sel, j] / dist[sel]) for j in range(len(names))] if sel.sum() >= 2 else [math.inf]
        decay[a] = max(spreads)
    scale_ratio = max(_ratio_spread([c_r[a], c_half[a]]) for a in a_grid)
    a_ratio = _ratio_spread(list(c_r.values()))
    finite = all(math.isfinite(v) for v in list(c_r.values()) + list(c_half.values()))
    verdicts = {"finite": bool(finite), "scale_stable": bool(scale_ratio < 2.0),
                "decay_bounded": bool(max(decay.values()) < 10.0)}
    if len(a_grid) > 1:
        verdicts["a_stable"] = bool(a_ratio < 3.0)
    a_big = max(c_r, key=c_r.get)
    return ConstantReport(
        name="bhp", empirical_constant=float(max(c_r.values())), stability_ratio=scale_ratio, verdicts=verdicts,
        constants=dict(C_at_r={str(k): v for k, v in c_r.items()}, C_at_half_r={str(k): v for k, v in c_half.items()},
                       a_ratio=a_ratio, pair_ratio={str(k): v for k, v in pair_c.items()},
                       decay_spread={str(k): v for k, v in decay.items()}),
        descriptors=dict(kind=domain.kind, d=domain.d, alpha=params.alpha, r=r, a_grid=list(a_grid), n=n,
                         seed=seed, decay_window=list(decay_window)),
        worst_pair=worst[a_big], rows=rows)


# ---------------------------------------------------------------------------
# distributional scaling
# ---------------------------------------------------------------------------

def _unit_radius(pos, tol=1e-9):
    # continuous exits form an atom at radius 1; rounding in the rescaling
    # must not split it, or KS sees two different atoms
    r = np.linalg.norm(pos, axis=1)
    return np.where(np.abs(r - 1.0) <= tol, 1.0, r)


def run_scaling_check(params: Params, lam: float, t: float, n: int, radius: float = 1.0, start=0.3,
                      truncated: bool = False, policy: Optional[StepPolicy] = None, seed: int = 0,
                      workers: Optional[int] = None, level: float = 0.01) -> ConstantReport:
    """Two-sample KS tests of the parabolic scaling of the mixed process.

    Exits of ``X^a`` from ``B(0, radius)`` are compared with exits of
    ``X^b``, ``b = a lam^((alpha-2)/alpha)``, from ``B(0, lam radius)``,
    after dividing times by ``lam^2`` and positions by ``lam``.  The free
    increment ``lam X^a_{t/lam^2}`` is compared with ``X^b_t``.  With
    ``truncated`` the processes have jumps cut at 1 and ``lam``.  The
    policy's cut-off and censoring distance should be absolute so that
    the two runs are not trivially identical.
    """
    d = params.d
    policy = policy or StepPolicy(eta=1e-2 * radius, eps_kill=1e-4 * radius)
    b = params.a * lam ** ((params.alpha - 2.0) / params.alpha)
    if b > params.m_cap:
        raise ParameterError("scaled weight exceeds m_cap")
    p1 = params.with_(lam=1.0 if truncated else None)
    p2 = params.with_(a=b, lam=float(lam) if truncated else None)
    x0 = np.zeros(d)
    x0[0] = start * radius
    tag = ("scaling", params.alpha, params.a, lam, truncated)
    s1 = simulate_batch(ball(np.zeros(d), radius), p1, x0, n, policy, seed, stream=stream_id(*tag, 1),
                        workers=workers)
    s2 = simulate_batch(ball(np.zeros(d), lam * radius), p2, lam * x0, n, policy, seed,
                        stream=stream_id(*tag, 2), workers=workers)
    tests = {
        "exit_time": (s1.times, s2.times / lam ** 2),
        "exit_coord": (s1.positions[:, 0], s2.positions[:, 0] / lam),
        "exit_radius": (_unit_radius(s1.positions / radius), _unit_radius(s2.positions / (lam * radius))),
    }
    g1 = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(stream_id(*tag, 3),))))
    g2 = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(stream_id(*tag, 4),))))
    if truncated:
        free1 = lam * np.array([truncated_xa_increment(p1, t / lam ** 2, policy, g1, radius)[0][0] for _ in range(n)])
        free2 = np.array([truncated_xa_increment(p2, t, policy, g2, radius)[0][0] for _ in range(n)])
    else:
        free1 = lam * xa_increment(p1, t / lam ** 2, g1, n)[:, 0]
        free2 = xa_increment(p2, t, g2, n)[:, 0]
    tests["free_increment"] = (free1, free2)
    results = {}
    for k, (u, v) in tests.items():
        res = stats.ks_2samp(u, v)
        results[k] = dict(statistic=float(res.statistic), pvalue=float(res.pvalue))
    verdicts = {k: bool(v["pvalue"] > level) for k, v in results.items()}
    pmin = min(v["pvalue"] for v in results.values())
    return ConstantReport(
        name="scaling", empirical_constant=float(max(v["statistic"] for v in results.values())),
        stability_ratio=math.nan, verdicts=verdicts, constants=dict(ks=results, min_pvalue=pmin, scaled_weight=b),
        descriptors=dict(d=d, alpha=params.alpha, a=params.a, lam=lam, t=t, n=n, truncated=truncated,
                         radius=radius, seed=seed, eta=s1.eta, eps_kill=s1.eps_kill),
        rows=[dict(test=k, **v) for k, v in results.items()])
