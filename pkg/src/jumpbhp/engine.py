"""Compiled path stepping for exit problems.

A region is an intersection of simple constraints, each given in its own
rigid frame ``local = (x - origin) @ rotation``.  The margin of a constraint
is a signed distance (positive inside) to its boundary; the margin of the
region is the minimum over constraints.

Constraint kinds (``par`` holds up to two shape numbers):

    HALF      y_d > 0
    BALL_IN   |x - origin| < par0
    BALL_OUT  |x - origin| > par0
    PARAB     y_d > par0 |y~|^2
    CONE      y_d > par0 |y~|
    SLAB_TOP  y_d - par1 |y~|^2 < par0
    CYL       |y~| < par0
"""
from __future__ import annotations

import math

import numba
import numpy as np

HALF, BALL_IN, BALL_OUT, PARAB, CONE, SLAB_TOP, CYL = range(7)
MODE_JUMP, MODE_CONT, MODE_CENSOR, MODE_BUDGET = 0, 1, 2, 3
MODE_NAMES = {MODE_JUMP: "jump-out", MODE_CONT: "continuous", MODE_CENSOR: "censored-near-boundary",
              MODE_BUDGET: "budget"}

_jit = numba.njit(cache=True, nogil=True)


@_jit
def parab_foot(r, h, kappa):
    """Foot parameter ``t >= 0`` of the nearest point ``(t, kappa t^2)`` to ``(r, h)``."""
    b = 1.0 - 2.0 * kappa * h
    if r < 1e-14:
        if b < 0.0:
            return math.sqrt(-b / (2.0 * kappa * kappa))
        return 0.0
    lo = 0.0
    hi = r
    # points above the curve have their foot beyond r
    while 2.0 * kappa * kappa * hi * hi * hi + b * hi - r <= 0.0:
        hi *= 2.0
    t = hi
    for _ in range(100):
        gt = 2.0 * kappa * kappa * t * t * t + b * t - r
        if gt > 0.0:
            hi = t
        else:
            lo = t
        dg = 6.0 * kappa * kappa * t * t + b
        if dg > 0.0:
            t_new = t - gt / dg
        else:
            t_new = 0.5 * (lo + hi)
        if t_new < lo or t_new > hi:
            t_new = 0.5 * (lo + hi)
        if abs(t_new - t) <= 1e-15 * max(1.0, t):
            return t_new
        t = t_new
    return t


@_jit
def parab_signed(r, h, kappa):
    """Signed distance from ``(r, h)`` to ``h = kappa r^2``, positive above."""
    if kappa == 0.0:
        return h
    t = parab_foot(r, h, kappa)
    dist = math.hypot(t - r, kappa * t * t - h)
    return dist if h > kappa * r * r else -dist


@_jit
def _local(x, org, rot, k, loc):
    d = x.shape[0]
    for j in range(d):
        s = 0.0
        for i in range(d):
            s += (x[i] - org[k, i]) * rot[k, i, j]
        loc[j] = s


@_jit
def _tilde_norm(loc):
    s = 0.0
    for j in range(loc.shape[0] - 1):
        s += loc[j] * loc[j]
    return math.sqrt(s)


@_jit
def constraint_margin(x, kind, org, rot, par, k, loc):
    kd = kind[k]
    d = x.shape[0]
    if kd == BALL_IN or kd == BALL_OUT:
        s = 0.0
        for i in range(d):
            s += (x[i] - org[k, i]) ** 2
        dist = math.sqrt(s)
        return par[k, 0] - dist if kd == BALL_IN else dist - par[k, 0]
    _local(x, org, rot, k, loc)
    h = loc[d - 1]
    if kd == HALF:
        return h
    r = _tilde_norm(loc)
    if kd == PARAB:
        return parab_signed(r, h, par[k, 0])
    if kd == CONE:
        s = par[k, 0]
        return (h - s * r) / math.sqrt(1.0 + s * s)
    if kd == SLAB_TOP:
        return -parab_signed(r, h - par[k, 0], par[k, 1])
    # CYL
    return par[k, 0] - r


@_jit
def region_margin(x, kind, org, rot, par, loc, out):
    """Fill ``out`` with per-constraint margins; return (min margin, argmin)."""
    best = np.inf
    arg = 0
    for k in range(kind.shape[0]):
        m = constraint_margin(x, kind, org, rot, par, k, loc)
        out[k] = m
        if m < best:
            best = m
            arg = k
    return best, arg


@_jit
def project_to_boundary(x, kind, org, rot, par, k, loc, res):
    """Nearest point on the boundary of constraint ``k`` (written to ``res``)."""
    d = x.shape[0]
    kd = kind[k]
    if kd == BALL_IN or kd == BALL_OUT:
        s = 0.0
        for i in range(d):
            s += (x[i] - org[k, i]) ** 2
        dist = math.sqrt(s)
        for i in range(d):
            if dist > 0:
                res[i] = org[k, i] + par[k, 0] * (x[i] - org[k, i]) / dist
            else:
                res[i] = org[k, i] + (par[k, 0] if i == d - 1 else 0.0)
        return
    _local(x, org, rot, k, loc)
    h = loc[d - 1]
    r = _tilde_norm(loc)
    new_r = r
    new_h = h
    if kd == HALF:
        new_h = 0.0
    elif kd == PARAB or kd == SLAB_TOP:
        kap = par[k, 0] if kd == PARAB else par[k, 1]
        shift = 0.0 if kd == PARAB else par[k, 0]
        t = parab_foot(r, h - shift, kap) if kap > 0 else r
        new_r = t
        new_h = kap * t * t + shift
    elif kd == CONE:
        s = par[k, 0]
        q = math.sqrt(1.0 + s * s)
        along = (r + s * h) / q
        if along < 0:
            along = 0.0
        new_r = along / q
        new_h = s * new_r
    else:
        new_r = par[k, 0]
    # rescale the tangential part to the new radius
    if d > 1:
        if r > 0:
            for j in range(d - 1):
                loc[j] *= new_r / r
        else:
            loc[0] = new_r
    loc[d - 1] = new_h
    for i in range(d):
        s = org[k, i]
        for j in range(d):
            s += rot[k, i, j] * loc[j]
        res[i] = s


@_jit
def margins_of_points(pts, kind, org, rot, par):
    n, d = pts.shape
    loc = np.empty(d)
    buf = np.empty(kind.shape[0])
    out = np.empty(n)
    for i in range(n):
        out[i], _ = region_margin(pts[i], kind, org, rot, par, loc, buf)
    return out


@_jit
def _table_value(x, tab_c, tab_h, tab_vals):
    s = 0.0
    for i in range(x.shape[0]):
        s += (x[i] - tab_c[i]) ** 2
    u = math.sqrt(s) / tab_h
    i0 = int(u)
    if i0 >= tab_vals.shape[0] - 1:
        return tab_vals[tab_vals.shape[0] - 1]
    w = u - i0
    return (1.0 - w) * tab_vals[i0] + w * tab_vals[i0 + 1]


@_jit
def simulate_paths(gen, n, x0, kind, org, rot, par, var_rate, jump_rate, eta, upper, alpha,
                   dt_max, c_step, eps_kill, bridge, max_steps, tab_c, tab_h, tab_vals):
    """Simulate ``n`` independent paths from ``x0`` until they leave the region.

    Between jumps the path is Gaussian with per-coordinate variance rate
    ``var_rate``; jumps of size in ``[eta, upper)`` arrive at rate
    ``jump_rate`` with radial density proportional to ``r^(-1-alpha)``.
    When ``tab_vals`` is non-empty the trapezoid integral of the tabulated
    radial function along the path is accumulated.
    """
    d = x0.shape[0]
    nk = kind.shape[0]
    times = np.empty(n)
    pos = np.empty((n, d))
    modes = np.empty(n, dtype=np.int8)
    steps = np.empty(n, dtype=np.int64)
    integral = np.zeros(n)
    cdist = np.zeros(n)
    x = np.empty(d)
    y = np.empty(d)
    z = np.empty(d)
    loc = np.empty(d)
    mx = np.empty(nk)
    my = np.empty(nk)
    mz = np.empty(nk)
    use_tab = tab_vals.shape[0] > 0
    eta_pow = eta ** (-alpha)
    up_pow = 0.0 if upper == np.inf else upper ** (-alpha)
    for p in range(n):
        for i in range(d):
            x[i] = x0[i]
        t = 0.0
        acc = 0.0
        m, arg = region_margin(x, kind, org, rot, par, loc, mx)
        g_prev = _table_value(x, tab_c, tab_h, tab_vals) if use_tab else 0.0
        k = 0
        mode = MODE_BUDGET
        while True:
            if k >= max_steps:
                for i in range(d):
                    pos[p, i] = x[i]
                mode = MODE_BUDGET
                break
            if m < eps_kill:
                project_to_boundary(x, kind, org, rot, par, arg, loc, z)
                for i in range(d):
                    pos[p, i] = z[i]
                cdist[p] = m
                mode = MODE_CENSOR
                break
            dt = min(dt_max, c_step * m * m * 2.0 / var_rate) if var_rate > 0 else dt_max
            jumped = False
            s = dt
            if jump_rate > 0.0:
                e = gen.standard_exponential() / jump_rate
                if e < dt:
                    s = e
                    jumped = True
            sd = math.sqrt(var_rate * s)
            for i in range(d):
                y[i] = x[i] + sd * gen.standard_normal()
            t += s
            k += 1
            m_y, arg_y = region_margin(y, kind, org, rot, par, loc, my)
            if m_y <= 0.0:
                if use_tab:
                    acc += s * g_prev
                # a continuous path leaves through the boundary, not past it
                project_to_boundary(y, kind, org, rot, par, arg_y, loc, z)
                for i in range(d):
                    pos[p, i] = z[i]
                mode = MODE_CONT
                break
            if bridge and var_rate > 0.0:
                keep = 1.0
                best_p = 0.0
                best_k = 0
                for c in range(nk):
                    pc = math.exp(-2.0 * mx[c] * my[c] / (var_rate * s))
                    keep *= 1.0 - pc
                    if pc > best_p:
                        best_p = pc
                        best_k = c
                if gen.random() < 1.0 - keep:
                    if use_tab:
                        acc += s * g_prev
                    project_to_boundary(y, kind, org, rot, par, best_k, loc, z)
                    for i in range(d):
                        pos[p, i] = z[i]
                    mode = MODE_CONT
                    break
            if use_tab:
                g_y = _table_value(y, tab_c, tab_h, tab_vals)
                acc += 0.5 * s * (g_prev + g_y)
                g_prev = g_y
            if jumped:
                u = gen.random()
                r = (eta_pow - u * (eta_pow - up_pow)) ** (-1.0 / alpha)
                nrm = 0.0
                for i in range(d):
                    z[i] = gen.standard_normal()
                    nrm += z[i] * z[i]
                nrm = math.sqrt(nrm)
                for i in range(d):
                    z[i] = y[i] + r * z[i] / nrm
                m_z, arg_z = region_margin(z, kind, org, rot, par, loc, mz)
                if m_z <= 0.0:
                    for i in range(d):
                        pos[p, i] = z[i]
                    mode = MODE_JUMP
                    break
                for i in range(d):
                    x[i] = z[i]
                for c in range(nk):
                    mx[c] = mz[c]
                m, arg = m_z, arg_z
                if use_tab:
                    g_prev = _table_value(x, tab_c, tab_h, tab_vals)
            else:
                for i in range(d):
                    x[i] = y[i]
                for c in range(nk):
                    mx[c] = my[c]
                m, arg = m_y, arg_y
        times[p] = t
        modes[p] = mode
        steps[p] = k
        integral[p] = acc
    return times, pos, modes, steps, integral, cdist
