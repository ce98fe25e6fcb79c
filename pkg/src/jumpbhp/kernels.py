"""Analytic constants, jump intensities and exponents of the mixed process.

The process is a Brownian motion with generator the Laplacian plus an
independent symmetric alpha-stable process with weight ``a``; its jump kernel
is ``a**alpha * A(d, alpha) * |z|**-(d + alpha)``, optionally cut off at
``|z| < lam``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
from scipy import integrate, special

from .errors import ParameterError, SingularityError

__all__ = [
    "Params",
    "normalization_constant",
    "sphere_area",
    "levy_intensity",
    "levy_exponent_truncated",
    "char_exponent",
    "untruncated_radial_integral",
    "truncated_radial_integral",
]


@dataclass(frozen=True)
class Params:
    """Shared analytic knobs.

    ``a`` may be 0 (pure Brownian motion); ``lam=None`` means no truncation.
    """

    d: int
    alpha: float
    a: float = 1.0
    m_cap: float = 2.0
    lam: Optional[float] = None

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise ParameterError(f"dimension must be a positive integer, got {self.d!r}")
        _check_alpha(self.alpha)
        if self.m_cap <= 0:
            raise ParameterError(f"m_cap must be positive, got {self.m_cap}")
        if not 0 <= self.a <= self.m_cap:
            raise ParameterError(f"weight a={self.a} outside [0, {self.m_cap}]")
        if self.lam is not None and not self.lam > 0:
            raise ParameterError(f"truncation radius must be positive, got {self.lam}")

    def with_(self, **changes) -> "Params":
        return replace(self, **changes)

    @property
    def jump_weight(self) -> float:
        """``a**alpha``, the factor in front of the stable part of the generator."""
        return self.a ** self.alpha


def _check_alpha(alpha):
    if not 0 < alpha < 2:
        raise ParameterError(f"alpha must lie in (0, 2), got {alpha}")


def normalization_constant(d: int, alpha: float) -> float:
    """Constant ``A(d, alpha)`` of the fractional Laplacian kernel.

    Note that ``A(d, alpha) -> 0`` as ``alpha -> 2`` (the reciprocal
    ``Gamma(1 - alpha/2)`` vanishes) while ``A(d, alpha) / (2 - alpha)``
    stays bounded.
    """
    if int(d) != d or d < 1:
        raise ParameterError(f"dimension must be a positive integer, got {d!r}")
    _check_alpha(alpha)
    log_val = (
        math.log(alpha)
        + (alpha - 1.0) * math.log(2.0)
        - 0.5 * d * math.log(math.pi)
        + special.gammaln(0.5 * (d + alpha))
    )
    return math.exp(log_val) * special.rgamma(1.0 - 0.5 * alpha)


def sphere_area(d: int) -> float:
    """Surface measure of the unit sphere in R^d (2 for d = 1)."""
    if d < 1:
        raise ParameterError(f"dimension must be >= 1, got {d}")
    return 2.0 * math.pi ** (0.5 * d) / math.gamma(0.5 * d)


def levy_intensity(params: Params, x, y) -> float:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    r = float(np.linalg.norm(x - y))
    if r == 0.0:
        raise SingularityError("Levy intensity is singular on the diagonal x = y")
    if params.lam is not None and not r < params.lam:
        return 0.0
    return params.jump_weight * normalization_constant(params.d, params.alpha) * r ** (-(params.d + params.alpha))


def untruncated_radial_integral(alpha: float) -> float:
    """``int_0^inf (1 - cos s) s**(-1-alpha) ds``, in closed form."""
    return math.pi / (2.0 * math.gamma(1.0 + alpha) * math.sin(0.5 * math.pi * alpha))


def truncated_radial_integral(alpha: float, upper: float) -> float:
    """``G(L) = int_0^L (1 - cos s) s**(-1-alpha) ds``.

    Below ``L = 1`` the even Taylor series of ``1 - cos`` is integrated term by
    term, which avoids the cancellation near the origin; above it the
    complementary tail is split into its non-oscillatory part (exact) and a
    cosine-weighted Fourier integral.
    """
    if upper <= 0:
        return 0.0
    if upper <= 1.0:
        return _radial_series(alpha, upper)
    tail_cos, _ = integrate.quad(
        lambda s: s ** (-1.0 - alpha), upper, np.inf, weight="cos", wvar=1.0, limlst=200
    )
    tail = upper ** (-alpha) / alpha - tail_cos
    return untruncated_radial_integral(alpha) - tail


def _radial_series(alpha, upper):
    total = 0.0
    log_l = math.log(upper)
    for k in range(1, 40):
        term = math.exp((2 * k - alpha) * log_l - special.gammaln(2 * k + 1)) / (2 * k - alpha)
        total += term if k % 2 else -term
        if term < 1e-18 * abs(total):
            break
    return total


def levy_exponent_truncated(params: Params, xi) -> float:
    """Levy exponent of the stable part truncated at radius ``params.lam``.

    Writes the ball integral in polar form around the direction of ``xi``; the
    radial integral is the one-dimensional function ``G`` above and the
    angular integral is a single integral in ``c = cos(theta)``:

        psi(xi) = 2 A(d, alpha) |S^{d-2}| |xi|^alpha
                  * int_0^1 c^alpha G(lam |xi| c) (1 - c^2)^((d-3)/2) dc.
    """
    if params.lam is None or not math.isfinite(params.lam):
        raise ParameterError("levy_exponent_truncated needs a finite truncation radius")
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    k = float(np.linalg.norm(xi))
    if k == 0.0:
        return 0.0
    d, alpha = params.d, params.alpha
    A = normalization_constant(d, alpha)
    big_l = params.lam * k
    if d == 1:
        return 2.0 * A * k ** alpha * truncated_radial_integral(alpha, big_l)
    integrand = lambda c: c ** alpha * truncated_radial_integral(alpha, big_l * c)
    if d == 3:
        ang, _ = integrate.quad(integrand, 0.0, 1.0, epsabs=0.0, epsrel=1e-12, limit=200)
    else:
        # (1 - c)^((d-3)/2) is carried by the algebraic weight, the (1 + c) factor stays in f
        expo = 0.5 * (d - 3)
        ang, _ = integrate.quad(
            lambda c: integrand(c) * (1.0 + c) ** expo,
            0.0, 1.0, weight="alg", wvar=(0.0, expo), epsabs=0.0, epsrel=1e-12, limit=200,
        )
    return 2.0 * A * sphere_area(d - 1) * k ** alpha * ang


def char_exponent(params: Params, xi) -> float:
    """``|xi|^2 + a^alpha |xi|^alpha``; ``E exp(i xi.X_t) = exp(-t * this)``."""
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    k = float(np.linalg.norm(xi))
    return k * k + params.jump_weight * k ** params.alpha
