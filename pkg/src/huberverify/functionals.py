"""Huber functionals, quantiles and expectiles of a distribution.

The Huber functional is computed as the zero interval of the continuous
nondecreasing balance function

    u -> (1-alpha) * int_{u-b}^{u} F  -  alpha * int_{u}^{u+a} (1-F),

located by two bisections (one for each endpoint).  Vectorized solvers for
skew-normal families back the Monte-Carlo study in :mod:`simulation`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .distributions import (Distribution, sn_std_cdf, sn_std_cdf_antideriv,
                            sn_std_mean)


class BracketingError(RuntimeError):
    """No sign change found while expanding a root bracket."""


@dataclass(frozen=True)
class HuberParams:
    """Asymmetry level alpha in (0,1) and cap widths a, b > 0."""

    alpha: float
    a: float
    b: float

    def __post_init__(self):
        if not (0.0 < self.alpha < 1.0):
            raise ValueError(f"alpha must lie strictly in (0,1), got {self.alpha}")
        if not (self.a > 0 and self.b > 0 and np.isfinite(self.a) and np.isfinite(self.b)):
            raise ValueError("cap widths a and b must be positive and finite")

    @classmethod
    def symmetric(cls, alpha: float, a: float) -> "HuberParams":
        """Equal caps on both sides (the plain tuning-parameter case)."""
        return cls(alpha, a, a)


@dataclass(frozen=True)
class FunctionalInterval:
    """Closed interval of functional values; single valued when lo == hi."""

    lo: float
    hi: float

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError("interval endpoints out of order")

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lo + self.hi)

    @property
    def width(self) -> float:
        return self.hi - self.lo


def huber_balance(dist: Distribution, params: HuberParams, u: float) -> float:
    """Balance function whose zero set is the Huber functional.

    Continuous and nondecreasing in u; negative left of the functional and
    positive right of it.
    """
    if not np.isfinite(u):
        raise ValueError("u must be finite")
    alpha, a, b = params.alpha, params.a, params.b
    below = dist.cdf_integral(u - b, u)
    above = a - dist.cdf_integral(u, u + a)   # integral of 1-F over [u, u+a]
    return (1.0 - alpha) * below - alpha * above


def _bracket(dist, params):
    """Interval with a strictly negative and strictly positive balance value."""
    lo, hi = dist.support()
    if math.isfinite(lo):
        left = lo - params.a - 1.0
    else:
        left = -1.0
    if math.isfinite(hi):
        right = hi + params.b + 1.0
    else:
        right = 1.0
    step = 1.0
    for _ in range(200):
        if huber_balance(dist, params, left) < 0.0:
            break
        left -= step
        step *= 2.0
    else:
        raise BracketingError("no negative balance value found")
    step = 1.0
    for _ in range(200):
        if huber_balance(dist, params, right) > 0.0:
            break
        right += step
        step *= 2.0
    else:
        raise BracketingError("no positive balance value found")
    return left, right


def huber_functional(dist: Distribution, params: HuberParams,
                     tol: float | None = None) -> FunctionalInterval:
    """Zero interval [c, d] of the balance function.

    c is the supremum of points with negative balance and d the infimum of
    points with positive balance, each located by bisection to within tol.
    """
    left, right = _bracket(dist, params)
    if tol is None:
        lo_s, hi_s = dist.support()
        width = (hi_s - lo_s) if (math.isfinite(lo_s) and math.isfinite(hi_s)) \
            else (right - left)
        tol = 1e-9 * max(1.0, width)

    # rounding in the two area terms leaves residues of order 1e-16 * caps on
    # genuine plateaus of the balance function; snap those to an exact zero so
    # both bisections classify plateau points consistently
    g_eps = 1e-12 * max(1.0, params.alpha * params.a
                        + (1.0 - params.alpha) * params.b)

    def g(u):
        value = huber_balance(dist, params, u)
        return 0.0 if abs(value) <= g_eps else value

    # endpoint c: boundary between g < 0 and g >= 0
    lo, hi = left, right
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if g(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    c = 0.5 * (lo + hi)

    # endpoint d: boundary between g <= 0 and g > 0
    lo, hi = left, right
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if g(mid) > 0.0:
            hi = mid
        else:
            lo = mid
    d = 0.5 * (lo + hi)

    return FunctionalInterval(min(c, d), max(c, d))


def quantile(dist: Distribution, alpha: float) -> FunctionalInterval:
    """Closed interval of alpha-quantiles."""
    if not (0.0 < alpha < 1.0):
        raise ValueError(f"alpha must lie strictly in (0,1), got {alpha}")
    lo, hi = dist.quantile_bounds(alpha)
    return FunctionalInterval(lo, hi)


def expectile(dist: Distribution, alpha: float, tol: float = 1e-9) -> float:
    """Unique solution of the asymmetric partial-moment balance equation."""
    if not (0.0 < alpha < 1.0):
        raise ValueError(f"alpha must lie strictly in (0,1), got {alpha}")
    if tol <= 0:
        raise ValueError("tol must be positive")
    mu = dist.mean()
    if not np.isfinite(mu):
        raise BracketingError("first moment is not finite")

    def residual(x):
        lower = dist.lower_partial(x)
        upper = mu - x + lower        # integral of 1-F over [x, inf)
        return alpha * upper - (1.0 - alpha) * lower

    # residual is strictly decreasing; expand a bracket around the mean
    left = right = mu
    step = 1.0
    for _ in range(200):
        if residual(left) > 0.0:
            break
        left -= step
        step *= 2.0
    else:
        raise BracketingError("failed to bracket the expectile from below")
    step = 1.0
    for _ in range(200):
        if residual(right) < 0.0:
            break
        right += step
        step *= 2.0
    else:
        raise BracketingError("failed to bracket the expectile from above")
    while right - left > tol:
        mid = 0.5 * (left + right)
        if residual(mid) > 0.0:
            left = mid
        else:
            right = mid
    return 0.5 * (left + right)


# ---------------------------------------------------------------------------
# vectorized skew-normal solvers (exact closed-form CDF integrals inside a
# data-parallel bisection; used per day by the Monte-Carlo study)
# ---------------------------------------------------------------------------

def skew_normal_mean(xi, omega, nu):
    """Mean of SkewNormal(xi, omega, nu), elementwise."""
    xi, omega, nu = np.broadcast_arrays(*map(np.asarray, (xi, omega, nu)))
    return xi + omega * sn_std_mean(nu)


def _bisect_arrays(fn, lo, hi, iterations):
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        high_side = fn(mid) >= 0.0
        hi = np.where(high_side, mid, hi)
        lo = np.where(high_side, lo, mid)
    return 0.5 * (lo + hi)


def skew_normal_median(xi, omega, nu, tol: float = 1e-8):
    """Median of SkewNormal(xi, omega, nu), elementwise."""
    xi = np.asarray(xi, dtype=float)
    omega = np.asarray(omega, dtype=float)
    nu = np.asarray(nu, dtype=float)
    lo = np.full(np.broadcast(xi, omega, nu).shape, -2.0)
    hi = -lo
    iterations = int(math.ceil(math.log2(4.0 / tol)))
    z = _bisect_arrays(lambda m: sn_std_cdf(m, nu) - 0.5, lo, hi, iterations)
    return xi + omega * z


def skew_normal_huber_mean(xi, omega, nu, a, tol: float = 1e-8):
    """Symmetric Huber functional H_{a,a} at alpha=1/2 of SkewNormal, elementwise.

    Standardized form: solve A(z+s) - A(z-s) = s with s = a/omega, where A is
    the antiderivative of the standard skew-normal CDF.  The solution is unique
    because the standard CDF is strictly increasing.
    """
    xi = np.asarray(xi, dtype=float)
    omega = np.asarray(omega, dtype=float)
    nu = np.asarray(nu, dtype=float)
    s = np.broadcast_to(np.asarray(a, dtype=float) / omega,
                        np.broadcast(xi, omega, nu).shape).astype(float)

    def balance(z):
        return (sn_std_cdf_antideriv(z + s, nu)
                - sn_std_cdf_antideriv(z - s, nu) - s)

    lo = np.full(s.shape, -8.0)
    hi = -lo
    # expand the few elements (if any) whose bracket misses a sign change
    for _ in range(60):
        bad = balance(lo) >= 0.0
        if not np.any(bad):
            break
        lo = np.where(bad, 2.0 * lo, lo)
    for _ in range(60):
        bad = balance(hi) <= 0.0
        if not np.any(bad):
            break
        hi = np.where(bad, 2.0 * hi, hi)
    iterations = int(math.ceil(math.log2(float(np.max(hi - lo)) / tol)))
    z = _bisect_arrays(balance, lo, hi, iterations)
    return xi + omega * z
