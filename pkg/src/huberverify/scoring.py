"""Scoring functions for Huber functionals, quantiles and expectiles.

The complete consistent family for a Huber functional is parameterized by a
convex function phi with left-continuous left derivative; the associated
mixing measure dM = d(phi') weights the one-parameter family of elementary
scores.  ``mixture_quadrature_score`` integrates the elementary scores
against dM on an independent code path and must agree with
``consistent_huber_score`` to high accuracy.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import integrate

from .functionals import HuberParams


def capped(a: float, b: float, x):
    """x capped below by -a and above by b; a and b may be infinite."""
    if a < 0 or b < 0:
        raise ValueError("cap widths must be nonnegative")
    return np.maximum(np.minimum(x, b), -a)


def generalized_huber_loss(params: HuberParams, u):
    """Asymmetric Huber loss: quadratic inside [-a, b], linear outside."""
    u = np.asarray(u, dtype=float)
    alpha, a, b = params.alpha, params.a, params.b
    weight = np.where(u >= 0, 1.0 - alpha, alpha)
    inner = weight * 0.5 * u * u
    upper = (1.0 - alpha) * b * (u - 0.5 * b)
    lower = -alpha * a * (u + 0.5 * a)
    out = np.where(u > b, upper, np.where(u < -a, lower, inner))
    return float(out) if out.ndim == 0 else out


def generalized_huber_loss_derivative(params: HuberParams, u):
    """Derivative of the loss: |1{u>=0} - alpha| * capped(a, b, u)."""
    u = np.asarray(u, dtype=float)
    weight = np.where(u >= 0, 1.0 - params.alpha, params.alpha)
    out = weight * capped(params.a, params.b, u)
    return float(out) if out.ndim == 0 else out


def identification_value(params: HuberParams, x, y):
    """Identification function whose expectation vanishes at the functional."""
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    weight = np.where(x >= y, 1.0 - params.alpha, params.alpha)
    out = weight * capped(params.a, params.b, x - y)
    return float(out) if out.ndim == 0 else out


def tax_rates_to_alpha(r_gain: float, r_loss: float) -> float:
    """Asymmetry level for an invest-iff-forecast-exceeds-threshold rule.

    r_gain taxes profits, r_loss sets the deduction rate on losses; both in
    [0, 1).
    """
    if not (0.0 <= r_gain < 1.0 and 0.0 <= r_loss < 1.0):
        raise ValueError("tax rates must lie in [0, 1)")
    return (1.0 - r_gain) / (2.0 - r_loss - r_gain)


# ---------------------------------------------------------------------------
# convex generators
# ---------------------------------------------------------------------------

class ConvexSpec:
    """A convex function with left derivative and curvature (mixing) measure."""

    def phi(self, t):
        raise NotImplementedError

    def phi_left_deriv(self, t):
        raise NotImplementedError

    def phi_increment(self, u, v):
        """phi(v) - phi(u); subclasses may override for numerical stability."""
        return self.phi(v) - self.phi(u)

    def integrate_pieces(self, pieces):
        """Integral of a piecewise-linear integrand against the mixing measure.

        ``pieces`` is a sequence of (t0, t1, c0, c1) with integrand c0 + c1*t
        on [t0, t1).
        """
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError

    @staticmethod
    def from_dict(spec: dict) -> "ConvexSpec":
        if not isinstance(spec, dict) or "kind" not in spec:
            raise ValueError("convex spec must be a dict with a 'kind' key")
        kind = spec["kind"]
        if kind == "quadratic":
            return Quadratic()
        if kind == "exp":
            return ExponentialConvex(spec["lambda"])
        if kind == "density":
            return PiecewiseDensity(spec["grid"], spec["density"])
        if kind == "points":
            return PointMasses(spec["locations"], spec["masses"])
        if kind == "extremes":
            return ExtremeEmphasis(spec["lo_knee"], spec["hi_knee"])
        raise ValueError(f"unknown convex spec kind {kind!r}")


class Quadratic(ConvexSpec):
    """phi(t) = t^2; mixing density is the constant 2."""

    def phi(self, t):
        t = np.asarray(t, dtype=float)
        return t * t

    def phi_left_deriv(self, t):
        return 2.0 * np.asarray(t, dtype=float)

    def integrate_pieces(self, pieces):
        total = 0.0
        for t0, t1, c0, c1 in pieces:
            total += 2.0 * (c0 * (t1 - t0) + 0.5 * c1 * (t1 * t1 - t0 * t0))
        return total

    def to_dict(self):
        return {"kind": "quadratic"}


class ExponentialConvex(ConvexSpec):
    """phi(t) = 2*exp(lam*t)/lam^2; mixing density 2*exp(lam*t)."""

    def __init__(self, lam: float):
        if lam == 0 or not np.isfinite(lam):
            raise ValueError("lambda must be finite and nonzero")
        self.lam = float(lam)

    def phi(self, t):
        t = np.asarray(t, dtype=float)
        return 2.0 * np.exp(self.lam * t) / (self.lam * self.lam)

    def phi_left_deriv(self, t):
        t = np.asarray(t, dtype=float)
        return 2.0 * np.exp(self.lam * t) / self.lam

    def phi_increment(self, u, v):
        # 2 e^{lam u} expm1(lam (v-u)) / lam^2 avoids cancellation for small lam
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        return 2.0 * np.exp(self.lam * u) * np.expm1(self.lam * (v - u)) \
            / (self.lam * self.lam)

    def integrate_pieces(self, pieces):
        lam = self.lam
        total = 0.0
        for t0, t1, c0, c1 in pieces:
            if t1 <= t0:
                continue
            val, _ = integrate.quad(
                lambda t: (c0 + c1 * t) * 2.0 * math.exp(lam * t),
                t0, t1, epsabs=1e-13, epsrel=1e-12, limit=200)
            total += val
        return total

    def to_dict(self):
        return {"kind": "exp", "lambda": self.lam}


class PiecewiseDensity(ConvexSpec):
    """Curvature given as a step density over a grid (zero outside).

    ``grid`` holds k+1 increasing knots and ``density`` the k nonnegative
    cell values; phi is normalized so phi and its left derivative vanish at
    the first knot.
    """

    def __init__(self, grid, density):
        grid = np.asarray(grid, dtype=float)
        density = np.asarray(density, dtype=float)
        if grid.ndim != 1 or grid.size < 2 or density.shape != (grid.size - 1,):
            raise ValueError("need k+1 grid knots and k density values")
        if np.any(np.diff(grid) <= 0):
            raise ValueError("grid must be strictly increasing")
        if np.any(density < 0) or not np.all(np.isfinite(density)):
            raise ValueError("density values must be nonnegative and finite")
        self.grid = grid
        self.density = density
        widths = np.diff(grid)
        self._deriv_at_knots = np.concatenate([[0.0], np.cumsum(density * widths)])
        cell_phi = self._deriv_at_knots[:-1] * widths + 0.5 * density * widths * widths
        self._phi_at_knots = np.concatenate([[0.0], np.cumsum(cell_phi)])

    def _locate(self, t):
        return np.clip(np.searchsorted(self.grid, t, side="right") - 1,
                       0, self.grid.size - 2)

    def phi_left_deriv(self, t):
        t = np.asarray(t, dtype=float)
        j = self._locate(t)
        inside = self._deriv_at_knots[j] + self.density[j] * (t - self.grid[j])
        out = np.where(t <= self.grid[0], 0.0,
                       np.where(t >= self.grid[-1], self._deriv_at_knots[-1], inside))
        return float(out) if out.ndim == 0 else out

    def phi(self, t):
        t = np.asarray(t, dtype=float)
        j = self._locate(t)
        dt = t - self.grid[j]
        inside = (self._phi_at_knots[j] + self._deriv_at_knots[j] * dt
                  + 0.5 * self.density[j] * dt * dt)
        above = self._phi_at_knots[-1] + self._deriv_at_knots[-1] * (t - self.grid[-1])
        out = np.where(t <= self.grid[0], 0.0,
                       np.where(t >= self.grid[-1], above, inside))
        return float(out) if out.ndim == 0 else out

    def integrate_pieces(self, pieces):
        total = 0.0
        for t0, t1, c0, c1 in pieces:
            lo = max(t0, self.grid[0])
            hi = min(t1, self.grid[-1])
            if hi <= lo:
                continue
            cuts = self.grid[(self.grid > lo) & (self.grid < hi)]
            pts = np.concatenate([[lo], cuts, [hi]])
            cells = self._locate(pts[:-1])
            dens = self.density[cells]
            seg0, seg1 = pts[:-1], pts[1:]
            total += float(np.sum(dens * (c0 * (seg1 - seg0)
                                          + 0.5 * c1 * (seg1 * seg1 - seg0 * seg0))))
        return total

    def to_dict(self):
        return {"kind": "density", "grid": self.grid.tolist(),
                "density": self.density.tolist()}


class PointMasses(ConvexSpec):
    """Discrete mixing measure: phi(t) = sum_k m_k * (t - theta_k)_+."""

    def __init__(self, locations, masses):
        locations = np.asarray(locations, dtype=float)
        masses = np.asarray(masses, dtype=float)
        if locations.ndim != 1 or locations.size == 0 or masses.shape != locations.shape:
            raise ValueError("need matching non-empty location and mass arrays")
        if np.any(masses <= 0) or not np.all(np.isfinite(masses)):
            raise ValueError("masses must be positive and finite")
        order = np.argsort(locations, kind="stable")
        self.locations = locations[order]
        self.masses = masses[order]
        self._cum_mass = np.concatenate([[0.0], np.cumsum(self.masses)])
        self._cum_weighted = np.concatenate(
            [[0.0], np.cumsum(self.masses * self.locations)])

    def phi(self, t):
        t = np.asarray(t, dtype=float)
        idx = np.searchsorted(self.locations, t, side="left")
        out = t * self._cum_mass[idx] - self._cum_weighted[idx]
        return float(out) if out.ndim == 0 else out

    def phi_left_deriv(self, t):
        # left continuous: counts only atoms strictly below t
        t = np.asarray(t, dtype=float)
        idx = np.searchsorted(self.locations, t, side="left")
        out = self._cum_mass[idx]
        return float(out) if out.ndim == 0 else out

    def integrate_pieces(self, pieces):
        total = 0.0
        for t0, t1, c0, c1 in pieces:
            i0 = np.searchsorted(self.locations, t0, side="left")
            i1 = np.searchsorted(self.locations, t1, side="left")
            locs = self.locations[i0:i1]
            total += float(np.sum(self.masses[i0:i1] * (c0 + c1 * locs)))
        return total

    def to_dict(self):
        return {"kind": "points", "locations": self.locations.tolist(),
                "masses": self.masses.tolist()}


class ExtremeEmphasis(ConvexSpec):
    """Curvature 1 between two knees with linear ramps added outside them.

    The mixing density is (lo_knee - t) + 1 below the lower knee, 1 between
    the knees and (t - hi_knee) + 1 above the upper knee, so decision
    thresholds in the tails carry increasing weight.  All pieces integrate
    in closed form.
    """

    def __init__(self, lo_knee: float, hi_knee: float):
        if not (np.isfinite(lo_knee) and np.isfinite(hi_knee) and lo_knee < hi_knee):
            raise ValueError("need finite knees with lo_knee < hi_knee")
        self.lo_knee = float(lo_knee)
        self.hi_knee = float(hi_knee)

    def density(self, t):
        t = np.asarray(t, dtype=float)
        ramp_lo = np.maximum(self.lo_knee - t, 0.0)
        ramp_hi = np.maximum(t - self.hi_knee, 0.0)
        return 1.0 + ramp_lo + ramp_hi

    def phi(self, t):
        t = np.asarray(t, dtype=float)
        base = 0.5 * t * t
        below = np.maximum(self.lo_knee - t, 0.0) ** 3 / 6.0
        above = np.maximum(t - self.hi_knee, 0.0) ** 3 / 6.0
        out = base + below + above
        return float(out) if out.ndim == 0 else out

    def phi_left_deriv(self, t):
        t = np.asarray(t, dtype=float)
        out = (t - 0.5 * np.maximum(self.lo_knee - t, 0.0) ** 2
               + 0.5 * np.maximum(t - self.hi_knee, 0.0) ** 2)
        return float(out) if out.ndim == 0 else out

    def integrate_pieces(self, pieces):
        # integrand and density are both piecewise linear, so each merged
        # segment contributes the exact integral of a quadratic
        total = 0.0
        for t0, t1, c0, c1 in pieces:
            if t1 <= t0:
                continue
            cuts = [k for k in (self.lo_knee, self.hi_knee) if t0 < k < t1]
            pts = [t0] + cuts + [t1]
            for s0, s1 in zip(pts[:-1], pts[1:]):
                mid = 0.5 * (s0 + s1)
                d0, dm, d1 = self.density(np.array([s0, mid, s1]))
                f0 = (c0 + c1 * s0) * d0
                fm = (c0 + c1 * mid) * dm
                f1 = (c0 + c1 * s1) * d1
                total += (s1 - s0) / 6.0 * (f0 + 4.0 * fm + f1)
        return total

    def to_dict(self):
        return {"kind": "extremes", "lo_knee": self.lo_knee, "hi_knee": self.hi_knee}


def extremes_convex_spec(lo_knee: float, hi_knee: float) -> ExtremeEmphasis:
    """Convex spec whose mixing measure grows linearly beyond the two knees."""
    return ExtremeEmphasis(lo_knee, hi_knee)


# ---------------------------------------------------------------------------
# consistent scoring functions
# ---------------------------------------------------------------------------

def consistent_huber_score(spec: ConvexSpec, params: HuberParams, x, y):
    """Consistent score for the Huber functional generated by a convex spec."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    kappa = capped(params.a, params.b, x - y)
    weight = np.where(x >= y, 1.0 - params.alpha, params.alpha)
    out = weight * (spec.phi_increment(kappa + y, y)
                    + kappa * spec.phi_left_deriv(x))
    out = np.maximum(out, 0.0)
    return float(out) if out.ndim == 0 else out


def consistent_quantile_score(spec: ConvexSpec, alpha: float, x, y):
    """Consistent quantile score with nondecreasing g = phi_left_deriv."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    weight = np.where(x >= y, 1.0 - alpha, alpha)
    out = weight * np.abs(spec.phi_left_deriv(x) - spec.phi_left_deriv(y))
    return float(out) if out.ndim == 0 else out


def consistent_expectile_score(spec: ConvexSpec, alpha: float, x, y):
    """Consistent expectile score (asymmetrically weighted Bregman gap)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    weight = np.where(x >= y, 1.0 - alpha, alpha)
    out = weight * (spec.phi_increment(x, y)
                    + (x - y) * spec.phi_left_deriv(x))
    out = np.maximum(out, 0.0)
    return float(out) if out.ndim == 0 else out


def exponential_family_score(lam: float, a: float, x, y):
    """Three-branch exponential-family score for the symmetric Huber mean.

    Consistent for the alpha = 1/2 functional with equal caps a; equals the
    convex-spec path with phi(t) = 2*exp(lam*t)/lam^2.
    """
    if lam == 0 or not np.isfinite(lam):
        raise ValueError("lambda must be finite and nonzero")
    if not a > 0:
        raise ValueError("cap width a must be positive")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    u = x - y
    lam2 = lam * lam
    ex = np.exp(lam * x)
    inner = (np.exp(lam * y) - ex) / lam2 - ex * (y - x) / lam
    over = (np.exp(lam * y) - np.exp(lam * (y + a))) / lam2 + a * ex / lam
    under = (np.exp(lam * y) - np.exp(lam * (y - a))) / lam2 - a * ex / lam
    out = np.where(u > a, over, np.where(u < -a, under, inner))
    out = np.maximum(out, 0.0)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# elementary scores
# ---------------------------------------------------------------------------

def elementary_huber_score(alpha: float, a: float, b: float, theta, x, y,
                           left_limit: bool = False):
    """Elementary score at decision threshold theta, capped at a and b.

    Right-continuous in theta; ``left_limit`` evaluates the limit from below
    (branch conditions swap their open and closed ends).
    """
    theta = np.asarray(theta, dtype=float)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if left_limit:
        over = (y < theta) & (theta <= x)
        under = (x < theta) & (theta <= y)
    else:
        over = (y <= theta) & (theta < x)
        under = (x <= theta) & (theta < y)
    out = np.where(over, (1.0 - alpha) * np.minimum(theta - y, b),
                   np.where(under, alpha * np.minimum(y - theta, a), 0.0))
    return float(out) if out.ndim == 0 else out


def elementary_quantile_score(alpha: float, theta, x, y, left_limit: bool = False):
    """Elementary quantile score: constant loss on the wrong side of theta."""
    theta = np.asarray(theta, dtype=float)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if left_limit:
        over = (y < theta) & (theta <= x)
        under = (x < theta) & (theta <= y)
    else:
        over = (y <= theta) & (theta < x)
        under = (x <= theta) & (theta < y)
    out = np.where(over, 1.0 - alpha, np.where(under, alpha, 0.0))
    return float(out) if out.ndim == 0 else out


def elementary_expectile_score(alpha: float, theta, x, y, left_limit: bool = False):
    """Elementary expectile score: linear loss |theta - y| on the wrong side."""
    theta = np.asarray(theta, dtype=float)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if left_limit:
        over = (y < theta) & (theta <= x)
        under = (x < theta) & (theta <= y)
    else:
        over = (y <= theta) & (theta < x)
        under = (x <= theta) & (theta < y)
    out = np.where(over, (1.0 - alpha) * np.abs(theta - y),
                   np.where(under, alpha * np.abs(theta - y), 0.0))
    return float(out) if out.ndim == 0 else out


def _elementary_pieces(alpha: float, a: float, b: float, x: float, y: float):
    """Linear pieces (t0, t1, c0, c1) of theta -> elementary score at (x, y)."""
    pieces = []
    if x > y:
        w = 1.0 - alpha
        bend = min(x, y + b)
        if bend > y:
            pieces.append((y, bend, -w * y, w))          # w * (theta - y)
        if x > y + b:
            pieces.append((y + b, x, w * b, 0.0))        # saturated at w * b
    elif x < y:
        w = alpha
        bend = max(x, y - a)
        if x < y - a:
            pieces.append((x, y - a, w * a, 0.0))        # saturated at w * a
        if bend < y:
            pieces.append((bend, y, w * y, -w))          # w * (y - theta)
    return pieces


def mixture_quadrature_score(spec: ConvexSpec, params: HuberParams, x: float,
                             y: float) -> float:
    """Integral of elementary scores against the spec's mixing measure.

    Exact piecewise integration for constant, stepped, discrete and
    ramp mixing densities; adaptive quadrature for the exponential family.
    Agrees with ``consistent_huber_score`` by the mixture representation.
    """
    pieces = _elementary_pieces(params.alpha, params.a, params.b,
                                float(x), float(y))
    if not pieces:
        return 0.0
    return float(spec.integrate_pieces(pieces))


# ---------------------------------------------------------------------------
# vectorized score factories used by the verification layer
# ---------------------------------------------------------------------------

def squared_error(x, y):
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    out = np.square(x - y)
    return float(out) if out.ndim == 0 else out


def absolute_error(x, y):
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    out = np.abs(x - y)
    return float(out) if out.ndim == 0 else out


def huber_loss_fn(params: HuberParams):
    """Score callable (x, y) -> generalized Huber loss of the error x - y."""

    def score(x, y):
        return generalized_huber_loss(params, np.asarray(x, dtype=float)
                                      - np.asarray(y, dtype=float))

    return score


def consistent_huber_fn(spec: ConvexSpec, params: HuberParams):
    def score(x, y):
        return consistent_huber_score(spec, params, x, y)

    return score


def elementary_huber_fn(alpha: float, a: float, b: float, theta: float):
    def score(x, y):
        return elementary_huber_score(alpha, a, b, theta, x, y)

    return score
