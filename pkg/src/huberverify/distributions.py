"""Probability distributions with exact CDF sub-interval integration.

Every distribution exposes the small surface needed by the functional and
scoring machinery: ``cdf``, its left limit, ``cdf_integral`` (the integral
of the CDF over a finite interval), the support range, the mean and seeded
sampling.  Step and piecewise-linear CDFs integrate in closed form; the
parametric families use closed-form antiderivatives where they exist and
adaptive quadrature (absolute tolerance 1e-10) otherwise.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import integrate
from scipy.special import betainc, betaincinv, ndtr, ndtri, owens_t

_QUAD_ABS_TOL = 1e-10
_SQRT_2PI = math.sqrt(2.0 * math.pi)


def _norm_pdf(z):
    return np.exp(-0.5 * np.square(z)) / _SQRT_2PI


def _check_finite(t, name="t"):
    t = np.asarray(t, dtype=float)
    if not np.all(np.isfinite(t)):
        raise ValueError(f"{name} must be finite")
    return t


# ---------------------------------------------------------------------------
# standard skew normal helpers (shared with the vectorized functional solvers)
# ---------------------------------------------------------------------------

def sn_std_cdf(z, shape):
    """CDF of the standard skew normal: Phi(z) - 2*T(z, shape).

    Clipped to [0, 1]: the two terms cancel in the far tails and can leave
    residues of order 1e-18 with either sign.
    """
    return np.clip(ndtr(z) - 2.0 * owens_t(z, shape), 0.0, 1.0)


def sn_std_cdf_antideriv(z, shape):
    """Antiderivative A(z) of the standard skew-normal CDF with A(-inf) = 0.

    A(z) = z*F(z) - M(z) where M(z) is the lower partial first moment
    -2*phi(z)*Phi(shape*z) + 2*shape/sqrt(2*pi*(1+shape^2)) * Phi(z*sqrt(1+shape^2)).
    """
    z = np.asarray(z, dtype=float)
    shape = np.asarray(shape, dtype=float)
    root = np.sqrt(1.0 + shape * shape)
    partial_moment = (-2.0 * _norm_pdf(z) * ndtr(shape * z)
                      + 2.0 * shape / (_SQRT_2PI * root) * ndtr(z * root))
    return z * sn_std_cdf(z, shape) - partial_moment


def sn_std_mean(shape):
    """Mean of the standard skew normal."""
    shape = np.asarray(shape, dtype=float)
    delta = shape / np.sqrt(1.0 + shape * shape)
    return delta * math.sqrt(2.0 / math.pi)


class Distribution:
    """Base class: an immutable distribution on an interval of the real line."""

    def cdf(self, t):
        raise NotImplementedError

    def cdf_left(self, t):
        """Left limit of the CDF; equals ``cdf`` for continuous distributions."""
        return self.cdf(t)

    def cdf_integral(self, lo: float, hi: float) -> float:
        """Integral of the CDF over [lo, hi] (both finite, lo <= hi)."""
        raise NotImplementedError

    def support(self) -> tuple[float, float]:
        """Smallest closed interval containing the support; endpoints may be inf."""
        raise NotImplementedError

    def mean(self) -> float:
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """n i.i.d. draws; identical generator state gives identical output."""
        raise NotImplementedError

    # --- helpers used by the functionals module -------------------------

    def lower_partial(self, x: float) -> float:
        """Integral of the CDF over (-inf, x]; requires a finite value."""
        lo, _ = self.support()
        if math.isinf(lo):
            raise NotImplementedError(
                f"{type(self).__name__} needs an explicit lower_partial")
        return self.cdf_integral(min(lo, x), x)

    def quantile_bounds(self, alpha: float) -> tuple[float, float]:
        """Endpoints of the closed interval of alpha-quantiles."""
        return _quantile_by_bisection(self, alpha)

    def _validate_integral_args(self, lo, hi):
        if not (np.isfinite(lo) and np.isfinite(hi)):
            raise ValueError("integration limits must be finite")
        if lo > hi:
            raise ValueError(f"lower limit {lo} exceeds upper limit {hi}")


def _quantile_by_bisection(dist, alpha, tol=1e-11):
    lo, hi = dist.support()
    left, right = _finite_bracket(dist, lo, hi)
    # smallest x with F(x) >= alpha
    q_lo = _bisect_predicate(lambda x: dist.cdf(x) >= alpha, left, right, tol)
    # largest x with F(x-) <= alpha
    q_hi = _bisect_predicate(lambda x: not (dist.cdf_left(x) <= alpha), left, right, tol)
    return min(q_lo, q_hi), max(q_lo, q_hi)


def _finite_bracket(dist, lo, hi):
    left = lo if math.isfinite(lo) else -1.0
    right = hi if math.isfinite(hi) else 1.0
    width = 1.0
    while not math.isfinite(lo) and dist.cdf(left) > 1e-15:
        left -= width
        width *= 2.0
    width = 1.0
    while not math.isfinite(hi) and dist.cdf(right) < 1.0 - 1e-15:
        right += width
        width *= 2.0
    return left, right


def _bisect_predicate(pred, lo, hi, tol):
    """Smallest point where the monotone predicate flips False -> True."""
    if pred(lo):
        return lo
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if pred(mid):
            hi = mid
        else:
            lo = mid
    return hi


class EmpiricalSample(Distribution):
    """Right-continuous weighted step CDF from a finite sample.

    Tied values are merged by summing their weights; weights are normalized
    to sum to one.  All integrals are exact sums over the steps.
    """

    def __init__(self, values, weights=None):
        values = np.asarray(values, dtype=float)
        if values.ndim != 1 or values.size == 0:
            raise ValueError("values must be a non-empty 1-d array")
        if not np.all(np.isfinite(values)):
            raise ValueError("values must be finite")
        if weights is None:
            weights = np.full(values.size, 1.0 / values.size)
        else:
            weights = np.asarray(weights, dtype=float)
            if weights.shape != values.shape:
                raise ValueError("weights must match values")
            if np.any(weights <= 0) or not np.all(np.isfinite(weights)):
                raise ValueError("weights must be positive and finite")
            weights = weights / weights.sum()
        order = np.argsort(values, kind="stable")
        values, weights = values[order], weights[order]
        uniq, inverse = np.unique(values, return_inverse=True)
        merged = np.zeros(uniq.size)
        np.add.at(merged, inverse, weights)
        self.values = uniq
        self.weights = merged
        self._cumw = np.cumsum(merged)
        self._cumw[-1] = 1.0

    def cdf(self, t):
        t = _check_finite(t)
        idx = np.searchsorted(self.values, t, side="right")
        out = np.where(idx > 0, self._cumw[np.maximum(idx - 1, 0)], 0.0)
        return float(out) if out.ndim == 0 else out

    def cdf_left(self, t):
        t = _check_finite(t)
        idx = np.searchsorted(self.values, t, side="left")
        out = np.where(idx > 0, self._cumw[np.maximum(idx - 1, 0)], 0.0)
        return float(out) if out.ndim == 0 else out

    def cdf_integral(self, lo, hi):
        self._validate_integral_args(lo, hi)
        inner = self.values[(self.values > lo) & (self.values < hi)]
        pts = np.concatenate([[lo], inner, [hi]])
        heights = self.cdf(pts[:-1])
        return float(np.sum(np.atleast_1d(heights) * np.diff(pts)))

    def support(self):
        return float(self.values[0]), float(self.values[-1])

    def mean(self):
        return float(np.dot(self.values, self.weights))

    def sample(self, rng, n):
        return rng.choice(self.values, size=n, p=self.weights)

    def quantile_bounds(self, alpha):
        idx = int(np.searchsorted(self._cumw, alpha, side="left"))
        lo = self.values[idx]
        if idx + 1 < self.values.size and self._cumw[idx] == alpha:
            return float(lo), float(self.values[idx + 1])
        return float(lo), float(lo)


class PiecewiseLinearCdf(Distribution):
    """CDF interpolated linearly between knots (t_i, F_i).

    Knot abscissae are strictly increasing, F values nondecreasing in [0, 1]
    with F at the last knot equal to 1.  A positive F at the first knot
    represents an atom there.
    """

    def __init__(self, knots_t, knots_f):
        t = np.asarray(knots_t, dtype=float)
        f = np.asarray(knots_f, dtype=float)
        if t.ndim != 1 or t.size < 2 or t.shape != f.shape:
            raise ValueError("need matching 1-d arrays with at least two knots")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(f))):
            raise ValueError("knots must be finite")
        if np.any(np.diff(t) <= 0):
            raise ValueError("knot abscissae must be strictly increasing")
        if np.any(np.diff(f) < 0) or f[0] < 0 or f[-1] != 1.0:
            raise ValueError("F values must be nondecreasing, in [0,1], ending at 1")
        self.knots_t = t
        self.knots_f = f

    def cdf(self, t):
        t = _check_finite(t)
        out = np.interp(t, self.knots_t, self.knots_f, left=0.0, right=1.0)
        return float(out) if np.ndim(t) == 0 else out

    def cdf_left(self, t):
        t = _check_finite(t)
        out = np.interp(t, self.knots_t, self.knots_f, left=0.0, right=1.0)
        out = np.where(t == self.knots_t[0], 0.0, out)
        return float(out) if np.ndim(t) == 0 else out

    def cdf_integral(self, lo, hi):
        self._validate_integral_args(lo, hi)
        t0, t1 = self.knots_t[0], self.knots_t[-1]
        total = max(0.0, hi - max(lo, t1))  # region where F = 1
        l, u = max(lo, t0), min(hi, t1)
        if l < u:
            inner = self.knots_t[(self.knots_t > l) & (self.knots_t < u)]
            pts = np.concatenate([[l], inner, [u]])
            vals = self.cdf(pts)
            total += float(np.sum(0.5 * (vals[1:] + vals[:-1]) * np.diff(pts)))
        return total

    def support(self):
        return float(self.knots_t[0]), float(self.knots_t[-1])

    def mean(self):
        # E[Y] = t1 - integral of F over the support
        return float(self.knots_t[-1] - self.cdf_integral(*self.support()))

    def sample(self, rng, n):
        u = rng.random(n)
        atom = self.knots_f[0]
        out = np.interp(u, self.knots_f, self.knots_t)
        return np.where(u <= atom, self.knots_t[0], out)

    def quantile_bounds(self, alpha):
        f, t = self.knots_f, self.knots_t
        if alpha <= f[0]:
            lo = float(t[0])
        else:
            j = int(np.searchsorted(f, alpha, side="left"))
            lo = float(t[j - 1] + (alpha - f[j - 1]) / (f[j] - f[j - 1])
                       * (t[j] - t[j - 1]))
        k = int(np.searchsorted(f, alpha, side="right")) - 1
        hi = float(t[k]) if k >= 0 and f[k] == alpha else lo
        return lo, max(lo, hi)


class Normal(Distribution):
    def __init__(self, mu: float, sigma: float):
        if not (sigma > 0 and np.isfinite(sigma) and np.isfinite(mu)):
            raise ValueError("require finite mu and sigma > 0")
        self.mu = float(mu)
        self.sigma = float(sigma)

    def cdf(self, t):
        t = _check_finite(t)
        return ndtr((t - self.mu) / self.sigma)

    def cdf_integral(self, lo, hi):
        self._validate_integral_args(lo, hi)

        def antideriv(z):
            return z * ndtr(z) + _norm_pdf(z)

        zl, zu = (lo - self.mu) / self.sigma, (hi - self.mu) / self.sigma
        return float(self.sigma * (antideriv(zu) - antideriv(zl)))

    def support(self):
        return -math.inf, math.inf

    def mean(self):
        return self.mu

    def sample(self, rng, n):
        return self.mu + self.sigma * rng.standard_normal(n)

    def lower_partial(self, x):
        z = (x - self.mu) / self.sigma
        return float(self.sigma * (z * ndtr(z) + _norm_pdf(z)))

    def quantile_bounds(self, alpha):
        q = self.mu + self.sigma * float(ndtri(alpha))
        return q, q


class SkewNormal(Distribution):
    """Skew normal with location xi, scale omega and shape nu.

    The CDF is Phi(z) - 2*T(z, nu) with Owen's T; integrals of the CDF use
    the closed-form lower partial moment, and sampling uses the exact
    two-normal construction delta*|Z1| + sqrt(1-delta^2)*Z2.
    """

    def __init__(self, xi: float, omega: float, nu: float):
        if not (omega > 0 and np.isfinite(omega) and np.isfinite(xi) and np.isfinite(nu)):
            raise ValueError("require finite parameters with omega > 0")
        self.xi = float(xi)
        self.omega = float(omega)
        self.nu = float(nu)

    def _std(self, t):
        return (np.asarray(t, dtype=float) - self.xi) / self.omega

    def cdf(self, t):
        t = _check_finite(t)
        out = sn_std_cdf(self._std(t), self.nu)
        return float(out) if np.ndim(t) == 0 else out

    def cdf_integral(self, lo, hi):
        self._validate_integral_args(lo, hi)
        a = sn_std_cdf_antideriv(np.array([self._std(lo), self._std(hi)]), self.nu)
        return float(self.omega * (a[1] - a[0]))

    def support(self):
        return -math.inf, math.inf

    def mean(self):
        return self.xi + self.omega * float(sn_std_mean(self.nu))

    def sample(self, rng, n):
        delta = self.nu / math.sqrt(1.0 + self.nu * self.nu)
        z1 = rng.standard_normal(n)
        z2 = rng.standard_normal(n)
        z = delta * np.abs(z1) + math.sqrt(1.0 - delta * delta) * z2
        return self.xi + self.omega * z

    def lower_partial(self, x):
        return float(self.omega * sn_std_cdf_antideriv(self._std(x), self.nu))

    def quantile_bounds(self, alpha):
        z = _bisect_predicate(lambda s: sn_std_cdf(s, self.nu) >= alpha,
                              -16.0, 16.0, 1e-13)
        q = self.xi + self.omega * z
        return q, q


class Exponential(Distribution):
    def __init__(self, rate: float):
        if not (rate > 0 and np.isfinite(rate)):
            raise ValueError("require rate > 0")
        self.rate = float(rate)

    def cdf(self, t):
        t = _check_finite(t)
        out = np.where(t < 0, 0.0, -np.expm1(-self.rate * np.maximum(t, 0.0)))
        return float(out) if np.ndim(t) == 0 else out

    def cdf_integral(self, lo, hi):
        self._validate_integral_args(lo, hi)
        l = max(lo, 0.0)
        if l >= hi:
            return 0.0
        return float((hi - l) + (math.exp(-self.rate * hi)
                                 - math.exp(-self.rate * l)) / self.rate)

    def support(self):
        return 0.0, math.inf

    def mean(self):
        return 1.0 / self.rate

    def sample(self, rng, n):
        return rng.exponential(scale=1.0 / self.rate, size=n)

    def quantile_bounds(self, alpha):
        q = -math.log1p(-alpha) / self.rate
        return q, q


class Beta(Distribution):
    def __init__(self, r: float, s: float):
        if not (r > 0 and s > 0 and np.isfinite(r) and np.isfinite(s)):
            raise ValueError("require shape parameters r > 0 and s > 0")
        self.r = float(r)
        self.s = float(s)

    def cdf(self, t):
        t = _check_finite(t)
        out = betainc(self.r, self.s, np.clip(t, 0.0, 1.0))
        return float(out) if np.ndim(t) == 0 else out

    def _antideriv(self, x):
        # integral of the CDF from 0 to x, exact via the partial-moment identity
        if x <= 0.0:
            return 0.0
        mu = self.r / (self.r + self.s)
        xc = min(x, 1.0)
        val = xc * betainc(self.r, self.s, xc) - mu * betainc(self.r + 1.0, self.s, xc)
        if x > 1.0:
            val += x - 1.0
        return float(val)

    def cdf_integral(self, lo, hi):
        self._validate_integral_args(lo, hi)
        return self._antideriv(hi) - self._antideriv(lo)

    def support(self):
        return 0.0, 1.0

    def mean(self):
        return self.r / (self.r + self.s)

    def sample(self, rng, n):
        return rng.beta(self.r, self.s, size=n)

    def quantile_bounds(self, alpha):
        q = float(betaincinv(self.r, self.s, alpha))
        return q, q


class ContaminatedSum(Distribution):
    """Distribution of X + scale*U*V: base draws plus occasional positive spikes.

    U is Bernoulli(spike_prob) and V exponential with the given rate.  The CDF
    mixes the base CDF with its convolution against the spike law; the
    convolution integrals use adaptive quadrature.
    """

    def __init__(self, base: Distribution, spike_prob: float,
                 spike_scale: float, spike_rate: float):
        if not (0.0 <= spike_prob <= 1.0):
            raise ValueError("spike_prob must lie in [0, 1]")
        if not (spike_scale > 0 and spike_rate > 0):
            raise ValueError("spike scale and rate must be positive")
        self.base = base
        self.spike_prob = float(spike_prob)
        self.spike_scale = float(spike_scale)
        self.spike_rate = float(spike_rate)

    def _spiked_expectation(self, fn):
        # E_V[fn(scale*V)] with V ~ Exp(rate)
        lam = self.spike_rate
        val, _ = integrate.quad(
            lambda v: fn(self.spike_scale * v) * lam * math.exp(-lam * v),
            0.0, np.inf, epsabs=_QUAD_ABS_TOL, limit=200)
        return val

    def cdf(self, t):
        t = _check_finite(t)
        if np.ndim(t) > 0:
            return np.array([self.cdf(float(s)) for s in t])
        t = float(t)
        clean = self.base.cdf(t)
        if self.spike_prob == 0.0:
            return float(clean)
        spiked = self._spiked_expectation(lambda s: self.base.cdf(t - s))
        return float((1.0 - self.spike_prob) * clean + self.spike_prob * spiked)

    def cdf_left(self, t):
        t = float(_check_finite(t))
        clean = self.base.cdf_left(t)
        if self.spike_prob == 0.0:
            return float(clean)
        spiked = self._spiked_expectation(lambda s: self.base.cdf(t - s))
        return float((1.0 - self.spike_prob) * clean + self.spike_prob * spiked)

    def cdf_integral(self, lo, hi):
        self._validate_integral_args(lo, hi)
        clean = self.base.cdf_integral(lo, hi)
        if self.spike_prob == 0.0:
            return clean
        spiked = self._spiked_expectation(
            lambda s: self.base.cdf_integral(lo - s, hi - s))
        return (1.0 - self.spike_prob) * clean + self.spike_prob * spiked

    def support(self):
        lo, hi = self.base.support()
        if self.spike_prob > 0.0:
            hi = math.inf
        return lo, hi

    def mean(self):
        return self.base.mean() + self.spike_prob * self.spike_scale / self.spike_rate

    def sample(self, rng, n):
        draws = self.base.sample(rng, n)
        spikes = (rng.random(n) < self.spike_prob) * \
            self.spike_scale * rng.exponential(1.0, n) / self.spike_rate
        return draws + spikes

    def lower_partial(self, x):
        clean = self.base.lower_partial(x)
        if self.spike_prob == 0.0:
            return clean
        spiked = self._spiked_expectation(lambda s: self.base.lower_partial(x - s))
        return (1.0 - self.spike_prob) * clean + self.spike_prob * spiked


# ---------------------------------------------------------------------------
# construction from JSON-style specs and delimited files
# ---------------------------------------------------------------------------

def from_spec(spec: dict) -> Distribution:
    """Build a distribution from a JSON-style dict, e.g. {"kind": "normal", ...}."""
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ValueError("distribution spec must be a dict with a 'kind' key")
    kind = spec["kind"]
    if kind == "empirical":
        return EmpiricalSample(spec["values"], spec.get("weights"))
    if kind == "cdf":
        return PiecewiseLinearCdf(spec["t"], spec["F"])
    if kind == "normal":
        return Normal(spec["mu"], spec["sigma"])
    if kind == "skewnormal":
        return SkewNormal(spec["xi"], spec["omega"], spec["nu"])
    if kind == "exponential":
        return Exponential(spec["rate"])
    if kind == "beta":
        return Beta(spec["r"], spec["s"])
    if kind == "contaminated":
        return ContaminatedSum(from_spec(spec["base"]), spec["spike_prob"],
                               spec["spike_scale"], spec["spike_rate"])
    raise ValueError(f"unknown distribution kind {kind!r}")


def load_sample_file(path) -> EmpiricalSample:
    """One numeric column (optionally comma separated) -> empirical distribution."""
    values = np.loadtxt(path, delimiter=None if str(path).endswith(".txt") else ",",
                        ndmin=1)
    return EmpiricalSample(np.ravel(values))


def load_cdf_file(path) -> PiecewiseLinearCdf:
    """Two-column CSV of (t, F) knots with strictly increasing t."""
    data = np.loadtxt(path, delimiter=",", ndmin=2)
    if data.shape[1] != 2:
        raise ValueError("piecewise CDF file must have exactly two columns")
    return PiecewiseLinearCdf(data[:, 0], data[:, 1])
