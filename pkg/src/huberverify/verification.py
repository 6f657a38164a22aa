"""Scoring forecast series: mean scores, predictive-performance tests,
Murphy diagrams on the exact decision-threshold grid, dominance checks and
skill scores.

Successive forecast cases are treated as independent (no autocorrelation
correction of the test variance) and p-values use the standard normal
reference.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr

from .functionals import HuberParams
from .scoring import elementary_huber_score

AT = "at"
LEFT = "left"


class DegenerateTestError(RuntimeError):
    """Score differentials carry no variance; the test statistic is undefined."""


@dataclass
class ForecastDataset:
    """Observations plus one or more named forecast series of equal length."""

    observations: np.ndarray
    sources: dict[str, np.ndarray]

    def __post_init__(self):
        y = np.asarray(self.observations, dtype=float)
        if y.ndim != 1 or y.size == 0:
            raise ValueError("observations must be a non-empty 1-d array")
        if not np.all(np.isfinite(y)):
            raise ValueError("observations must be finite")
        if not self.sources:
            raise ValueError("at least one forecast source is required")
        clean = {}
        for name, series in self.sources.items():
            series = np.asarray(series, dtype=float)
            if series.shape != y.shape:
                raise ValueError(f"source {name!r} length differs from observations")
            if not np.all(np.isfinite(series)):
                raise ValueError(f"source {name!r} contains non-finite values")
            clean[name] = series
        self.observations = y
        self.sources = clean

    @property
    def n(self) -> int:
        return self.observations.size

    def source(self, name: str) -> np.ndarray:
        if name not in self.sources:
            raise KeyError(f"unknown forecast source {name!r}")
        return self.sources[name]

    @classmethod
    def from_csv(cls, path, observation_column: str = "y") -> "ForecastDataset":
        """Header row required; the ``y`` column holds observations and every
        other column is a forecast source."""
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if not header:
                raise ValueError("CSV file is empty")
            rows = [[float(cell) for cell in row] for row in reader if row]
        if observation_column not in header:
            raise ValueError(f"CSV must contain a {observation_column!r} column")
        data = np.asarray(rows, dtype=float)
        if data.size == 0:
            raise ValueError("CSV contains no data rows")
        cols = {name: data[:, j] for j, name in enumerate(header)}
        y = cols.pop(observation_column)
        return cls(observations=y, sources=cols)


def mean_score(dataset: ForecastDataset, source: str, score_fn) -> float:
    """Mean of score_fn(forecast, observation) over all cases."""
    x = dataset.source(source)
    return float(np.mean(score_fn(x, dataset.observations)))


def dm_statistic(scores_a: np.ndarray, scores_b: np.ndarray):
    """Test statistic sqrt(n) * mean(d) / sqrt(mean(d^2)) for d = S_A - S_B.

    Supports batches: with 2-d inputs the statistic is taken along the last
    axis.  Returns (t, scale) where scale is the root mean square of d.
    """
    d = np.asarray(scores_a, dtype=float) - np.asarray(scores_b, dtype=float)
    n = d.shape[-1]
    mean_d = d.mean(axis=-1)
    scale = np.sqrt(np.mean(d * d, axis=-1))
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.sqrt(n) * mean_d / scale
    return t, scale


@dataclass(frozen=True)
class DmTestResult:
    t_stat: float
    p_value: float
    sidedness: str
    preferred: str

    def to_dict(self) -> dict:
        return {"t": self.t_stat, "p_value": self.p_value,
                "sidedness": self.sidedness, "preferred": self.preferred}


def dm_test(dataset: ForecastDataset, source_a: str, source_b: str, score_fn,
            sidedness: str = "two", significance: float = 0.05) -> DmTestResult:
    """Equal-predictive-performance test between two forecast sources.

    Two-sided: null of equal expected score, rejection prefers the source
    with the lower mean score.  One-sided: null that ``source_a`` performs
    at least as well as ``source_b``; rejection prefers ``source_b``.
    """
    if sidedness not in ("one", "two"):
        raise ValueError("sidedness must be 'one' or 'two'")
    if dataset.n < 2:
        raise ValueError("need at least two forecast cases")
    y = dataset.observations
    s_a = np.asarray(score_fn(dataset.source(source_a), y), dtype=float)
    s_b = np.asarray(score_fn(dataset.source(source_b), y), dtype=float)
    t, scale = dm_statistic(s_a, s_b)
    if scale == 0.0 or not np.isfinite(t):
        raise DegenerateTestError(
            f"score differentials of {source_a!r} and {source_b!r} are all zero")
    t = float(t)
    if sidedness == "two":
        p = float(2.0 * ndtr(-abs(t)))
        preferred = "none"
        if p < significance:
            preferred = source_a if t < 0 else source_b
    else:
        p = float(ndtr(-t))
        preferred = source_b if p < significance else "none"
    return DmTestResult(t_stat=t, p_value=p, sidedness=sidedness,
                        preferred=preferred)


# ---------------------------------------------------------------------------
# Murphy diagrams
# ---------------------------------------------------------------------------

def murphy_theta_grid(dataset: ForecastDataset, params: HuberParams):
    """Decision thresholds that determine empirical dominance.

    Returns (thetas, sides): the sorted union of all forecasts, observations,
    observations - a and observations + b evaluated ``at`` the point, with an
    additional ``left`` entry (limit from below) at every forecast value.
    A left entry sorts before the at entry of the same threshold.
    """
    y = dataset.observations
    forecasts = np.concatenate(list(dataset.sources.values()))
    at_points = np.unique(np.concatenate(
        [forecasts, y, y - params.a, y + params.b]))
    left_points = np.unique(forecasts)
    thetas = np.concatenate([at_points, left_points])
    side_rank = np.concatenate([np.ones(at_points.size, dtype=int),
                                np.zeros(left_points.size, dtype=int)])
    order = np.lexsort((side_rank, thetas))
    sides = np.where(side_rank[order] == 1, AT, LEFT)
    return thetas[order], sides


@dataclass
class MurphyCurve:
    """Mean elementary scores per source along the dominance grid."""

    thetas: np.ndarray
    sides: np.ndarray
    scores: dict[str, np.ndarray]
    params: HuberParams = field(repr=False)

    def area(self, source: str) -> float:
        """Integral of the curve over theta.

        The curve is piecewise linear between consecutive distinct grid
        points, running from the ``at`` value on the left to the ``left``
        (limit) value on the right, so the trapezoid rule is exact.
        """
        values = self.scores[source]
        at_mask = self.sides == AT
        left_mask = self.sides == LEFT
        theta_at = self.thetas[at_mask]
        value_at = values[at_mask]
        left_lookup = dict(zip(self.thetas[left_mask], values[left_mask]))
        total = 0.0
        for i in range(theta_at.size - 1):
            t0, t1 = theta_at[i], theta_at[i + 1]
            v0 = value_at[i]
            v1 = left_lookup.get(t1)
            if v1 is None:
                # no forecast at t1: the curve is continuous there
                v1 = value_at[i + 1]
            total += 0.5 * (v0 + v1) * (t1 - t0)
        return float(total)

    def rows(self):
        """(theta, side, score-per-source) rows in grid order."""
        names = list(self.scores)
        for i in range(self.thetas.size):
            yield (float(self.thetas[i]), str(self.sides[i]),
                   [float(self.scores[name][i]) for name in names])


def murphy_diagram(dataset: ForecastDataset, params: HuberParams) -> MurphyCurve:
    """Mean elementary score of every source at every grid entry."""
    thetas, sides = murphy_theta_grid(dataset, params)
    y = dataset.observations
    is_left = sides == LEFT
    scores = {}
    for name, x in dataset.sources.items():
        values = np.empty(thetas.size)
        for chunk in np.array_split(np.arange(thetas.size),
                                    max(1, thetas.size * y.size // 2_000_000 + 1)):
            th = thetas[chunk][:, None]
            at_vals = elementary_huber_score(params.alpha, params.a, params.b,
                                             th, x[None, :], y[None, :])
            left_vals = elementary_huber_score(params.alpha, params.a, params.b,
                                               th, x[None, :], y[None, :],
                                               left_limit=True)
            picked = np.where(is_left[chunk][:, None], left_vals, at_vals)
            values[chunk] = picked.mean(axis=1)
        scores[name] = values
    return MurphyCurve(thetas=thetas, sides=sides, scores=scores, params=params)


@dataclass(frozen=True)
class DominanceResult:
    dominates: bool
    violations: list[float]

    def to_dict(self) -> dict:
        return {"dominates": self.dominates, "violations": self.violations}


def dominance_check(dataset: ForecastDataset, source_a: str, source_b: str,
                    params: HuberParams, tol: float = 1e-12) -> DominanceResult:
    """True when source_a's mean elementary score never exceeds source_b's."""
    dataset.source(source_a)
    dataset.source(source_b)
    curve = murphy_diagram(dataset, params)
    gap = curve.scores[source_a] - curve.scores[source_b]
    bad = gap > tol
    violations = sorted(set(float(t) for t in curve.thetas[bad]))
    return DominanceResult(dominates=not bool(bad.any()), violations=violations)


def skill_score(dataset: ForecastDataset, source: str, reference: str,
                score_fn) -> float:
    """1 - mean score / reference mean score: 1 is perfect, 0 matches the
    reference."""
    s_src = mean_score(dataset, source, score_fn)
    s_ref = mean_score(dataset, reference, score_fn)
    if s_ref == 0.0:
        if s_src == 0.0:
            return 0.0
        raise DegenerateTestError("reference forecast has zero mean score")
    return 1.0 - s_src / s_ref
