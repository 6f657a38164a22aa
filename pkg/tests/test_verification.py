import numpy as np
import pytest

from huberverify.functionals import HuberParams
from huberverify.scoring import (PiecewiseDensity, consistent_huber_fn,
                                 elementary_huber_score, huber_loss_fn,
                                 squared_error)
from huberverify.verification import (AT, LEFT, DegenerateTestError,
                                      ForecastDataset, dm_statistic, dm_test,
                                      dominance_check, mean_score,
                                      murphy_diagram, murphy_theta_grid,
                                      skill_score)

P_HALF = HuberParams(0.5, 1.0, 1.0)


def six_case_dataset():
    return ForecastDataset(
        observations=np.zeros(6),
        sources={"A": np.array([1.0, -1.0, 2.0, 0.5, -0.5, 1.5]),
                 "B": np.array([0.5, 0.5, -1.0, 1.0, 2.0, -2.0])})


def test_dataset_validation():
    with pytest.raises(ValueError):
        ForecastDataset(observations=np.array([1.0, np.nan]),
                        sources={"A": np.array([0.0, 0.0])})
    with pytest.raises(ValueError):
        ForecastDataset(observations=np.array([1.0]), sources={})
    with pytest.raises(ValueError):
        ForecastDataset(observations=np.array([1.0, 2.0]),
                        sources={"A": np.array([0.0])})
    ds = six_case_dataset()
    with pytest.raises(KeyError):
        ds.source("missing")


def test_dataset_from_csv(tmp_path):
    path = tmp_path / "data.csv"
    path.write_text("y,A,B\n0.0,1.0,0.5\n2.0,1.5,2.5\n")
    ds = ForecastDataset.from_csv(path)
    assert ds.n == 2
    assert list(ds.sources) == ["A", "B"]
    assert np.array_equal(ds.observations, [0.0, 2.0])
    bad = tmp_path / "bad.csv"
    bad.write_text("obs,A\n1.0,2.0\n")
    with pytest.raises(ValueError):
        ForecastDataset.from_csv(bad)


def test_mean_score_values():
    perfect = ForecastDataset(observations=np.array([1.0, 2.0]),
                              sources={"P": np.array([1.0, 2.0])})
    assert mean_score(perfect, "P", squared_error) == 0.0
    single = ForecastDataset(observations=np.array([0.0]),
                             sources={"A": np.array([1.0])})
    assert mean_score(single, "A", huber_loss_fn(P_HALF)) == pytest.approx(0.25)
    ds = six_case_dataset()
    doubled = ForecastDataset(
        observations=np.tile(ds.observations, 2),
        sources={k: np.tile(v, 2) for k, v in ds.sources.items()})
    for name in ds.sources:
        assert mean_score(ds, name, squared_error) == pytest.approx(
            mean_score(doubled, name, squared_error), abs=1e-15)


def test_dm_statistic_frozen_fixture():
    ds = six_case_dataset()
    result = dm_test(ds, "A", "B", squared_error)
    assert result.t_stat == pytest.approx(-0.33183182419798407, abs=1e-12)
    assert result.p_value == pytest.approx(0.7400162523198969, abs=1e-12)
    assert result.preferred == "none"


def test_dm_test_antisymmetry():
    ds = six_case_dataset()
    ab = dm_test(ds, "A", "B", squared_error)
    ba = dm_test(ds, "B", "A", squared_error)
    assert ab.t_stat == pytest.approx(-ba.t_stat, abs=1e-14)
    assert ab.p_value == pytest.approx(ba.p_value, abs=1e-14)


def test_dm_test_degenerate():
    ds = six_case_dataset()
    with pytest.raises(DegenerateTestError):
        dm_test(ds, "A", "A", squared_error)
    twin = ForecastDataset(observations=np.zeros(4),
                           sources={"A": np.ones(4), "B": np.ones(4)})
    with pytest.raises(DegenerateTestError):
        dm_test(twin, "A", "B", squared_error)


def test_dm_test_sidedness():
    ds = six_case_dataset()
    two = dm_test(ds, "B", "A", squared_error, sidedness="two")
    one = dm_test(ds, "B", "A", squared_error, sidedness="one")
    # B vs A has a positive statistic, so the one-sided p halves the two-sided
    assert one.t_stat > 0
    assert one.p_value == pytest.approx(two.p_value / 2.0, abs=1e-14)
    with pytest.raises(ValueError):
        dm_test(ds, "A", "B", squared_error, sidedness="both")


def test_dm_test_preference_direction():
    rng = np.random.default_rng(0)
    y = rng.normal(0, 1, 400)
    good = y + rng.normal(0, 0.1, 400)
    bad = y + rng.normal(0, 2.0, 400)
    ds = ForecastDataset(observations=y, sources={"good": good, "bad": bad})
    res = dm_test(ds, "good", "bad", squared_error)
    assert res.preferred == "good"
    one = dm_test(ds, "bad", "good", squared_error, sidedness="one")
    assert one.preferred == "good"


def test_murphy_grid_contents():
    ds = ForecastDataset(observations=np.array([0.0]),
                         sources={"A": np.array([1.0])})
    thetas, sides = murphy_theta_grid(ds, P_HALF)
    entries = list(zip(thetas.tolist(), sides.tolist()))
    assert entries == [(-1.0, AT), (0.0, AT), (1.0, LEFT), (1.0, AT)]


def test_murphy_grid_dedupes():
    ds = ForecastDataset(observations=np.array([0.0, 0.0]),
                         sources={"A": np.array([1.0, 1.0]),
                                  "B": np.array([1.0, 1.0])})
    thetas, sides = murphy_theta_grid(ds, P_HALF)
    assert list(zip(thetas.tolist(), sides.tolist())) == [
        (-1.0, AT), (0.0, AT), (1.0, LEFT), (1.0, AT)]


def test_murphy_perfect_source_is_zero():
    rng = np.random.default_rng(1)
    y = rng.normal(0, 1, 50)
    ds = ForecastDataset(observations=y,
                         sources={"P": y.copy(), "Q": y + 0.5})
    curve = murphy_diagram(ds, P_HALF)
    assert np.all(curve.scores["P"] == 0.0)
    assert np.any(curve.scores["Q"] > 0.0)
    assert curve.area("P") == 0.0


def test_murphy_piecewise_linear_between_grid_points():
    rng = np.random.default_rng(2)
    y = rng.normal(0, 1, 20)
    x = y + rng.normal(0, 1, 20)
    ds = ForecastDataset(observations=y, sources={"A": x})
    params = HuberParams(0.4, 0.7, 1.2)
    curve = murphy_diagram(ds, params)
    at_idx = np.flatnonzero(curve.sides == AT)
    for i, j in zip(at_idx[:-1], at_idx[1:]):
        t0, t1 = curve.thetas[i], curve.thetas[j]
        mid = 0.5 * (t0 + t1)
        direct = float(np.mean(elementary_huber_score(
            params.alpha, params.a, params.b, mid, x, y)))
        v0 = curve.scores["A"][i]
        # value approaching t1 from below
        if j > 0 and curve.sides[j - 1] == LEFT and curve.thetas[j - 1] == t1:
            v1 = curve.scores["A"][j - 1]
        else:
            v1 = curve.scores["A"][j]
        assert direct == pytest.approx(0.5 * (v0 + v1), abs=1e-12)


def test_murphy_area_equals_mean_loss():
    # area under the curve equals the mean generalized Huber loss; with the
    # equal-weight measure (density 2) that is twice the mean loss, i.e. the
    # mean classical Huber loss
    rng = np.random.default_rng(3)
    y = rng.normal(0, 2, 40)
    x = y + rng.normal(0, 1.5, 40)
    ds = ForecastDataset(observations=y, sources={"A": x})
    for params in (P_HALF, HuberParams(0.3, 0.8, 2.0)):
        curve = murphy_diagram(ds, params)
        area = curve.area("A")
        mean_loss = mean_score(ds, "A", huber_loss_fn(params))
        assert area == pytest.approx(mean_loss, abs=1e-8)


def test_murphy_weighted_area_duality():
    # piecewise-constant density: sum of density times the curve integral per
    # cell equals the mean consistent score generated by that density
    rng = np.random.default_rng(4)
    y = rng.normal(0, 1.5, 30)
    x = y + rng.normal(0, 1.0, 30)
    ds = ForecastDataset(observations=y, sources={"A": x})
    params = HuberParams(0.35, 0.9, 1.4)
    curve = murphy_diagram(ds, params)
    grid = np.array([-4.0, -1.0, 0.5, 2.0, 5.0])
    density = np.array([0.5, 2.0, 0.0, 1.5])
    spec = PiecewiseDensity(grid, density)

    at_idx = np.flatnonzero(curve.sides == AT)
    theta_at = curve.thetas[at_idx]
    vals_at = curve.scores["A"][at_idx]

    def curve_value(t, from_left):
        # exact evaluation of the piecewise-linear curve at an arbitrary point
        exact = np.flatnonzero(theta_at == t)
        if exact.size and not from_left:
            return vals_at[exact[0]]
        mask = (curve.thetas == t) & (curve.sides == LEFT)
        if from_left and mask.any():
            return curve.scores["A"][mask][0]
        j = np.searchsorted(theta_at, t)
        if j == 0 or j == theta_at.size:
            return 0.0
        t0, t1 = theta_at[j - 1], theta_at[j]
        v0 = vals_at[j - 1]
        left_mask = (curve.thetas == t1) & (curve.sides == LEFT)
        v1 = curve.scores["A"][left_mask][0] if left_mask.any() else vals_at[j]
        return v0 + (v1 - v0) * (t - t0) / (t1 - t0)

    weighted = 0.0
    for cell_lo, cell_hi, dens in zip(grid[:-1], grid[1:], density):
        pts = np.concatenate([[cell_lo],
                              theta_at[(theta_at > cell_lo) & (theta_at < cell_hi)],
                              [cell_hi]])
        for s0, s1 in zip(pts[:-1], pts[1:]):
            v0 = curve_value(s0, from_left=False)
            v1 = curve_value(s1, from_left=True)
            weighted += dens * 0.5 * (v0 + v1) * (s1 - s0)
    mean_consistent = mean_score(ds, "A", consistent_huber_fn(spec, params))
    assert weighted == pytest.approx(mean_consistent, abs=1e-8)


def test_dominance_ties_and_perfect():
    y = np.array([0.0, 1.0, -1.0])
    ds = ForecastDataset(observations=y,
                         sources={"A": y + 0.4, "B": y + 0.4, "P": y.copy()})
    res = dominance_check(ds, "A", "B", P_HALF)
    assert res.dominates and res.violations == []
    res = dominance_check(ds, "P", "A", P_HALF)
    assert res.dominates
    res = dominance_check(ds, "A", "P", P_HALF)
    assert not res.dominates


def test_dominance_crossing_fixture():
    # A wins at low thresholds, B at high ones: no dominance either way
    ds = ForecastDataset(observations=np.array([0.0, 10.0]),
                         sources={"A": np.array([0.0, 8.0]),
                                  "B": np.array([2.0, 10.0])})
    ab = dominance_check(ds, "A", "B", P_HALF)
    ba = dominance_check(ds, "B", "A", P_HALF)
    assert not ab.dominates and len(ab.violations) > 0
    assert not ba.dominates and len(ba.violations) > 0


def test_dominance_stable_under_grid_refinement():
    rng = np.random.default_rng(5)
    for _ in range(10):
        y = rng.normal(0, 1, 12)
        ds = ForecastDataset(observations=y,
                             sources={"A": y + rng.normal(0, 0.5, 12),
                                      "B": y + rng.normal(0, 0.8, 12)})
        params = HuberParams(0.45, 0.6, 0.9)
        verdict = dominance_check(ds, "A", "B", params)
        thetas, _ = murphy_theta_grid(ds, params)
        refined = np.unique(np.concatenate(
            [thetas + f * np.diff(thetas, append=thetas[-1] + 1.0)
             for f in np.linspace(0.0, 0.9, 10)]))
        diff = np.array([
            np.mean(elementary_huber_score(params.alpha, params.a, params.b, t,
                                           ds.sources["A"], y))
            - np.mean(elementary_huber_score(params.alpha, params.a, params.b, t,
                                             ds.sources["B"], y))
            for t in refined])
        assert verdict.dominates == bool(np.all(diff <= 1e-12))


def test_skill_score():
    y = np.zeros(4)
    ds = ForecastDataset(observations=y,
                         sources={"ref": np.full(4, 2.0),
                                  "half": np.full(4, np.sqrt(2.0)),
                                  "perfect": y.copy()})
    assert skill_score(ds, "ref", "ref", squared_error) == 0.0
    assert skill_score(ds, "perfect", "ref", squared_error) == 1.0
    assert skill_score(ds, "half", "ref", squared_error) == pytest.approx(0.5)
    with pytest.raises(DegenerateTestError):
        skill_score(ds, "ref", "perfect", squared_error)


def test_dm_statistic_batch_matches_scalar():
    rng = np.random.default_rng(6)
    a = rng.normal(0, 1, (5, 100))
    b = rng.normal(0, 1, (5, 100))
    t_batch, scale_batch = dm_statistic(a, b)
    for i in range(5):
        t_i, scale_i = dm_statistic(a[i], b[i])
        assert t_i == pytest.approx(t_batch[i], abs=1e-14)
        assert scale_i == pytest.approx(scale_batch[i], abs=1e-14)
