import numpy as np
import pytest

from huberverify.distributions import SkewNormal
from huberverify.functionals import (HuberParams, huber_functional, quantile,
                                     skew_normal_huber_mean, skew_normal_mean,
                                     skew_normal_median)
from huberverify.scoring import generalized_huber_loss
from huberverify.simulation import (CompetitorSet, EnvironmentConfig,
                                    _draw_days, _rule_scores, competitor_quotes,
                                    sample_day, switching_experiment,
                                    with_contamination)


def test_config_validation():
    with pytest.raises(ValueError):
        EnvironmentConfig(contamination_rate=1.5)
    with pytest.raises(ValueError):
        EnvironmentConfig(spike_rate=0.0)
    with pytest.raises(ValueError):
        switching_experiment(EnvironmentConfig(), reps=0)


def test_no_contamination_leaves_measurements_alone():
    cfg = with_contamination(EnvironmentConfig(), 0.0)
    rng = np.random.default_rng(0)
    _, _, _, y, ym = _draw_days(cfg, rng, 100_000)
    assert np.array_equal(y, ym)


def test_contamination_rate_and_mean_shift():
    cfg = EnvironmentConfig()
    rng = np.random.default_rng(1)
    _, _, _, y, ym = _draw_days(cfg, rng, 1_000_000)
    frac = np.mean(ym != y)
    assert frac == pytest.approx(0.05, abs=0.001)
    # mean spike is scale + 1/rate = 6.25, at rate 0.05 the shift is 0.3125
    assert np.mean(ym - y) == pytest.approx(0.3125, abs=0.01)
    # the floor model never produces spikes below the scale
    spikes = (ym - y)[ym != y]
    assert spikes.min() >= cfg.spike_scale


def test_literal_spike_model_keeps_the_mean_shift():
    cfg = EnvironmentConfig(spike_floor=False)
    rng = np.random.default_rng(2)
    _, _, _, y, ym = _draw_days(cfg, rng, 1_000_000)
    assert np.mean(ym - y) == pytest.approx(0.3125, abs=0.01)
    spikes = (ym - y)[ym != y]
    assert spikes.min() < cfg.spike_scale


def test_sample_day_scalar_api():
    day, y, ym = sample_day(EnvironmentConfig(), np.random.default_rng(3))
    assert isinstance(day, SkewNormal)
    assert day.omega >= 1.4
    assert -20.0 <= day.nu <= 20.0
    assert ym >= y


def test_competitor_quotes_symmetric_day():
    day = SkewNormal(12.0, 2.0, 0.0)
    quotes = competitor_quotes(day, np.random.default_rng(4))
    assert quotes["IdealMean"] == pytest.approx(12.0, abs=1e-6)
    assert quotes["Median"] == pytest.approx(12.0, abs=1e-6)
    assert quotes["Huber1.5"] == pytest.approx(12.0, abs=1e-6)
    assert quotes["Huber2.5"] == pytest.approx(12.0, abs=1e-6)
    assert quotes["DebiasedMean"] - quotes["IdealMean"] == pytest.approx(0.3)


def test_competitor_ordering_logged_not_asserted():
    # tendency only: the Huber quote usually sits between median and mean on
    # skewed days, but this is not a theorem; count rather than assert per case
    rng = np.random.default_rng(5)
    between = 0
    total = 40
    for _ in range(total):
        nu = rng.uniform(3.0, 20.0)
        day = SkewNormal(rng.uniform(10, 30), rng.uniform(1.5, 5.0), nu)
        quotes = competitor_quotes(day, rng)
        lo = min(quotes["Median"], quotes["IdealMean"])
        hi = max(quotes["Median"], quotes["IdealMean"])
        if lo - 1e-9 <= quotes["Huber1.5"] <= hi + 1e-9:
            between += 1
    assert between >= total * 0.8


def test_batch_solvers_match_scalar_functionals():
    rng = np.random.default_rng(6)
    xi = rng.uniform(-5.0, 30.0, 25)
    omega = rng.uniform(0.5, 6.0, 25)
    nu = rng.uniform(-20.0, 20.0, 25)
    a = rng.uniform(0.4, 3.0, 25)
    medians = skew_normal_median(xi, omega, nu, tol=1e-9)
    hubers = skew_normal_huber_mean(xi, omega, nu, a, tol=1e-9)
    means = skew_normal_mean(xi, omega, nu)
    for i in range(25):
        day = SkewNormal(xi[i], omega[i], nu[i])
        assert medians[i] == pytest.approx(quantile(day, 0.5).midpoint, abs=1e-6)
        res = huber_functional(day, HuberParams.symmetric(0.5, a[i]), tol=1e-10)
        assert hubers[i] == pytest.approx(res.midpoint, abs=1e-6)
        assert means[i] == pytest.approx(day.mean(), abs=1e-12)


def test_rule_scores_family():
    u = np.linspace(-6.0, 6.0, 41)
    assert np.allclose(_rule_scores("0", u), np.abs(u))
    assert np.allclose(_rule_scores("inf", u), u * u)
    for a in (1.5, 2.5):
        expected = 2.0 * generalized_huber_loss(HuberParams.symmetric(0.5, a), u)
        assert np.allclose(_rule_scores(str(a), u), expected, atol=1e-14)


def test_switching_experiment_deterministic():
    cfg = EnvironmentConfig()
    r1 = switching_experiment(cfg, reps=20, days=80, seed=11, threads=1)
    r2 = switching_experiment(cfg, reps=20, days=80, seed=11, threads=2)
    assert np.array_equal(r1.rejections, r2.rejections)
    assert r1.to_dict() == r2.to_dict()


def test_switching_experiment_clone_ideal_never_rejects():
    report = switching_experiment(
        with_contamination(EnvironmentConfig(), 0.0), reps=5, days=60, seed=2,
        competitors=CompetitorSet(clone_ideal=True))
    assert int(report.rejections.sum()) == 0
    for comp in report.competitors:
        assert report.probability(comp, "inf", "clean") == 0.0


def test_switching_report_layout():
    report = switching_experiment(EnvironmentConfig(), reps=3, days=40, seed=9)
    rows = report.table_rows()
    assert rows[0][0] == "competitor"
    assert len(rows) == 1 + len(report.competitors)
    assert len(rows[0]) == 1 + len(report.rules) * len(report.observation_types)
    payload = report.to_dict()
    assert payload["reps"] == 3 and payload["days"] == 40
    cell = payload["results"]["DebiasedMean"]["inf"]["contaminated"]
    assert 0.0 <= cell["rejection_rate"] <= 1.0
    assert cell["standard_error"] <= 0.5


def test_standard_error_formula():
    report = switching_experiment(EnvironmentConfig(), reps=4, days=40, seed=10)
    for comp in report.competitors:
        p = report.probability(comp, "0", "contaminated")
        se = report.standard_error(comp, "0", "contaminated")
        assert se == pytest.approx(np.sqrt(p * (1 - p) / 4.0), abs=1e-15)
