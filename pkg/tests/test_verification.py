import math

import mpmath as mp
import numpy as np
import pytest

from banditsim import RngStream, make_instance
from banditsim.distributions import DomainError
from banditsim.verification import (
    CUBE_ROOT_100,
    BoundReport,
    bound_report,
    leading_coefficient_log_ratio,
    lemma1_estimator,
    lemma1_pull_threshold,
    prior_art_bound,
    prior_art_log_leading,
    theorem1_bound,
    theorem1_pull_bound,
    ts_ma_pull_threshold,
    ts_td_pull_threshold,
)


# ---------------------------------------------------------------------------
# new problem-dependent bound
# ---------------------------------------------------------------------------


def test_theorem1_bound_value():
    # independent arithmetic at delta=0.1, T=1e5: T d^2 = 1000
    expected = 1270.0 * math.log(1000.0 + 100.0 ** (1.0 / 3.0)) * 10.0 + 1825.0 + 0.1
    assert abs(theorem1_bound(0.1, 100_000) - expected) <= 1e-9 * expected


def test_theorem1_bound_unit_inputs():
    expected = 1270.0 * math.log(1.0 + CUBE_ROOT_100) + 182.5 + 1.0
    assert theorem1_bound(1.0, 1) == pytest.approx(expected, rel=1e-15)


def test_theorem1_bound_decreasing_in_gap():
    T = 100_000
    grid = np.linspace(math.e / math.sqrt(T) + 1e-6, 1.0, 200)
    values = [theorem1_bound(float(d), T) for d in grid]
    assert all(a >= b for a, b in zip(values, values[1:]))


def test_theorem1_domain():
    with pytest.raises(DomainError):
        theorem1_bound(0.0, 100)
    with pytest.raises(DomainError):
        theorem1_bound(-0.5, 100)
    with pytest.raises(DomainError):
        theorem1_bound(1.5, 100)


def test_theorem1_pull_bound_is_regret_bound_over_gap():
    assert theorem1_pull_bound(0.2, 5000) == theorem1_bound(0.2, 5000) / 0.2


# ---------------------------------------------------------------------------
# prior published bound
# ---------------------------------------------------------------------------


def test_leading_coefficient_ratio():
    mp.mp.dps = 50
    exact = mp.log(288 * (mp.e**64 + 6) / 1270)
    assert abs(leading_coefficient_log_ratio() - float(exact)) <= 1e-12


def test_prior_art_bound_against_bigfloat_oracle():
    mp.mp.dps = 50
    delta, T = 0.1, 100_000
    oracle = 288 * (mp.e**64 + 6) * mp.log(T * mp.mpf("0.01") + mp.e**32) / mp.mpf("0.1")
    ours = prior_art_bound(delta, T)
    assert abs(ours - float(oracle)) <= 1e-9 * float(oracle)


def test_prior_art_bound_vacuous_at_desk_horizons():
    # the prior leading term alone exceeds T whenever T <= 288 e^64
    assert prior_art_bound(0.5, 10**6) > 10**6
    assert prior_art_log_leading(0.5, 10**6) > math.log(10**6)


# ---------------------------------------------------------------------------
# pull thresholds
# ---------------------------------------------------------------------------


def test_ts_ma_threshold_value_at_alpha_zero():
    expected = math.ceil((math.sqrt(0.5) + math.sqrt(5.0)) ** 2 * math.log(1e5) / 0.01)
    assert ts_ma_pull_threshold(0.1, 100_000, 0.0) == expected


def test_ts_ma_threshold_alpha_one_squares_the_log():
    t0 = ts_ma_pull_threshold(0.1, 100_000, 0.0)
    t1 = ts_ma_pull_threshold(0.1, 100_000, 1.0)
    # exponent on ln(T) goes from 1 to 2 while the constant shrinks
    ratio = ((math.sqrt(0.5) + 2.0) ** 2) / ((math.sqrt(0.5) + math.sqrt(5.0)) ** 2)
    assert t1 == pytest.approx(t0 * ratio * math.log(1e5), rel=1e-3)


def test_ts_ma_threshold_monotone_in_gap():
    vals = [ts_ma_pull_threshold(d, 10_000, 0.5) for d in (0.05, 0.1, 0.2, 0.5, 1.0)]
    assert vals == sorted(vals, reverse=True)


def test_ts_td_threshold_formula():
    expected = 4.0 * (math.sqrt(2.0) + math.sqrt(4.2)) ** 2 * math.log(1e5) ** 1.8 / 0.01
    assert ts_td_pull_threshold(0.1, 100_000, 0.8) == pytest.approx(expected, rel=1e-12)


def test_lemma1_threshold_formula():
    expected = 4.0 * (math.sqrt(2.0) + math.sqrt(3.5)) ** 2 \
        * math.log(100.0 + CUBE_ROOT_100) / 0.01
    assert lemma1_pull_threshold(0.1, 10_000) == pytest.approx(expected, rel=1e-12)


# ---------------------------------------------------------------------------
# reciprocal-probability estimator
# ---------------------------------------------------------------------------


def test_lemma1_estimate_vanishes_for_certain_event():
    # threshold far below every achievable empirical mean -> p ~ 1
    est = lemma1_estimator(400, 1.0, 10_000, 0.9, 50_000, RngStream(1))
    assert est.estimate < 0.01


def test_lemma1_small_s_regime():
    rng = RngStream(2)
    for s in (1, 5, 25):
        est = lemma1_estimator(s, 0.1, 10_000, 0.9, 200_000, rng)
        assert est.estimate <= 29.0 + 3.0 * est.std_error
        assert est.std_error > 0.0
        assert est.winsorized_estimate <= est.estimate + 1e-12


def test_lemma1_concentrated_regime():
    s = math.ceil(lemma1_pull_threshold(0.1, 10_000))
    est = lemma1_estimator(s, 0.1, 10_000, 0.9, 200_000, RngStream(3))
    assert est.estimate <= 180.0 / (10_000 * 0.01) + 3.0 * est.std_error


def test_lemma1_estimator_underflow_guard():
    class ZeroBinomial:
        def __init__(self, inner):
            self._inner = inner

        def binomial(self, n, p, size=None):
            return np.zeros(size, dtype=np.int64)

        def __getattr__(self, name):
            return getattr(self._inner, name)

    rng = RngStream(4)
    rng.generator = ZeroBinomial(rng.generator)
    # muhat pinned at 0 with s=2000 puts the tail mass below 1e-300
    with pytest.raises(FloatingPointError):
        lemma1_estimator(2000, 0.1, 10_000, 0.999, 100, rng)


def test_lemma1_estimator_validation():
    rng = RngStream(5)
    with pytest.raises(DomainError):
        lemma1_estimator(0, 0.1, 100, 0.9, 100, rng)
    with pytest.raises(DomainError):
        lemma1_estimator(5, 0.1, 100, 1.0, 100, rng)
    with pytest.raises(DomainError):
        lemma1_estimator(5, 0.0, 100, 0.9, 100, rng)


# ---------------------------------------------------------------------------
# bound report
# ---------------------------------------------------------------------------


def test_bound_report_totals_and_schema():
    inst = make_instance([0.9] + [0.8] * 3 + [0.7])
    report = bound_report(inst, 10_000, alpha=0.8)
    assert len(report.rows) == 4  # suboptimal arms only
    assert all(r["term_log"] >= 0 and r["term_const"] >= 0 for r in report.rows)
    assert report.total == pytest.approx(
        sum(r["term_log"] + r["term_const"] for r in report.rows)
    )
    rows = report.csv_rows()
    assert set(rows[0]) == set(BoundReport.CSV_COLUMNS)
    assert all(r["bound_total"] == r["bound_term_log"] + r["bound_term_const"] for r in rows)
    assert [r["arm"] for r in rows] == [1, 2, 3, 4]
