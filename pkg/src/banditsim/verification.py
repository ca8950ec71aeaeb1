"""Theory oracles: regret-bound evaluators, pull-count thresholds, and a
Monte Carlo estimator of the expected-reciprocal-probability quantity that
drives the improved problem-dependent analysis.

These exist so the test suite can check simulations against the stated
constants rather than against hand-waved expectations.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .distributions import DomainError, RngStream

__all__ = [
    "CUBE_ROOT_100",
    "theorem1_bound",
    "theorem1_pull_bound",
    "prior_art_bound",
    "prior_art_log_leading",
    "leading_coefficient_log_ratio",
    "ts_ma_pull_threshold",
    "ts_td_pull_threshold",
    "lemma1_pull_threshold",
    "Lemma1Estimate",
    "lemma1_estimator",
    "BoundReport",
    "bound_report",
]

CUBE_ROOT_100 = 100.0 ** (1.0 / 3.0)


def _check_gap(delta: float) -> None:
    if not 0.0 < delta <= 1.0:
        raise DomainError(f"gap must be in (0, 1], got {delta}")


def theorem1_bound(delta: float, horizon: int) -> float:
    """Problem-dependent regret bound for vanilla Gaussian-prior sampling:
    1270 ln(T d^2 + 100^(1/3))/d + 182.5/d + d.
    """
    _check_gap(delta)
    if horizon < 1:
        raise DomainError(f"horizon must be >= 1, got {horizon}")
    lead = 1270.0 * math.log(horizon * delta * delta + CUBE_ROOT_100) / delta
    return lead + 182.5 / delta + delta


def theorem1_pull_bound(delta: float, horizon: int) -> float:
    """Pull-count form of the same bound (regret bound divided by the gap)."""
    return theorem1_bound(delta, horizon) / delta


def prior_art_log_leading(delta: float, horizon: int) -> float:
    """log of the previously published leading term 288(e^64+6) ln(T d^2 + e^32)/d.

    Evaluated in log space; log(e^64 + 6) = 64 + log1p(6 e^-64), since the +6
    vanishes below one ulp in plain double arithmetic.
    """
    _check_gap(delta)
    log_coeff = math.log(288.0) + 64.0 + math.log1p(6.0 * math.exp(-64.0))
    return log_coeff + math.log(math.log(horizon * delta * delta + math.exp(32.0))) - math.log(delta)


def prior_art_bound(delta: float, horizon: int) -> float:
    """The prior leading term as a float (its O(1/d) tail is excluded)."""
    return math.exp(prior_art_log_leading(delta, horizon))


def leading_coefficient_log_ratio() -> float:
    """log of 288(e^64+6)/1270, the prior-to-new leading coefficient ratio."""
    return math.log(288.0) + 64.0 + math.log1p(6.0 * math.exp(-64.0)) - math.log(1270.0)


def ts_ma_pull_threshold(delta: float, horizon: int, alpha: float) -> int:
    """Sufficient pull count for the model-aggregation policy:
    ceil((sqrt(0.5) + sqrt(5 - a))^2 ln^{1+a}(T) / d^2).
    """
    _check_gap(delta)
    if not 0.0 <= alpha <= 1.0:
        raise DomainError(f"alpha must be in [0, 1], got {alpha}")
    if horizon < 2:
        raise DomainError(f"horizon must be >= 2, got {horizon}")
    c = (math.sqrt(0.5) + math.sqrt(5.0 - alpha)) ** 2
    return math.ceil(c * math.log(horizon) ** (1.0 + alpha) / (delta * delta))


def ts_td_pull_threshold(delta: float, horizon: int, alpha: float) -> float:
    """Sufficient pull count for the timestamp-duelling policy:
    4 (sqrt(2) + sqrt(5 - a))^2 ln^{1+a}(T) / d^2.
    """
    _check_gap(delta)
    if not 0.0 <= alpha <= 1.0:
        raise DomainError(f"alpha must be in [0, 1], got {alpha}")
    if horizon < 2:
        raise DomainError(f"horizon must be >= 2, got {horizon}")
    c = 4.0 * (math.sqrt(2.0) + math.sqrt(5.0 - alpha)) ** 2
    return c * math.log(horizon) ** (1.0 + alpha) / (delta * delta)


def lemma1_pull_threshold(delta: float, horizon: int) -> float:
    """Observation count after which the optimal arm's posterior has
    concentrated: 4 (sqrt(2) + sqrt(3.5))^2 ln(T d^2 + 100^(1/3)) / d^2.
    """
    _check_gap(delta)
    c = 4.0 * (math.sqrt(2.0) + math.sqrt(3.5)) ** 2
    return c * math.log(horizon * delta * delta + CUBE_ROOT_100) / (delta * delta)


@dataclass
class Lemma1Estimate:
    """Monte Carlo estimate of E[1/P{theta > mu1 - d/2 | muhat}] - 1."""

    estimate: float
    std_error: float
    winsorized_estimate: float
    trials: int
    s: int


_vec_erfc = np.frompyfunc(math.erfc, 1, 1)


def _normal_sf_vec(z: np.ndarray) -> np.ndarray:
    return 0.5 * _vec_erfc(z / math.sqrt(2.0)).astype(np.float64)


def lemma1_estimator(
    s: int,
    delta: float,
    horizon: int,
    reward_mean: float,
    trials: int,
    rng: RngStream,
) -> Lemma1Estimate:
    """Estimate the expected reciprocal good-sample probability minus one.

    Per trial: muhat is the mean of ``s`` Bernoulli(reward_mean) rewards, and
    p = P{N(muhat, 1/s) > reward_mean - delta/2} evaluated through the
    complementary normal CDF.  muhat only depends on the Bernoulli count, so
    p is computed once per distinct count.  Trials where p underflows below
    1e-300 abort with a diagnostic (the reciprocal is heavy-tailed at small
    s); the returned winsorized estimate (top 1e-4 quantile clipped) is a
    diagnostic companion to the raw mean.
    """
    if s < 1:
        raise DomainError(f"s must be >= 1, got {s}")
    if not 0.0 < reward_mean < 1.0:
        raise DomainError(f"reward_mean must be in (0, 1), got {reward_mean}")
    _check_gap(delta)
    if trials < 2:
        raise DomainError(f"trials must be >= 2, got {trials}")
    del horizon  # the threshold side of the claim; not used by the estimator

    counts = rng.generator.binomial(s, reward_mean, size=trials)
    uniq, inverse = np.unique(counts, return_inverse=True)
    muhat = uniq / s
    z = (reward_mean - delta / 2.0 - muhat) * math.sqrt(s)
    p = _normal_sf_vec(z)
    if np.any(p < 1e-300):
        bad = muhat[p < 1e-300]
        raise FloatingPointError(
            f"good-sample probability underflowed (p < 1e-300) at s={s}, "
            f"muhat={bad[:3]}; the reciprocal expectation is too heavy-tailed "
            "to estimate at these parameters"
        )
    values = (1.0 / p - 1.0)[inverse]
    estimate = float(values.mean())
    std_error = float(values.std(ddof=1) / math.sqrt(trials))
    cap = float(np.quantile(values, 1.0 - 1e-4))
    winsorized = float(np.minimum(values, cap).mean())
    return Lemma1Estimate(
        estimate=estimate,
        std_error=std_error,
        winsorized_estimate=winsorized,
        trials=trials,
        s=s,
    )


@dataclass
class BoundReport:
    """Per-suboptimal-arm regret bound terms plus their total."""

    horizon: int
    alpha: float
    rows: list[dict] = field(default_factory=list)  # arm, delta, term_log, term_const
    total: float = 0.0

    CSV_COLUMNS = (
        "arm", "delta", "T", "alpha", "bound_term_log", "bound_term_const", "bound_total",
    )

    def csv_rows(self) -> list[dict]:
        return [
            {
                "arm": r["arm"],
                "delta": r["delta"],
                "T": self.horizon,
                "alpha": self.alpha,
                "bound_term_log": r["term_log"],
                "bound_term_const": r["term_const"],
                "bound_total": r["term_log"] + r["term_const"],
            }
            for r in self.rows
        ]


def bound_report(instance, horizon: int, alpha: float = 0.0) -> BoundReport:
    """Evaluate the new problem-dependent bound per suboptimal arm."""
    report = BoundReport(horizon=horizon, alpha=alpha)
    for arm in range(instance.n_arms):
        delta = float(instance.gaps[arm])
        if delta <= 0.0:
            continue
        term_log = 1270.0 * math.log(horizon * delta * delta + CUBE_ROOT_100) / delta
        term_const = 182.5 / delta + delta
        report.rows.append(
            {"arm": arm, "delta": delta, "term_log": term_log, "term_const": term_const}
        )
        report.total += term_log + term_const
    return report
