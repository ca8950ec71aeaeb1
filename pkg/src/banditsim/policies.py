"""Arm-selection policies behind a uniform contract.

Each policy implements ``initialize(K, T, rng)``, ``init_update`` (called once
per arm during the initialization pulls), ``select(t) -> (arm, draws)`` and
``update(arm, reward) -> draws``.  Draw reports are pairs of per-arm int64
arrays ``(physical, logical)``: physical counts actual sampler invocations,
logical counts the sample budget a batched refresh stands for (they differ
only for the model-aggregation policy in efficient mode).

A policy instance belongs to a single episode; `core.run_episode` drives it.
"""
from __future__ import annotations

import math

import numpy as np

from .distributions import (
    BetaParams,
    DomainError,
    ExpTsParams,
    GaussianParams,
    MaxGaussianParams,
    ParameterError,
    RngStream,
    bernoulli_kl,
    kl_upper_inverse,
    sample_beta,
    sample_expts,
    sample_gaussian,
    sample_max_gaussian,
    sample_max_gaussian_naive,
)

__all__ = [
    "PHI_C0",
    "sample_budget",
    "Policy",
    "VanillaTsGaussian",
    "VanillaTsBeta",
    "TsMa",
    "TsTd",
    "EpsilonTs",
    "ExpTsPlus",
    "KlUcbPlusPlus",
    "lower_bound_curve",
    "make_policy",
    "POLICY_ALGOS",
]

# Aggregation constant c0 = 1/(2*sqrt(2*e*pi)).
PHI_C0 = 1.0 / (2.0 * math.sqrt(2.0 * math.e * math.pi))


def sample_budget(horizon: int, alpha: float) -> int:
    """Per-refresh sample budget phi = ceil(2 T^{(1-a)/2} ln^{(3-a)/2}(T) / c0).

    Ceiled because phi is used as a sample count; ceiling preserves the
    budget's lower bound role.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ParameterError(f"alpha must be in [0, 1], got {alpha}")
    if horizon < 2:
        raise ParameterError(f"horizon must be >= 2, got {horizon}")
    raw = (
        2.0
        * horizon ** (0.5 * (1.0 - alpha))
        * math.log(horizon) ** (0.5 * (3.0 - alpha))
        / PHI_C0
    )
    return math.ceil(raw)


def _argmax(values: np.ndarray) -> int:
    # First maximum = lowest-index tie-break (ties are measure-zero for
    # randomized indexes but matter for the deterministic ones).
    best = values[0]
    idx = 0
    for i in range(1, len(values)):
        if values[i] > best:
            best = values[i]
            idx = i
    return idx


class Policy:
    """Shared arm-statistics plumbing; subclasses add index logic."""

    policy_id: str = "policy"

    def __init__(self) -> None:
        self.n_arms = 0
        self.horizon = 0
        self.rng: RngStream | None = None
        self.pulls: np.ndarray | None = None
        self.means: np.ndarray | None = None
        self.last_indexes: np.ndarray | None = None

    def initialize(self, n_arms: int, horizon: int, rng: RngStream) -> None:
        self.n_arms = n_arms
        self.horizon = horizon
        self.rng = rng
        self.pulls = np.zeros(n_arms, dtype=np.int64)
        self.means = np.zeros(n_arms, dtype=np.float64)
        self.last_indexes = np.zeros(n_arms, dtype=np.float64)

    def _observe(self, arm: int, reward: float) -> None:
        self.pulls[arm] += 1
        n = self.pulls[arm]
        self.means[arm] += (reward - self.means[arm]) / n

    def _no_draws(self):
        z = np.zeros(self.n_arms, dtype=np.int64)
        return z, z

    def arm_state(self, arm: int):
        from .core import ArmState

        return ArmState(pulls=int(self.pulls[arm]), mean=float(self.means[arm]))

    # --- contract -----------------------------------------------------
    def init_update(self, arm: int, reward: float):
        raise NotImplementedError

    def select(self, t: int):
        raise NotImplementedError

    def update(self, arm: int, reward: float):
        raise NotImplementedError

    def kernel_request(self) -> dict | None:
        return None


class _PosteriorMixin:
    """Gaussian or Beta posterior draw for one arm."""

    beta_prior = False

    def _posterior_draw(self, arm: int) -> float:
        n = self.pulls[arm]
        mu = float(self.means[arm])
        if self.beta_prior:
            return sample_beta(BetaParams(mu * n + 1.0, (1.0 - mu) * n + 1.0), self.rng)
        return sample_gaussian(GaussianParams(mu, 1.0 / n), self.rng)


class VanillaTsGaussian(_PosteriorMixin, Policy):
    """One fresh N(mean_i, 1/n_i) sample per arm per round, pull the argmax."""

    policy_id = "vanilla-ts-gaussian"
    beta_prior = False

    def init_update(self, arm, reward):
        self._observe(arm, reward)
        self._posterior_draw(arm)  # declared initialization draw
        phys = np.zeros(self.n_arms, dtype=np.int64)
        phys[arm] = 1
        return phys, phys

    def select(self, t):
        idx = np.empty(self.n_arms, dtype=np.float64)
        for i in range(self.n_arms):
            idx[i] = self._posterior_draw(i)
        self.last_indexes = idx
        ones = np.ones(self.n_arms, dtype=np.int64)
        return _argmax(idx), (ones, ones)

    def update(self, arm, reward):
        self._observe(arm, reward)
        return self._no_draws()

    def kernel_request(self):
        return {"algo": "vanilla_ts", "beta_prior": self.beta_prior}


class VanillaTsBeta(VanillaTsGaussian):
    """Vanilla Thompson Sampling with Beta(mean*n + 1, (1-mean)*n + 1) posteriors."""

    policy_id = "vanilla-ts-beta"
    beta_prior = True


class TsMa(Policy):
    """Thompson Sampling with model aggregation.

    Caches theta_i = max of phi samples from N(mean_i, ln^a(T)/n_i) per arm
    and refreshes only the pulled arm's cache.  The efficient mode draws the
    max directly through its inverse CDF (one physical sample per refresh);
    the naive mode draws all phi samples.  Logical accounting is phi per
    refresh in both modes.
    """

    def __init__(self, alpha: float, mode: str = "efficient") -> None:
        super().__init__()
        if mode not in ("efficient", "naive"):
            raise ParameterError(f"unknown TS-MA mode: {mode!r}")
        if not 0.0 <= alpha <= 1.0:
            raise ParameterError(f"alpha must be in [0, 1], got {alpha}")
        self.alpha = alpha
        self.mode = mode
        self.policy_id = f"ts-ma-a{alpha:g}" + ("-naive" if mode == "naive" else "")
        self.phi = 0
        self.var_num = 1.0
        self.theta: np.ndarray | None = None

    def initialize(self, n_arms, horizon, rng):
        super().initialize(n_arms, horizon, rng)
        self.phi = sample_budget(horizon, self.alpha)
        self.var_num = math.log(horizon) ** self.alpha
        self.theta = np.zeros(n_arms, dtype=np.float64)

    def _refresh(self, arm: int):
        params = MaxGaussianParams(
            GaussianParams(float(self.means[arm]), self.var_num / self.pulls[arm]),
            self.phi,
        )
        if self.mode == "naive":
            self.theta[arm] = sample_max_gaussian_naive(params, self.rng)
            n_phys = self.phi
        else:
            self.theta[arm] = sample_max_gaussian(params, self.rng)
            n_phys = 1
        phys = np.zeros(self.n_arms, dtype=np.int64)
        log = np.zeros(self.n_arms, dtype=np.int64)
        phys[arm] = n_phys
        log[arm] = self.phi
        return phys, log

    def init_update(self, arm, reward):
        self._observe(arm, reward)
        return self._refresh(arm)

    def select(self, t):
        self.last_indexes = self.theta.copy()
        return _argmax(self.theta), self._no_draws()

    def update(self, arm, reward):
        self._observe(arm, reward)
        return self._refresh(arm)

    def kernel_request(self):
        return {"algo": "ts_ma", "alpha": self.alpha, "naive": self.mode == "naive"}


class TsTd(Policy):
    """Thompson Sampling with timestamp duelling.

    Between two pulls of an arm, the first phi rounds draw fresh samples from
    N(mean_i, ln^a(T)/n_i) (phase I, running max kept in psi_i); afterwards
    the cached max is reused with no new draws (phase II).  Pulling an arm
    resets its counter and cache.
    """

    def __init__(self, alpha: float) -> None:
        super().__init__()
        if not 0.0 <= alpha <= 1.0:
            raise ParameterError(f"alpha must be in [0, 1], got {alpha}")
        self.alpha = alpha
        self.policy_id = f"ts-td-a{alpha:g}"
        self.phi = 0
        self.var_num = 1.0
        self.used: np.ndarray | None = None  # h_i, fresh draws since last pull
        self.best: np.ndarray | None = None  # psi_i, running max (0 sentinel)

    def initialize(self, n_arms, horizon, rng):
        super().initialize(n_arms, horizon, rng)
        self.phi = sample_budget(horizon, self.alpha)
        self.var_num = math.log(horizon) ** self.alpha
        self.used = np.zeros(n_arms, dtype=np.int64)
        self.best = np.zeros(n_arms, dtype=np.float64)

    def init_update(self, arm, reward):
        self._observe(arm, reward)
        return self._no_draws()

    def select(self, t):
        idx = np.empty(self.n_arms, dtype=np.float64)
        phys = np.zeros(self.n_arms, dtype=np.int64)
        for i in range(self.n_arms):
            if self.used[i] <= self.phi - 1:
                theta = sample_gaussian(
                    GaussianParams(float(self.means[i]), self.var_num / self.pulls[i]),
                    self.rng,
                )
                self.used[i] += 1
                if theta > self.best[i]:
                    self.best[i] = theta
                idx[i] = theta
                phys[i] = 1
            else:
                # h_i == phi >= 1, so psi_i aggregates real draws and the
                # zero reset value cannot reach selection.
                assert self.used[i] >= 1
                idx[i] = self.best[i]
        self.last_indexes = idx
        return _argmax(idx), (phys, phys)

    def update(self, arm, reward):
        self._observe(arm, reward)
        self.used[arm] = 0
        self.best[arm] = 0.0
        return self._no_draws()

    def kernel_request(self):
        return {"algo": "ts_td", "alpha": self.alpha}


class EpsilonTs(_PosteriorMixin, Policy):
    """Per arm per round: posterior sample with probability epsilon, else the
    empirical mean.  One independent coin per arm; the K coins are drawn as a
    block in arm order, then the sampled arms' draws in arm order.
    """

    def __init__(self, epsilon: float, prior: str = "gaussian") -> None:
        super().__init__()
        if prior not in ("gaussian", "beta"):
            raise ParameterError(f"unknown prior: {prior!r}")
        self.epsilon = float(epsilon)
        self.beta_prior = prior == "beta"
        self.policy_id = f"eps-ts-{prior}-e{epsilon:g}"

    def initialize(self, n_arms, horizon, rng):
        if not (1.0 / n_arms <= self.epsilon <= 1.0):
            raise ParameterError(
                f"epsilon must be in [1/K, 1] = [{1.0 / n_arms:g}, 1], got {self.epsilon}"
            )
        super().initialize(n_arms, horizon, rng)

    def init_update(self, arm, reward):
        self._observe(arm, reward)
        phys = np.zeros(self.n_arms, dtype=np.int64)
        if self.rng.generator.random() < self.epsilon:
            self._posterior_draw(arm)
            phys[arm] = 1
        return phys, phys

    def select(self, t):
        coins = self.rng.generator.random(self.n_arms)
        idx = np.empty(self.n_arms, dtype=np.float64)
        phys = np.zeros(self.n_arms, dtype=np.int64)
        for i in range(self.n_arms):
            if coins[i] < self.epsilon:
                idx[i] = self._posterior_draw(i)
                phys[i] = 1
            else:
                idx[i] = self.means[i]
        self.last_indexes = idx
        return _argmax(idx), (phys, phys)

    def update(self, arm, reward):
        self._observe(arm, reward)
        return self._no_draws()

    def kernel_request(self):
        return {"algo": "epsilon_ts", "epsilon": self.epsilon, "beta_prior": self.beta_prior}


class ExpTsPlus(Policy):
    """With probability 1/K per arm, draw from the KL-shaped two-sided
    distribution anchored at the empirical mean; otherwise exploit the mean.
    """

    policy_id = "expts-plus"

    def init_update(self, arm, reward):
        self._observe(arm, reward)
        phys = np.zeros(self.n_arms, dtype=np.int64)
        if self.rng.generator.random() < 1.0 / self.n_arms:
            self._index_draw(arm)
            phys[arm] = 1
        return phys, phys

    def _index_draw(self, arm: int) -> float:
        return sample_expts(
            ExpTsParams(float(self.means[arm]), float(self.pulls[arm] - 1)), self.rng
        )

    def select(self, t):
        coins = self.rng.generator.random(self.n_arms)
        p0 = 1.0 / self.n_arms
        idx = np.empty(self.n_arms, dtype=np.float64)
        phys = np.zeros(self.n_arms, dtype=np.int64)
        for i in range(self.n_arms):
            if coins[i] < p0:
                idx[i] = self._index_draw(i)
                phys[i] = 1
            else:
                idx[i] = self.means[i]
        self.last_indexes = idx
        return _argmax(idx), (phys, phys)

    def update(self, arm, reward):
        self._observe(arm, reward)
        return self._no_draws()

    def kernel_request(self):
        return {"algo": "expts_plus"}


class KlUcbPlusPlus(Policy):
    """Deterministic KL-UCB index with the horizon-aware exploration budget
    lnbar(T (lnbar^2(T/(K n)) + 1) / (K n)) / n, lnbar = max(0, ln).

    The index depends only on (mean_i, n_i, T, K), so it is recomputed only
    for the pulled arm.
    """

    policy_id = "kl-ucb-pp"

    def initialize(self, n_arms, horizon, rng):
        super().initialize(n_arms, horizon, rng)
        self.index = np.zeros(n_arms, dtype=np.float64)

    def _budget(self, n: int) -> float:
        x = self.horizon / (self.n_arms * n)
        inner = max(0.0, math.log(x))
        return max(0.0, math.log(x * (inner * inner + 1.0))) / n

    def _recompute(self, arm: int) -> None:
        self.index[arm] = kl_upper_inverse(float(self.means[arm]), self._budget(int(self.pulls[arm])))

    def init_update(self, arm, reward):
        self._observe(arm, reward)
        self._recompute(arm)
        return self._no_draws()

    def select(self, t):
        self.last_indexes = self.index.copy()
        return _argmax(self.index), self._no_draws()

    def update(self, arm, reward):
        self._observe(arm, reward)
        self._recompute(arm)
        return self._no_draws()

    def kernel_request(self):
        return {"algo": "kl_ucb_pp"}


def lower_bound_curve(instance, t_grid) -> list[tuple[int, float]]:
    """Asymptotic lower bound sum_i gap_i * ln(t) / KL(mean_i, best_mean),
    evaluated on the given rounds (the o(ln T) term is dropped).
    """
    coeff = 0.0
    for i in range(instance.n_arms):
        gap = float(instance.gaps[i])
        if gap <= 0.0:
            continue
        mean = float(instance.means[i])
        if mean <= 0.0 or mean >= 1.0 or instance.best_mean >= 1.0:
            raise DomainError(
                f"arm {i}: KL({mean}, {instance.best_mean}) is infinite or undefined"
            )
        coeff += gap / bernoulli_kl(mean, instance.best_mean)
    return [(t, coeff * math.log(t)) for t in t_grid]


POLICY_ALGOS = (
    "vanilla_ts_gaussian",
    "vanilla_ts_beta",
    "ts_ma",
    "ts_td",
    "epsilon_ts",
    "expts_plus",
    "kl_ucb_pp",
)


def make_policy(algo: str, **params) -> Policy:
    """Construct a fresh policy instance from an algorithm name and params."""
    if algo == "vanilla_ts_gaussian":
        policy = VanillaTsGaussian()
    elif algo == "vanilla_ts_beta":
        policy = VanillaTsBeta()
    elif algo == "ts_ma":
        policy = TsMa(alpha=params.pop("alpha"), mode=params.pop("mode", "efficient"))
    elif algo == "ts_td":
        policy = TsTd(alpha=params.pop("alpha"))
    elif algo == "epsilon_ts":
        policy = EpsilonTs(epsilon=params.pop("epsilon"), prior=params.pop("prior", "gaussian"))
    elif algo == "expts_plus":
        policy = ExpTsPlus()
    elif algo == "kl_ucb_pp":
        policy = KlUcbPlusPlus()
    else:
        raise ParameterError(f"unknown algorithm: {algo!r}")
    policy_id = params.pop("id", None)
    if params:
        raise ParameterError(f"unexpected parameters for {algo}: {sorted(params)}")
    if policy_id:
        policy.policy_id = policy_id
    return policy
