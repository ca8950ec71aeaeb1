"""Problem definitions and the round-by-round environment loop.

`run_episode` executes the bandit protocol: pull each arm once in index
order, then rounds K+1..T where the policy picks an arm, one reward is drawn
for it, and the policy updates.  Pseudo-regret (gap-weighted pull counts, not
realized rewards) and posterior-draw counts are recorded on a checkpoint
grid.

Two execution lanes produce bit-identical metrics: a compiled kernel for the
Bernoulli presets (picked automatically when available) and the pure-Python
policy-object loop below, which also handles arbitrary reward models.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .distributions import ParameterError, RngStream

try:
    from . import _kernels

    KERNELS_AVAILABLE = True
except ImportError:  # pure-Python fallback lane
    _kernels = None
    KERNELS_AVAILABLE = False

__all__ = [
    "KERNELS_AVAILABLE",
    "RewardModel",
    "BanditInstance",
    "ArmState",
    "RunMetrics",
    "make_instance",
    "checkpoint_grid",
    "run_episode",
]


@dataclass(frozen=True)
class RewardModel:
    """Reward distribution with support in [0, 1] and known exact mean.

    Either a Bernoulli(mean) or an arbitrary sampling closure tagged with its
    true mean (used for gap accounting).
    """

    mean: float
    sampler: Callable[[np.random.Generator], float] | None = None

    def __post_init__(self) -> None:
        if not 0.0 <= self.mean <= 1.0:
            raise ParameterError(f"reward mean must be in [0, 1], got {self.mean}")

    @property
    def is_bernoulli(self) -> bool:
        return self.sampler is None

    def draw(self, generator: np.random.Generator) -> float:
        if self.sampler is None:
            return 1.0 if generator.random() < self.mean else 0.0
        x = float(self.sampler(generator))
        if not 0.0 <= x <= 1.0:
            raise ValueError(f"reward {x} outside [0, 1]")
        return x


@dataclass(frozen=True)
class BanditInstance:
    """A K-armed problem: reward models, means, gaps, and the optimal set."""

    arms: tuple[RewardModel, ...]
    means: np.ndarray
    gaps: np.ndarray
    best_mean: float
    optimal_arms: np.ndarray  # indices with zero gap

    @property
    def n_arms(self) -> int:
        return len(self.arms)

    @property
    def n_optimal(self) -> int:
        return len(self.optimal_arms)

    @property
    def is_bernoulli(self) -> bool:
        return all(a.is_bernoulli for a in self.arms)


def make_instance(
    means: Sequence[float],
    model: str | Callable[[float], RewardModel] = "bernoulli",
) -> BanditInstance:
    """Build an instance from arm means.

    ``model`` selects the reward family: the default "bernoulli", or a
    callable mapping a mean to a :class:`RewardModel`.
    """
    if len(means) == 0:
        raise ParameterError("instance needs at least one arm")
    mu = np.asarray(means, dtype=np.float64)
    if np.any((mu < 0.0) | (mu > 1.0)):
        raise ParameterError(f"arm means must lie in [0, 1], got {list(means)}")
    if model == "bernoulli":
        arms = tuple(RewardModel(float(m)) for m in mu)
    elif callable(model):
        arms = tuple(model(float(m)) for m in mu)
    else:
        raise ParameterError(f"unknown reward model family: {model!r}")
    for arm, m in zip(arms, mu):
        if arm.mean != m:
            raise ParameterError("reward model mean disagrees with the declared mean")
    best = float(mu.max())
    gaps = best - mu
    optimal = np.flatnonzero(gaps == 0.0)
    return BanditInstance(arms=arms, means=mu, gaps=gaps, best_mean=best, optimal_arms=optimal)


@dataclass
class ArmState:
    """Per-arm sufficient statistics: pull count and running empirical mean."""

    pulls: int
    mean: float


def checkpoint_grid(horizon: int, points: int = 200) -> np.ndarray:
    """Geometric grid of ~``points`` rounds in [1, horizon], always ending at horizon."""
    if horizon < 1:
        raise ParameterError(f"horizon must be >= 1, got {horizon}")
    if horizon <= points:
        return np.arange(1, horizon + 1, dtype=np.int64)
    g = np.unique(np.round(np.geomspace(1.0, float(horizon), points)).astype(np.int64))
    g[-1] = horizon
    return g


@dataclass
class RunMetrics:
    """Trajectories recorded at checkpoint rounds plus final draw tallies.

    ``draws_*`` carry the logical accounting (for the batched-refresh policy a
    refresh counts its full sample budget); ``draws_physical`` counts actual
    sampler invocations, which differ only in that policy's efficient mode.
    """

    checkpoints: np.ndarray          # (n,) int64 rounds
    regret: np.ndarray               # (n,) float64 cumulative pseudo-regret
    pulls: np.ndarray                # (n, K) int64
    draws_total: np.ndarray          # (n,) int64
    draws_optimal: np.ndarray        # (n,) int64
    draws_suboptimal: np.ndarray     # (n,) int64
    draws_physical: np.ndarray       # (n,) int64
    draws_by_arm: np.ndarray         # (K,) int64, final logical counts
    draws_by_arm_physical: np.ndarray  # (K,) int64, final physical counts

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, RunMetrics):
            return NotImplemented
        return all(
            np.array_equal(getattr(self, f), getattr(other, f))
            for f in (
                "checkpoints", "regret", "pulls", "draws_total", "draws_optimal",
                "draws_suboptimal", "draws_physical", "draws_by_arm",
                "draws_by_arm_physical",
            )
        )

    @property
    def final_regret(self) -> float:
        return float(self.regret[-1])


def _regret_of(pulls: np.ndarray, gaps: np.ndarray) -> float:
    # Ascending sequential sum; the kernels accumulate the same way, so both
    # lanes (and the regret-identity check) agree to the last bit.
    total = 0.0
    for i in range(len(gaps)):
        total += pulls[i] * gaps[i]
    return total


def run_episode(
    instance: BanditInstance,
    policy,
    horizon: int,
    rng: RngStream,
    checkpoints: np.ndarray | None = None,
    use_kernel: bool | None = None,
) -> RunMetrics:
    """Play ``policy`` on ``instance`` for ``horizon`` rounds.

    Requires horizon >= K (each arm is pulled once during initialization).
    ``use_kernel`` overrides the automatic lane choice (True forces the
    compiled kernel, False forces the pure-Python loop).
    """
    K = instance.n_arms
    if horizon < K:
        raise ParameterError(f"horizon {horizon} < number of arms {K}")
    if checkpoints is None:
        checkpoints = checkpoint_grid(horizon)
    checkpoints = np.asarray(checkpoints, dtype=np.int64)

    want_kernel = use_kernel if use_kernel is not None else KERNELS_AVAILABLE
    if want_kernel:
        request = policy.kernel_request()
        if request is not None and instance.is_bernoulli and KERNELS_AVAILABLE:
            return _run_kernel(instance, request, horizon, rng, checkpoints)
        if use_kernel:
            raise ParameterError(
                "compiled kernel unavailable for this policy/instance combination"
            )
    return _run_python(instance, policy, horizon, rng, checkpoints)


def _run_kernel(instance, request, horizon, rng, checkpoints) -> RunMetrics:
    if request["algo"] in ("ts_ma", "ts_td"):
        # The budget and variance numerator are computed here, once, so the
        # kernel consumes exactly the doubles the Python lane would.
        from .policies import sample_budget

        import math

        request = dict(request)
        request["phi"] = sample_budget(horizon, request["alpha"])
        request["var_num"] = math.log(horizon) ** request["alpha"]
    out = _kernels.run_episode_kernel(
        instance.means,
        horizon,
        rng.generator,
        checkpoints,
        request,
    )
    is_opt = np.zeros(instance.n_arms, dtype=bool)
    is_opt[instance.optimal_arms] = True
    return _assemble(instance, checkpoints, out["pulls"], out["draws_log"],
                     out["draws_phys"], out["draws_by_arm"],
                     out["draws_by_arm_phys"], is_opt)


def _assemble(instance, checkpoints, pulls_traj, draws_log_traj, draws_phys_traj,
              draws_by_arm, draws_by_arm_phys, is_opt) -> RunMetrics:
    n = len(checkpoints)
    regret = np.empty(n, dtype=np.float64)
    for j in range(n):
        regret[j] = _regret_of(pulls_traj[j], instance.gaps)
    draws_total = draws_log_traj.sum(axis=1)
    draws_opt = draws_log_traj[:, is_opt].sum(axis=1)
    return RunMetrics(
        checkpoints=checkpoints,
        regret=regret,
        pulls=pulls_traj,
        draws_total=draws_total,
        draws_optimal=draws_opt,
        draws_suboptimal=draws_total - draws_opt,
        draws_physical=draws_phys_traj,
        draws_by_arm=draws_by_arm,
        draws_by_arm_physical=draws_by_arm_phys,
    )


def _run_python(instance, policy, horizon, rng, checkpoints) -> RunMetrics:
    K = instance.n_arms
    n_cp = len(checkpoints)
    pulls = np.zeros(K, dtype=np.int64)
    draws_log = np.zeros(K, dtype=np.int64)
    draws_phys = np.zeros(K, dtype=np.int64)
    pulls_traj = np.zeros((n_cp, K), dtype=np.int64)
    draws_log_traj = np.zeros((n_cp, K), dtype=np.int64)
    draws_phys_traj = np.zeros(n_cp, dtype=np.int64)

    policy.initialize(K, horizon, rng)

    cp_idx = 0

    def record(t: int) -> int:
        nonlocal cp_idx
        while cp_idx < n_cp and checkpoints[cp_idx] == t:
            pulls_traj[cp_idx] = pulls
            draws_log_traj[cp_idx] = draws_log
            draws_phys_traj[cp_idx] = draws_phys.sum()
            cp_idx += 1
        return cp_idx

    generator = rng.generator
    t = 0
    for arm in range(K):  # initialization: each arm once, index order
        t += 1
        reward = instance.arms[arm].draw(generator)
        pulls[arm] += 1
        phys, log = policy.init_update(arm, reward)
        draws_phys += phys
        draws_log += log
        record(t)

    for t in range(K + 1, horizon + 1):
        arm, (phys, log) = policy.select(t)
        draws_phys += phys
        draws_log += log
        reward = instance.arms[arm].draw(generator)
        pulls[arm] += 1
        phys, log = policy.update(arm, reward)
        draws_phys += phys
        draws_log += log
        record(t)

    is_opt = np.zeros(K, dtype=bool)
    is_opt[instance.optimal_arms] = True
    return _assemble(instance, checkpoints, pulls_traj, draws_log_traj,
                     draws_phys_traj, draws_log.copy(), draws_phys.copy(), is_opt)
