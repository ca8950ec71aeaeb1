"""Samplers and special functions shared by every bandit policy.

Everything here is deterministic given an :class:`RngStream`: the same seed
always yields the same draw sequence.  The compiled kernels re-implement the
deterministic math below with identical arithmetic so that both execution
lanes consume the random bitstream the same way and return the same doubles.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "DomainError",
    "ParameterError",
    "GaussianParams",
    "MaxGaussianParams",
    "BetaParams",
    "ExpTsParams",
    "RngStream",
    "sample_gaussian",
    "sample_max_gaussian",
    "sample_max_gaussian_naive",
    "sample_beta",
    "sample_expts",
    "normal_cdf",
    "normal_sf",
    "normal_quantile",
    "bernoulli_kl",
    "kl_upper_inverse",
    "kl_lower_inverse",
]

_SQRT2 = math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


class ParameterError(ValueError):
    """Distribution parameters violate their constraints."""


class DomainError(ValueError):
    """Function argument outside the mathematical domain."""


# ---------------------------------------------------------------------------
# parameter records
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GaussianParams:
    """Normal distribution with mean ``mean`` and variance ``variance`` (> 0)."""

    mean: float
    variance: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.mean) and math.isfinite(self.variance)):
            raise ParameterError(f"non-finite Gaussian parameters ({self.mean}, {self.variance})")
        if self.variance <= 0.0:
            raise ParameterError(f"variance must be > 0, got {self.variance}")


@dataclass(frozen=True)
class MaxGaussianParams:
    """Distribution of the maximum of ``count`` i.i.d. draws from ``base``."""

    base: GaussianParams
    count: int

    def __post_init__(self) -> None:
        if self.count < 1:
            raise ParameterError(f"count must be >= 1, got {self.count}")


@dataclass(frozen=True)
class BetaParams:
    a: float
    b: float

    def __post_init__(self) -> None:
        if not (self.a > 0.0 and self.b > 0.0):
            raise ParameterError(f"Beta parameters must be positive, got ({self.a}, {self.b})")


@dataclass(frozen=True)
class ExpTsParams:
    """Two-sided KL-shaped sampling distribution around ``anchor``.

    ``strength`` is the exponent factor (the pull count minus one); at
    strength 0 the distribution degenerates to equal point masses at 0 and 1.
    """

    anchor: float
    strength: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.anchor <= 1.0:
            raise ParameterError(f"anchor must be in [0, 1], got {self.anchor}")
        if not self.strength >= 0.0:
            raise ParameterError(f"strength must be >= 0, got {self.strength}")


# ---------------------------------------------------------------------------
# random streams
# ---------------------------------------------------------------------------


@dataclass
class RngStream:
    """Seedable random stream, splittable into independent child streams.

    Children are derived counter-style from ``(entropy, spawn_key)``, so
    ``RngStream(seed).split(i, j)`` is independent of any sibling and stable
    under changes elsewhere in the program.
    """

    seed: int | None = None
    _seq: np.random.SeedSequence = field(default=None, repr=False)
    generator: np.random.Generator = field(default=None, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self._seq is None:
            self._seq = np.random.SeedSequence(self.seed)
        if self.generator is None:
            self.generator = np.random.Generator(np.random.PCG64(self._seq))

    def split(self, *key: int) -> "RngStream":
        """Child stream addressed by ``key`` (e.g. policy index, replication)."""
        child = np.random.SeedSequence(
            entropy=self._seq.entropy, spawn_key=tuple(self._seq.spawn_key) + tuple(key)
        )
        return RngStream(seed=self.seed, _seq=child)


# ---------------------------------------------------------------------------
# normal distribution
# ---------------------------------------------------------------------------


def normal_cdf(z: float) -> float:
    """Standard normal CDF via the complementary error function."""
    if not math.isfinite(z):
        raise DomainError(f"normal_cdf requires finite z, got {z}")
    return 0.5 * math.erfc(-z / _SQRT2)


def normal_sf(z: float) -> float:
    """Standard normal survival function 1 - CDF(z), accurate in the tail."""
    if not math.isfinite(z):
        raise DomainError(f"normal_sf requires finite z, got {z}")
    return 0.5 * math.erfc(z / _SQRT2)


def _ppnd16(p: float) -> float:
    # Wichura's AS 241 (PPND16) rational approximation of the normal quantile.
    q = p - 0.5
    if abs(q) <= 0.425:
        r = 0.180625 - q * q
        num = (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r
               + 6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r
               + 1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r
               + 1.3314166789178437745e2) * r + 3.3871328727963666080e0)
        den = (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r
               + 3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r
               + 5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r
               + 4.2313330701600911252e1) * r + 1.0)
        return q * num / den
    r = p if q < 0.0 else 1.0 - p
    r = math.sqrt(-math.log(r))
    if r <= 5.0:
        r -= 1.6
        num = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r
               + 2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r
               + 3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r
               + 4.63033784615654529590e0) * r + 1.42343711074968357734e0)
        den = (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r
               + 1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r
               + 6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r
               + 2.05319162663775882187e0) * r + 1.0)
    else:
        r -= 5.0
        num = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r
               + 1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r
               + 2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r
               + 5.46378491116411436990e0) * r + 6.65790464350110377720e0)
        den = (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r
               + 1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r
               + 1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r
               + 5.99832206555887937690e-1) * r + 1.0)
    z = num / den
    return -z if q < 0.0 else z


def normal_quantile(p: float) -> float:
    """Inverse standard normal CDF.

    AS 241 rational approximation refined by one Newton step against the
    erfc-based CDF; the residual is evaluated on the smaller tail so the
    correction stays accurate arbitrarily close to 0 and 1.
    """
    if not 0.0 < p < 1.0:
        raise DomainError(f"normal_quantile requires 0 < p < 1, got {p}")
    z = _ppnd16(p)
    pdf = _INV_SQRT_2PI * math.exp(-0.5 * z * z)
    if pdf > 0.0:
        if p <= 0.5:
            z -= (normal_cdf(z) - p) / pdf
        else:
            z += (normal_sf(z) - (1.0 - p)) / pdf
    return z


def sample_gaussian(p: GaussianParams, rng: RngStream) -> float:
    """One draw from N(mean, variance)."""
    return p.mean + math.sqrt(p.variance) * rng.generator.standard_normal()


def _max_std_gaussian_z(u: float, count: int) -> float:
    """Quantile of the max of ``count`` standard normals at probability u.

    The max has CDF Phi(z)^count, so the draw is Phi^{-1}(u^{1/count}).
    u^{1/count} is evaluated as exp(log(u)/count); once that lands within
    1e-12 of 1 the complementary expression -expm1(log(u)/count) feeds the
    mirrored quantile to dodge catastrophic cancellation (count can reach
    ~1e5, pushing u^{1/count} to within an ulp of 1).
    """
    if u <= 0.0:
        u = 5e-324
    lu = math.log(u) / count
    r = math.exp(lu)
    if r > 1.0 - 1e-12:
        return -normal_quantile(-math.expm1(lu))
    return normal_quantile(r)


def sample_max_gaussian(p: MaxGaussianParams, rng: RngStream) -> float:
    """One draw distributed as the max of ``count`` i.i.d. N(mean, variance).

    Inverse-CDF construction: a single uniform replaces ``count`` draws.
    """
    u = rng.generator.random()
    return p.base.mean + math.sqrt(p.base.variance) * _max_std_gaussian_z(u, p.count)


def sample_max_gaussian_naive(p: MaxGaussianParams, rng: RngStream) -> float:
    """Max of ``count`` explicit Gaussian draws (the brute-force construction)."""
    z = rng.generator.standard_normal(p.count)
    return p.base.mean + math.sqrt(p.base.variance) * float(z.max())


def sample_beta(p: BetaParams, rng: RngStream) -> float:
    """One Beta(a, b) draw."""
    return float(rng.generator.beta(p.a, p.b))


# ---------------------------------------------------------------------------
# Bernoulli KL divergence and inverses
# ---------------------------------------------------------------------------


def _check_unit(x: float, name: str) -> None:
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"{name} must be in [0, 1], got {x}")


def bernoulli_kl(p: float, q: float) -> float:
    """KL divergence between Bernoulli(p) and Bernoulli(q).

    Conventions: 0*ln(0/x) = 0, and KL(p, q) = +inf when q is 0 or 1 while
    p differs from q.
    """
    _check_unit(p, "p")
    _check_unit(q, "q")
    if p == q:
        return 0.0
    if q <= 0.0 or q >= 1.0:
        return math.inf
    t1 = 0.0 if p == 0.0 else p * math.log(p / q)
    t2 = 0.0 if p == 1.0 else (1.0 - p) * math.log((1.0 - p) / (1.0 - q))
    kl = t1 + t2
    # for subnormal-scale p, q the dominant term can round to zero and leave
    # a negative residue; the divergence itself is never negative
    return kl if kl > 0.0 else 0.0


def kl_upper_inverse(p: float, budget: float) -> float:
    """Largest a in [p, 1] with KL(p, a) <= budget, by bisection.

    Converges to |KL(p, a) - budget| <= 1e-9 unless the solution sits so
    close to 1 that a single float step moves the divergence by more than
    that (the bracket then collapses to adjacent floats, the best any double
    arithmetic can do); a saturated budget returns the float just below 1.
    """
    _check_unit(p, "p")
    if not budget >= 0.0:
        raise DomainError(f"budget must be >= 0, got {budget}")
    if budget == 0.0 or p >= 1.0:
        return p if p < 1.0 else 1.0
    lo = p
    hi = 1.0
    resolved = False
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            resolved = True
            break
        if bernoulli_kl(p, mid) <= budget:
            lo = mid
        else:
            hi = mid
    assert resolved or abs(bernoulli_kl(p, lo) - budget) <= 1e-9, (
        f"kl_upper_inverse failed to converge for p={p}, budget={budget}"
    )
    return lo


def kl_lower_inverse(p: float, budget: float) -> float:
    """Smallest-side inverse: the a in [0, p] with KL(p, a) = budget."""
    _check_unit(p, "p")
    if not budget >= 0.0:
        raise DomainError(f"budget must be >= 0, got {budget}")
    if budget == 0.0 or p <= 0.0:
        return p if p > 0.0 else 0.0
    lo = 0.0
    hi = p
    resolved = False
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            resolved = True
            break
        if bernoulli_kl(p, mid) <= budget:
            hi = mid
        else:
            lo = mid
    assert resolved or abs(bernoulli_kl(p, hi) - budget) <= 1e-9, (
        f"kl_lower_inverse failed to converge for p={p}, budget={budget}"
    )
    return hi


# ---------------------------------------------------------------------------
# ExpTS+ sampling distribution
# ---------------------------------------------------------------------------


def _expts_value(u: float, anchor: float, strength: float) -> float:
    # Inverse transform of the two-sided CDF
    #   F(x) = 1 - 0.5*exp(-strength*KL(anchor, x))  for x >= anchor
    #   F(x) =     0.5*exp(-strength*KL(anchor, x))  for x <= anchor
    if strength == 0.0:
        # F degenerates to half point masses at each endpoint.
        return 1.0 if u >= 0.5 else 0.0
    if u == 0.5:
        return anchor
    if u > 0.5:
        budget = -math.log(2.0 * (1.0 - u)) / strength
        return kl_upper_inverse(anchor, budget)
    if u <= 0.0:
        return 0.0
    budget = -math.log(2.0 * u) / strength
    return kl_lower_inverse(anchor, budget)


def sample_expts(p: ExpTsParams, rng: RngStream) -> float:
    """Inverse-transform draw from the ExpTS+ sampling distribution."""
    u = rng.generator.random()
    return _expts_value(u, p.anchor, p.strength)
