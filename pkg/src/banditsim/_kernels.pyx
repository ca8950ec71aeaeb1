# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled episode loops for Bernoulli-reward instances.

Every arithmetic expression here mirrors the pure-Python lane (distributions
/ policies / core) operation for operation, and random numbers are pulled
from the same numpy bit generator through its C API, so both lanes return
bit-identical metrics.  Keep the two in sync when touching either.
"""
import numpy as np

cimport numpy as cnp
from cpython.pycapsule cimport PyCapsule_GetPointer
from libc.math cimport (INFINITY, ceil, erfc, exp, expm1, log, pow, sqrt,
                        M_E, M_PI)
from numpy.random cimport bitgen_t
from numpy.random.c_distributions cimport (random_beta,
                                           random_standard_normal,
                                           random_standard_uniform)

cdef double SQRT2 = sqrt(2.0)
cdef double INV_SQRT_2PI = 1.0 / sqrt(2.0 * M_PI)


cdef bitgen_t *_bitgen(object generator):
    capsule = generator.bit_generator.capsule
    return <bitgen_t *> PyCapsule_GetPointer(capsule, "BitGenerator")


# ---------------------------------------------------------------------------
# special functions (mirrors of distributions.py)
# ---------------------------------------------------------------------------


cdef inline double _normal_cdf(double z) noexcept nogil:
    return 0.5 * erfc(-z / SQRT2)


cdef inline double _normal_sf(double z) noexcept nogil:
    return 0.5 * erfc(z / SQRT2)


cdef double _ppnd16(double p) noexcept nogil:
    cdef double q = p - 0.5
    cdef double r, num, den, z
    if q <= 0.425 and q >= -0.425:
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
    r = sqrt(-log(r))
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


cdef double _normal_quantile(double p) noexcept nogil:
    cdef double z = _ppnd16(p)
    cdef double pdf = INV_SQRT_2PI * exp(-0.5 * z * z)
    if pdf > 0.0:
        if p <= 0.5:
            z -= (_normal_cdf(z) - p) / pdf
        else:
            z += (_normal_sf(z) - (1.0 - p)) / pdf
    return z


cdef double _max_gauss_z(double u, double count) noexcept nogil:
    cdef double lu, r
    if u <= 0.0:
        u = 5e-324
    lu = log(u) / count
    r = exp(lu)
    if r > 1.0 - 1e-12:
        return -_normal_quantile(-expm1(lu))
    return _normal_quantile(r)


cdef double _bernoulli_kl(double p, double q) noexcept nogil:
    cdef double t1, t2, kl
    if p == q:
        return 0.0
    if q <= 0.0 or q >= 1.0:
        return INFINITY
    t1 = 0.0 if p == 0.0 else p * log(p / q)
    t2 = 0.0 if p == 1.0 else (1.0 - p) * log((1.0 - p) / (1.0 - q))
    kl = t1 + t2
    return kl if kl > 0.0 else 0.0


cdef double _kl_upper_inv(double p, double budget) noexcept nogil:
    cdef double lo, hi, mid
    cdef int it
    if budget == 0.0 or p >= 1.0:
        return p if p < 1.0 else 1.0
    lo = p
    hi = 1.0
    for it in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if _bernoulli_kl(p, mid) <= budget:
            lo = mid
        else:
            hi = mid
    return lo


cdef double _kl_lower_inv(double p, double budget) noexcept nogil:
    cdef double lo, hi, mid
    cdef int it
    if budget == 0.0 or p <= 0.0:
        return p if p > 0.0 else 0.0
    lo = 0.0
    hi = p
    for it in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if _bernoulli_kl(p, mid) <= budget:
            hi = mid
        else:
            lo = mid
    return hi


cdef double _expts_value(double u, double anchor, double strength) noexcept nogil:
    cdef double budget
    if strength == 0.0:
        return 1.0 if u >= 0.5 else 0.0
    if u == 0.5:
        return anchor
    if u > 0.5:
        budget = -log(2.0 * (1.0 - u)) / strength
        return _kl_upper_inv(anchor, budget)
    if u <= 0.0:
        return 0.0
    budget = -log(2.0 * u) / strength
    return _kl_lower_inv(anchor, budget)


# test hooks: bit-equality of the compiled mirrors vs the Python originals
def check_normal_quantile(double p):
    return _normal_quantile(p)


def check_normal_cdf(double z):
    return _normal_cdf(z)


def check_max_gauss_z(double u, double count):
    return _max_gauss_z(u, count)


def check_bernoulli_kl(double p, double q):
    return _bernoulli_kl(p, q)


def check_kl_upper_inverse(double p, double budget):
    return _kl_upper_inv(p, budget)


def check_kl_lower_inverse(double p, double budget):
    return _kl_lower_inv(p, budget)


def check_expts_value(double u, double anchor, double strength):
    return _expts_value(u, anchor, strength)


# ---------------------------------------------------------------------------
# episode scaffolding
# ---------------------------------------------------------------------------


cdef inline double _bernoulli_reward(bitgen_t *bg, double mean) noexcept nogil:
    return 1.0 if random_standard_uniform(bg) < mean else 0.0


cdef inline void _observe(long long[::1] pulls, double[::1] mu, int arm,
                          double reward) noexcept nogil:
    pulls[arm] += 1
    mu[arm] += (reward - mu[arm]) / pulls[arm]


cdef inline int _record(long long t, long long[::1] cps, int cp_idx, int ncp, int K,
                        long long[::1] pulls, long long[::1] dlog,
                        long long dphys_total,
                        long long[:, ::1] pulls_traj, long long[:, ::1] dlog_traj,
                        long long[::1] dphys_traj) noexcept nogil:
    cdef int i
    while cp_idx < ncp and cps[cp_idx] == t:
        for i in range(K):
            pulls_traj[cp_idx, i] = pulls[i]
            dlog_traj[cp_idx, i] = dlog[i]
        dphys_traj[cp_idx] = dphys_total
        cp_idx += 1
    return cp_idx


def run_episode_kernel(object means, long long horizon, object generator,
                       object checkpoints, dict request):
    """Run one episode natively; returns the raw trajectory arrays."""
    mu_true_arr = np.ascontiguousarray(means, dtype=np.float64)
    cps_arr = np.ascontiguousarray(checkpoints, dtype=np.int64)
    cdef double[::1] mu_true = mu_true_arr
    cdef long long[::1] cps = cps_arr
    cdef int K = mu_true.shape[0]
    cdef int ncp = cps.shape[0]

    pulls_traj_arr = np.zeros((ncp, K), dtype=np.int64)
    dlog_traj_arr = np.zeros((ncp, K), dtype=np.int64)
    dphys_traj_arr = np.zeros(ncp, dtype=np.int64)
    pulls_arr = np.zeros(K, dtype=np.int64)
    mu_arr = np.zeros(K, dtype=np.float64)
    dphys_arr = np.zeros(K, dtype=np.int64)
    dlog_arr = np.zeros(K, dtype=np.int64)

    cdef long long[:, ::1] pulls_traj = pulls_traj_arr
    cdef long long[:, ::1] dlog_traj = dlog_traj_arr
    cdef long long[::1] dphys_traj = dphys_traj_arr
    cdef long long[::1] pulls = pulls_arr
    cdef double[::1] mu = mu_arr
    cdef long long[::1] dphys = dphys_arr
    cdef long long[::1] dlog = dlog_arr

    cdef bitgen_t *bg = _bitgen(generator)

    algo = request["algo"]
    if algo == "vanilla_ts":
        _run_vanilla(bg, mu_true, horizon, request["beta_prior"], cps, ncp, K,
                     pulls, mu, dphys, dlog, pulls_traj, dlog_traj, dphys_traj)
    elif algo == "ts_ma":
        _run_ts_ma(bg, mu_true, horizon, request["phi"], request["var_num"],
                   request["naive"], cps, ncp, K,
                   pulls, mu, dphys, dlog, pulls_traj, dlog_traj, dphys_traj)
    elif algo == "ts_td":
        _run_ts_td(bg, mu_true, horizon, request["phi"], request["var_num"],
                   cps, ncp, K,
                   pulls, mu, dphys, dlog, pulls_traj, dlog_traj, dphys_traj)
    elif algo == "epsilon_ts":
        _run_epsilon_ts(bg, mu_true, horizon, request["epsilon"],
                        request["beta_prior"], cps, ncp, K,
                        pulls, mu, dphys, dlog, pulls_traj, dlog_traj, dphys_traj)
    elif algo == "expts_plus":
        _run_expts_plus(bg, mu_true, horizon, cps, ncp, K,
                        pulls, mu, dphys, dlog, pulls_traj, dlog_traj, dphys_traj)
    elif algo == "kl_ucb_pp":
        _run_kl_ucb_pp(bg, mu_true, horizon, cps, ncp, K,
                       pulls, mu, dphys, dlog, pulls_traj, dlog_traj, dphys_traj)
    else:
        raise ValueError(f"unknown kernel algo: {algo!r}")

    return {
        "pulls": pulls_traj_arr,
        "draws_log": dlog_traj_arr,
        "draws_phys": dphys_traj_arr,
        "draws_by_arm": dlog_arr,
        "draws_by_arm_phys": dphys_arr,
    }


cdef inline long long _sum_ll(long long[::1] a, int K) noexcept nogil:
    cdef long long s = 0
    cdef int i
    for i in range(K):
        s += a[i]
    return s


cdef void _run_vanilla(bitgen_t *bg, double[::1] mu_true, long long horizon,
                       bint beta_prior, long long[::1] cps, int ncp, int K,
                       long long[::1] pulls, double[::1] mu,
                       long long[::1] dphys, long long[::1] dlog,
                       long long[:, ::1] pulls_traj, long long[:, ::1] dlog_traj,
                       long long[::1] dphys_traj):
    cdef int cp_idx = 0, arm, i, ai
    cdef long long t
    cdef double r, v, best, a, b

    for arm in range(K):
        r = _bernoulli_reward(bg, mu_true[arm])
        _observe(pulls, mu, arm, r)
        if beta_prior:
            a = mu[arm] * pulls[arm] + 1.0
            b = (1.0 - mu[arm]) * pulls[arm] + 1.0
            v = random_beta(bg, a, b)
        else:
            v = mu[arm] + sqrt(1.0 / pulls[arm]) * random_standard_normal(bg)
        dphys[arm] += 1
        dlog[arm] += 1
        cp_idx = _record(arm + 1, cps, cp_idx, ncp, K, pulls, dlog,
                         _sum_ll(dphys, K), pulls_traj, dlog_traj, dphys_traj)

    for t in range(K + 1, horizon + 1):
        best = -INFINITY
        ai = 0
        for i in range(K):
            if beta_prior:
                a = mu[i] * pulls[i] + 1.0
                b = (1.0 - mu[i]) * pulls[i] + 1.0
                v = random_beta(bg, a, b)
            else:
                v = mu[i] + sqrt(1.0 / pulls[i]) * random_standard_normal(bg)
            dphys[i] += 1
            dlog[i] += 1
            if v > best:
                best = v
                ai = i
        r = _bernoulli_reward(bg, mu_true[ai])
        _observe(pulls, mu, ai, r)
        cp_idx = _record(t, cps, cp_idx, ncp, K, pulls, dlog,
                         _sum_ll(dphys, K), pulls_traj, dlog_traj, dphys_traj)


cdef void _run_ts_ma(bitgen_t *bg, double[::1] mu_true, long long horizon,
                     long long phi, double var_num, bint naive,
                     long long[::1] cps, int ncp, int K,
                     long long[::1] pulls, double[::1] mu,
                     long long[::1] dphys, long long[::1] dlog,
                     long long[:, ::1] pulls_traj, long long[:, ::1] dlog_traj,
                     long long[::1] dphys_traj):
    cdef int cp_idx = 0, arm, i, ai
    cdef long long t, h
    cdef double r, best, z, zmax, u
    theta_arr = np.zeros(K, dtype=np.float64)
    cdef double[::1] theta = theta_arr
    cdef double phi_d = <double> phi

    for arm in range(K):
        r = _bernoulli_reward(bg, mu_true[arm])
        _observe(pulls, mu, arm, r)
        # refresh
        if naive:
            zmax = -INFINITY
            for h in range(phi):
                z = random_standard_normal(bg)
                if z > zmax:
                    zmax = z
            theta[arm] = mu[arm] + sqrt(var_num / pulls[arm]) * zmax
            dphys[arm] += phi
        else:
            u = random_standard_uniform(bg)
            theta[arm] = mu[arm] + sqrt(var_num / pulls[arm]) * _max_gauss_z(u, phi_d)
            dphys[arm] += 1
        dlog[arm] += phi
        cp_idx = _record(arm + 1, cps, cp_idx, ncp, K, pulls, dlog,
                         _sum_ll(dphys, K), pulls_traj, dlog_traj, dphys_traj)

    for t in range(K + 1, horizon + 1):
        best = -INFINITY
        ai = 0
        for i in range(K):
            if theta[i] > best:
                best = theta[i]
                ai = i
        r = _bernoulli_reward(bg, mu_true[ai])
        _observe(pulls, mu, ai, r)
        if naive:
            zmax = -INFINITY
            for h in range(phi):
                z = random_standard_normal(bg)
                if z > zmax:
                    zmax = z
            theta[ai] = mu[ai] + sqrt(var_num / pulls[ai]) * zmax
            dphys[ai] += phi
        else:
            u = random_standard_uniform(bg)
            theta[ai] = mu[ai] + sqrt(var_num / pulls[ai]) * _max_gauss_z(u, phi_d)
            dphys[ai] += 1
        dlog[ai] += phi
        cp_idx = _record(t, cps, cp_idx, ncp, K, pulls, dlog,
                         _sum_ll(dphys, K), pulls_traj, dlog_traj, dphys_traj)


cdef void _run_ts_td(bitgen_t *bg, double[::1] mu_true, long long horizon,
                     long long phi, double var_num,
                     long long[::1] cps, int ncp, int K,
                     long long[::1] pulls, double[::1] mu,
                     long long[::1] dphys, long long[::1] dlog,
                     long long[:, ::1] pulls_traj, long long[:, ::1] dlog_traj,
                     long long[::1] dphys_traj):
    cdef int cp_idx = 0, arm, i, ai
    cdef long long t
    cdef double r, v, best
    used_arr = np.zeros(K, dtype=np.int64)
    psi_arr = np.zeros(K, dtype=np.float64)
    cdef long long[::1] used = used_arr
    cdef double[::1] psi = psi_arr

    for arm in range(K):
        r = _bernoulli_reward(bg, mu_true[arm])
        _observe(pulls, mu, arm, r)
        cp_idx = _record(arm + 1, cps, cp_idx, ncp, K, pulls, dlog,
                         _sum_ll(dphys, K), pulls_traj, dlog_traj, dphys_traj)

    for t in range(K + 1, horizon + 1):
        best = -INFINITY
        ai = 0
        for i in range(K):
            if used[i] <= phi - 1:
                v = mu[i] + sqrt(var_num / pulls[i]) * random_standard_normal(bg)
                used[i] += 1
                if v > psi[i]:
                    psi[i] = v
                dphys[i] += 1
                dlog[i] += 1
            else:
                v = psi[i]
            if v > best:
                best = v
                ai = i
        r = _bernoulli_reward(bg, mu_true[ai])
        _observe(pulls, mu, ai, r)
        used[ai] = 0
        psi[ai] = 0.0
        cp_idx = _record(t, cps, cp_idx, ncp, K, pulls, dlog,
                         _sum_ll(dphys, K), pulls_traj, dlog_traj, dphys_traj)


cdef void _run_epsilon_ts(bitgen_t *bg, double[::1] mu_true, long long horizon,
                          double epsilon, bint beta_prior,
                          long long[::1] cps, int ncp, int K,
                          long long[::1] pulls, double[::1] mu,
                          long long[::1] dphys, long long[::1] dlog,
                          long long[:, ::1] pulls_traj, long long[:, ::1] dlog_traj,
                          long long[::1] dphys_traj):
    cdef int cp_idx = 0, arm, i, ai
    cdef long long t
    cdef double r, v, best, a, b
    coins_arr = np.zeros(K, dtype=np.float64)
    cdef double[::1] coins = coins_arr

    for arm in range(K):
        r = _bernoulli_reward(bg, mu_true[arm])
        _observe(pulls, mu, arm, r)
        if random_standard_uniform(bg) < epsilon:
            if beta_prior:
                a = mu[arm] * pulls[arm] + 1.0
                b = (1.0 - mu[arm]) * pulls[arm] + 1.0
                v = random_beta(bg, a, b)
            else:
                v = mu[arm] + sqrt(1.0 / pulls[arm]) * random_standard_normal(bg)
            dphys[arm] += 1
            dlog[arm] += 1
        cp_idx = _record(arm + 1, cps, cp_idx, ncp, K, pulls, dlog,
                         _sum_ll(dphys, K), pulls_traj, dlog_traj, dphys_traj)

    for t in range(K + 1, horizon + 1):
        for i in range(K):
            coins[i] = random_standard_uniform(bg)
        best = -INFINITY
        ai = 0
        for i in range(K):
            if coins[i] < epsilon:
                if beta_prior:
                    a = mu[i] * pulls[i] + 1.0
                    b = (1.0 - mu[i]) * pulls[i] + 1.0
                    v = random_beta(bg, a, b)
                else:
                    v = mu[i] + sqrt(1.0 / pulls[i]) * random_standard_normal(bg)
                dphys[i] += 1
                dlog[i] += 1
            else:
                v = mu[i]
            if v > best:
                best = v
                ai = i
        r = _bernoulli_reward(bg, mu_true[ai])
        _observe(pulls, mu, ai, r)
        cp_idx = _record(t, cps, cp_idx, ncp, K, pulls, dlog,
                         _sum_ll(dphys, K), pulls_traj, dlog_traj, dphys_traj)


cdef void _run_expts_plus(bitgen_t *bg, double[::1] mu_true, long long horizon,
                          long long[::1] cps, int ncp, int K,
                          long long[::1] pulls, double[::1] mu,
                          long long[::1] dphys, long long[::1] dlog,
                          long long[:, ::1] pulls_traj, long long[:, ::1] dlog_traj,
                          long long[::1] dphys_traj):
    cdef int cp_idx = 0, arm, i, ai
    cdef long long t
    cdef double r, v, best, u
    cdef double p0 = 1.0 / K
    coins_arr = np.zeros(K, dtype=np.float64)
    cdef double[::1] coins = coins_arr

    for arm in range(K):
        r = _bernoulli_reward(bg, mu_true[arm])
        _observe(pulls, mu, arm, r)
        if random_standard_uniform(bg) < p0:
            u = random_standard_uniform(bg)
            v = _expts_value(u, mu[arm], <double> (pulls[arm] - 1))
            dphys[arm] += 1
            dlog[arm] += 1
        cp_idx = _record(arm + 1, cps, cp_idx, ncp, K, pulls, dlog,
                         _sum_ll(dphys, K), pulls_traj, dlog_traj, dphys_traj)

    for t in range(K + 1, horizon + 1):
        for i in range(K):
            coins[i] = random_standard_uniform(bg)
        best = -INFINITY
        ai = 0
        for i in range(K):
            if coins[i] < p0:
                u = random_standard_uniform(bg)
                v = _expts_value(u, mu[i], <double> (pulls[i] - 1))
                dphys[i] += 1
                dlog[i] += 1
            else:
                v = mu[i]
            if v > best:
                best = v
                ai = i
        r = _bernoulli_reward(bg, mu_true[ai])
        _observe(pulls, mu, ai, r)
        cp_idx = _record(t, cps, cp_idx, ncp, K, pulls, dlog,
                         _sum_ll(dphys, K), pulls_traj, dlog_traj, dphys_traj)


cdef inline double _klucb_budget(long long horizon, int K, long long n) noexcept nogil:
    cdef double x = (<double> horizon) / (<double> (K * n))
    cdef double inner = log(x)
    cdef double outer
    if inner < 0.0:
        inner = 0.0
    outer = log(x * (inner * inner + 1.0))
    if outer < 0.0:
        outer = 0.0
    return outer / (<double> n)


cdef void _run_kl_ucb_pp(bitgen_t *bg, double[::1] mu_true, long long horizon,
                         long long[::1] cps, int ncp, int K,
                         long long[::1] pulls, double[::1] mu,
                         long long[::1] dphys, long long[::1] dlog,
                         long long[:, ::1] pulls_traj, long long[:, ::1] dlog_traj,
                         long long[::1] dphys_traj):
    cdef int cp_idx = 0, arm, i, ai
    cdef long long t
    cdef double r, best
    index_arr = np.zeros(K, dtype=np.float64)
    cdef double[::1] index = index_arr

    for arm in range(K):
        r = _bernoulli_reward(bg, mu_true[arm])
        _observe(pulls, mu, arm, r)
        index[arm] = _kl_upper_inv(mu[arm], _klucb_budget(horizon, K, pulls[arm]))
        cp_idx = _record(arm + 1, cps, cp_idx, ncp, K, pulls, dlog,
                         _sum_ll(dphys, K), pulls_traj, dlog_traj, dphys_traj)

    for t in range(K + 1, horizon + 1):
        best = -INFINITY
        ai = 0
        for i in range(K):
            if index[i] > best:
                best = index[i]
                ai = i
        r = _bernoulli_reward(bg, mu_true[ai])
        _observe(pulls, mu, ai, r)
        index[ai] = _kl_upper_inv(mu[ai], _klucb_budget(horizon, K, pulls[ai]))
        cp_idx = _record(t, cps, cp_idx, ncp, K, pulls, dlog,
                         _sum_ll(dphys, K), pulls_traj, dlog_traj, dphys_traj)
