"""Command-line interface.

Subcommands: ``run`` a JSON experiment spec, ``preset`` for the canned study
reproductions, ``verify`` for the built-in numerical self-checks, and
``bounds`` to print the regret-bound report for one gap.
"""
from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .distributions import (
    GaussianParams,
    MaxGaussianParams,
    RngStream,
    bernoulli_kl,
    kl_upper_inverse,
    normal_cdf,
    normal_quantile,
    sample_max_gaussian,
    sample_max_gaussian_naive,
)
from .harness import (
    PRESET_NAMES,
    default_output_dir,
    load_spec,
    preset_specs,
    run_experiment,
)
from .verification import (
    Lemma1Estimate,
    lemma1_estimator,
    lemma1_pull_threshold,
    leading_coefficient_log_ratio,
    prior_art_bound,
    prior_art_log_leading,
    theorem1_bound,
    ts_ma_pull_threshold,
    ts_td_pull_threshold,
)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="banditsim",
        description="Multi-armed bandit simulator and experiment harness.",
    )
    parser.add_argument("--version", action="version", version=f"banditsim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment from a JSON spec file")
    p_run.add_argument("spec", type=Path, help="path to the spec JSON")
    p_run.add_argument("--jobs", type=int, default=None, help="worker processes (default: up to 8)")
    p_run.add_argument("--out", type=Path, default=None, help="override the spec's output directory")

    p_preset = sub.add_parser("preset", help="run a canned experiment preset")
    p_preset.add_argument("name", choices=PRESET_NAMES)
    p_preset.add_argument("--horizon", type=int, default=None)
    p_preset.add_argument("--reps", type=int, default=None)
    p_preset.add_argument("--seed", type=int, default=None)
    p_preset.add_argument("--out", type=Path, default=None)
    p_preset.add_argument("--jobs", type=int, default=None)

    p_verify = sub.add_parser("verify", help="run the numerical self-check suites")
    p_verify.add_argument("--trials", type=int, default=200_000,
                          help="Monte Carlo trials per estimate (default 200000)")
    p_verify.add_argument("--seed", type=int, default=7)

    p_bounds = sub.add_parser("bounds", help="print the regret-bound report for one gap")
    p_bounds.add_argument("--delta", type=float, required=True)
    p_bounds.add_argument("--horizon", type=int, required=True)
    p_bounds.add_argument("--alpha", type=float, required=True)
    p_bounds.add_argument("--out", type=Path, default=None,
                          help="also write the per-arm bound rows as CSV")
    return parser


def _cmd_run(args) -> int:
    spec = load_spec(args.spec)
    if args.out is not None:
        spec.output_dir = args.out
    path = run_experiment(spec, jobs=args.jobs)
    print(path)
    return 0


def _cmd_preset(args) -> int:
    specs = preset_specs(args.name, horizon=args.horizon, reps=args.reps,
                         seed=args.seed, out_dir=args.out)
    for label, spec in specs:
        path = run_experiment(spec, jobs=args.jobs)
        print(f"{label}: {path}")
    return 0


def _two_sample_ks(a: np.ndarray, b: np.ndarray) -> float:
    data = np.concatenate([a, b])
    order = np.argsort(data, kind="mergesort")
    flags = np.concatenate([np.zeros(len(a)), np.ones(len(b))])[order]
    cdf_a = np.cumsum(flags == 0) / len(a)
    cdf_b = np.cumsum(flags == 1) / len(b)
    return float(np.abs(cdf_a - cdf_b).max())


def _cmd_verify(args) -> int:
    rng = RngStream(args.seed)
    failures = 0

    def report(name: str, ok: bool, detail: str) -> None:
        nonlocal failures
        print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
        if not ok:
            failures += 1

    # quantile/CDF round trip
    grid = np.concatenate([
        np.logspace(-10, math.log10(0.5), 1000),
        1.0 - np.logspace(-10, math.log10(0.5), 1000),
    ])
    worst = max(abs(normal_cdf(normal_quantile(float(p))) - float(p)) for p in grid)
    report("quantile round trip", worst <= 1e-9, f"max |cdf(q(p)) - p| = {worst:.3e}")

    # KL upper inverse (budgets capped below KL(p, 1-), where the inverse
    # is resolvable in double precision)
    worst = 0.0
    for p in (0.0, 0.1, 0.3, 0.5, 0.7, 0.9, 0.99):
        cap = bernoulli_kl(p, 1.0 - 1e-6)
        for c in (1e-6, 0.01, 0.1, 0.5, 1.0, 2.0):
            if c > cap:
                continue
            a = kl_upper_inverse(p, c)
            worst = max(worst, abs(bernoulli_kl(p, a) - c))
    analytic = max(
        abs(kl_upper_inverse(0.0, c) - (1.0 - math.exp(-c))) for c in (0.01, 0.5, 2.0)
    )
    report("KL inversions", worst <= 1e-9 and analytic <= 1e-9,
           f"max |KL - budget| = {worst:.3e}, analytic gap = {analytic:.3e}")

    # max-of-count sampler vs brute force (two-sample KS at significance 0.01)
    n = 20_000
    ok = True
    details = []
    for count in (1, 2, 10):
        params = MaxGaussianParams(GaussianParams(0.0, 1.0), count)
        a = np.array([sample_max_gaussian(params, rng) for _ in range(n)])
        b = np.array([sample_max_gaussian_naive(params, rng) for _ in range(n)])
        stat = _two_sample_ks(a, b)
        crit = math.sqrt(-math.log(0.005) / 2.0) * math.sqrt(2.0 / n)
        ok &= stat < crit
        details.append(f"count={count}: D={stat:.4f} (crit {crit:.4f})")
    report("max-Gaussian sampler", ok, "; ".join(details))

    # reciprocal-probability regimes
    mu1, delta, horizon = 0.9, 0.1, 10_000
    ok = True
    details = []
    for s in (1, 25):
        est = lemma1_estimator(s, delta, horizon, mu1, args.trials, rng)
        ok &= est.estimate <= 29.0 + 3.0 * est.std_error
        details.append(f"s={s}: {est.estimate:.3f} (se {est.std_error:.3f}) <= 29")
    s_big = math.ceil(lemma1_pull_threshold(delta, horizon))
    est = lemma1_estimator(s_big, delta, horizon, mu1, args.trials, rng)
    limit = 180.0 / (horizon * delta * delta)
    ok &= est.estimate <= limit + 3.0 * est.std_error
    details.append(f"s={s_big}: {est.estimate:.2e} <= {limit:.3f}")
    report("reciprocal-probability regimes", ok, "; ".join(details))

    # coefficient comparison and vacuity of the prior bound
    ratio_log = leading_coefficient_log_ratio()
    vacuous = prior_art_bound(0.5, 10**6) > 10**6
    report("bound comparison", ratio_log > 0.0 and vacuous,
           f"log coeff ratio = {ratio_log:.3f}, prior leading term exceeds T at T=1e6: {vacuous}")

    # Gaussian concentration / anti-concentration bracket
    z = 1.0
    draws = rng.generator.standard_normal(100_000)
    emp = float((draws > z).mean())
    se = math.sqrt(emp * (1 - emp) / len(draws))
    lo = (1.0 / math.sqrt(2 * math.pi)) * z / (z * z + 1.0) * math.exp(-z * z / 2.0)
    hi = 0.5 * math.exp(-z * z / 2.0)
    report("tail bracket", lo - 3 * se <= emp <= hi + 3 * se,
           f"P(Z>1) = {emp:.4f} in [{lo:.4f} - 3se, {hi:.4f} + 3se]")

    print(f"{'OK' if failures == 0 else 'FAILED'}: {failures} failing suite(s)")
    return 0 if failures == 0 else 1


def _cmd_bounds(args) -> int:
    delta, horizon, alpha = args.delta, args.horizon, args.alpha
    b1 = theorem1_bound(delta, horizon)
    lead = 1270.0 * math.log(horizon * delta * delta + 100.0 ** (1.0 / 3.0)) / delta
    print(f"delta={delta:g} horizon={horizon} alpha={alpha:g}")
    print(f"regret bound          : {b1:.6g}  (log term {lead:.6g}, const {b1 - lead:.6g})")
    print(f"pull-count form       : {b1 / delta:.6g}")
    print(f"prior leading term    : exp({prior_art_log_leading(delta, horizon):.6g})"
          f" ~ {prior_art_bound(delta, horizon):.6g}")
    print(f"leading coeff ratio   : prior/new = exp({leading_coefficient_log_ratio():.6g})")
    print(f"aggregation threshold : {ts_ma_pull_threshold(delta, horizon, alpha)}")
    print(f"duelling threshold    : {ts_td_pull_threshold(delta, horizon, alpha):.6g}")
    if args.out is not None:
        import csv

        from .core import make_instance
        from .verification import BoundReport, bound_report

        # two-arm instance with the gap exactly equal to delta
        report = bound_report(make_instance([delta, 0.0]), horizon, alpha=alpha)
        with open(args.out, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=BoundReport.CSV_COLUMNS)
            writer.writeheader()
            writer.writerows(report.csv_rows())
        print(f"wrote {args.out}")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "preset":
            return _cmd_preset(args)
        if args.command == "verify":
            return _cmd_verify(args)
        if args.command == "bounds":
            return _cmd_bounds(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
