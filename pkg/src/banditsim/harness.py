"""Experiment orchestration: declarative specs, seeded parallel replications,
and CSV persistence.

Reproducibility contract: a spec fully determines results.csv, byte for byte,
independent of worker count.  Every (policy, replication) pair owns the
stream ``RngStream(seed).split(policy_index, replication_index)``, and rows
are written in (policy, replication, checkpoint) order.
"""
from __future__ import annotations

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .core import KERNELS_AVAILABLE, checkpoint_grid, make_instance, run_episode
from .distributions import ParameterError, RngStream
from .policies import lower_bound_curve, make_policy

__all__ = [
    "PolicyConfig",
    "ExperimentSpec",
    "spec_from_json",
    "load_spec",
    "run_experiment",
    "preset_specs",
    "PRESET_NAMES",
    "RESULTS_COLUMNS",
    "SUMMARY_COLUMNS",
    "default_output_dir",
]

_ALGO_PARAMS = {
    "vanilla_ts_gaussian": (set(), set()),
    "vanilla_ts_beta": (set(), set()),
    "ts_ma": ({"alpha"}, {"mode"}),
    "ts_td": ({"alpha"}, set()),
    "epsilon_ts": ({"epsilon"}, {"prior"}),
    "expts_plus": (set(), set()),
    "kl_ucb_pp": (set(), set()),
}

SUMMARY_COLUMNS = (
    "policy_id",
    "final_regret_mean",
    "final_regret_se",
    "draws_total_mean",
    "pct_draws_optimal_mean",
)


def default_output_dir() -> Path:
    return Path(os.environ.get("BANDITSIM_OUTDIR", "results"))


@dataclass(frozen=True)
class PolicyConfig:
    algo: str
    params: tuple[tuple[str, object], ...] = ()
    id: str | None = None

    @classmethod
    def create(cls, algo: str, id: str | None = None, **params) -> "PolicyConfig":
        if algo not in _ALGO_PARAMS:
            raise ParameterError(f"unknown algorithm: {algo!r}")
        required, optional = _ALGO_PARAMS[algo]
        missing = required - params.keys()
        extra = params.keys() - required - optional
        if missing:
            raise ParameterError(f"{algo}: missing parameters {sorted(missing)}")
        if extra:
            raise ParameterError(f"{algo}: unknown parameters {sorted(extra)}")
        return cls(algo=algo, params=tuple(sorted(params.items())), id=id)

    @classmethod
    def from_dict(cls, d: dict) -> "PolicyConfig":
        if not isinstance(d, dict) or "algo" not in d:
            raise ParameterError(f"policy entry must be an object with an 'algo' key: {d!r}")
        d = dict(d)
        algo = d.pop("algo")
        pid = d.pop("id", None)
        return cls.create(algo, id=pid, **d)

    def to_dict(self) -> dict:
        out = {"algo": self.algo, **dict(self.params)}
        if self.id:
            out["id"] = self.id
        return out

    def make(self):
        return make_policy(self.algo, id=self.id, **dict(self.params))

    @property
    def policy_id(self) -> str:
        return self.make().policy_id


@dataclass
class ExperimentSpec:
    means: list[float]
    policies: list[PolicyConfig]
    horizon: int
    replications: int
    seed: int
    checkpoints: int = 200
    output_dir: Path = field(default_factory=default_output_dir)

    def __post_init__(self) -> None:
        self.output_dir = Path(self.output_dir)
        if self.replications < 1:
            raise ParameterError(f"replications must be >= 1, got {self.replications}")
        if self.horizon < len(self.means):
            raise ParameterError(
                f"horizon {self.horizon} < number of arms {len(self.means)}"
            )
        if not self.policies:
            raise ParameterError("spec needs at least one policy")
        ids = [p.policy_id for p in self.policies]
        if len(set(ids)) != len(ids):
            dupes = sorted({i for i in ids if ids.count(i) > 1})
            raise ParameterError(f"duplicate policy ids: {dupes}")

    def to_dict(self) -> dict:
        return {
            "schema_version": 1,
            "instance": {"means": list(self.means)},
            "policies": [p.to_dict() for p in self.policies],
            "horizon": self.horizon,
            "replications": self.replications,
            "seed": self.seed,
            "checkpoints": self.checkpoints,
            "output_dir": str(self.output_dir),
        }


_SPEC_KEYS = {
    "schema_version", "instance", "policies", "horizon", "replications",
    "seed", "checkpoints", "output_dir",
}


def spec_from_json(doc: dict) -> ExperimentSpec:
    """Parse and validate a spec document.  Unknown keys are rejected."""
    if not isinstance(doc, dict):
        raise ParameterError("spec document must be a JSON object")
    unknown = doc.keys() - _SPEC_KEYS
    if unknown:
        raise ParameterError(f"unknown spec keys: {sorted(unknown)}")
    if doc.get("schema_version") != 1:
        raise ParameterError(
            f"unsupported schema_version {doc.get('schema_version')!r} (expected 1)"
        )
    for key in ("instance", "policies", "horizon", "replications", "seed"):
        if key not in doc:
            raise ParameterError(f"spec is missing required key {key!r}")
    inst = doc["instance"]
    if not isinstance(inst, dict) or set(inst) != {"means"}:
        raise ParameterError("instance must be an object with exactly a 'means' list")
    kwargs = {}
    if "checkpoints" in doc:
        kwargs["checkpoints"] = int(doc["checkpoints"])
    if "output_dir" in doc:
        kwargs["output_dir"] = Path(doc["output_dir"])
    return ExperimentSpec(
        means=[float(m) for m in inst["means"]],
        policies=[PolicyConfig.from_dict(p) for p in doc["policies"]],
        horizon=int(doc["horizon"]),
        replications=int(doc["replications"]),
        seed=int(doc["seed"]),
        **kwargs,
    )


def load_spec(path: str | Path) -> ExperimentSpec:
    with open(path) as fh:
        return spec_from_json(json.load(fh))


# ---------------------------------------------------------------------------
# execution
# ---------------------------------------------------------------------------


def _episode_worker(payload: dict) -> dict:
    instance = make_instance(payload["means"])
    policy = make_policy(payload["algo"], id=payload["id"], **payload["params"])
    rng = RngStream(payload["seed"]).split(payload["policy_index"], payload["rep_index"])
    metrics = run_episode(
        instance,
        policy,
        payload["horizon"],
        rng,
        np.asarray(payload["checkpoints"], dtype=np.int64),
    )
    return {
        "policy_index": payload["policy_index"],
        "rep_index": payload["rep_index"],
        "regret": metrics.regret,
        "pulls": metrics.pulls,
        "draws_total": metrics.draws_total,
        "draws_optimal": metrics.draws_optimal,
        "draws_suboptimal": metrics.draws_suboptimal,
        "draws_physical": metrics.draws_physical,
    }


def _fmt(x: float) -> str:
    return f"{x:.17g}"


RESULTS_COLUMNS = (
    "policy_id", "replication", "t", "regret",
    "draws_total", "draws_optimal", "draws_suboptimal",
)


def run_experiment(spec: ExperimentSpec, jobs: int | None = None) -> Path:
    """Execute all (policy, replication) episodes and persist the results.

    Writes results.csv, summary.csv, manifest.json and (when the instance
    admits it) lower_bound.csv under ``spec.output_dir``.  Returns the
    results.csv path.  Partial outputs are removed on failure.
    """
    instance = make_instance(spec.means)
    cps = checkpoint_grid(spec.horizon, spec.checkpoints)
    K = instance.n_arms
    n_policies = len(spec.policies)
    reps = spec.replications
    if jobs is None:
        jobs = min(8, os.cpu_count() or 1)

    payloads = [
        {
            "means": list(spec.means),
            "algo": cfg.algo,
            "params": dict(cfg.params),
            "id": cfg.id,
            "seed": spec.seed,
            "policy_index": pi,
            "rep_index": ri,
            "horizon": spec.horizon,
            "checkpoints": cps,
        }
        for pi, cfg in enumerate(spec.policies)
        for ri in range(reps)
    ]

    if jobs <= 1 or len(payloads) == 1:
        outcomes = [_episode_worker(p) for p in payloads]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_episode_worker, payloads, chunksize=1))
    by_key = {(o["policy_index"], o["rep_index"]): o for o in outcomes}

    outdir = spec.output_dir
    outdir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    try:
        results_path = outdir / "results.csv"
        with open(results_path, "w", newline="") as fh:
            written.append(results_path)
            header = list(RESULTS_COLUMNS) + [f"pulls_arm_{i}" for i in range(K)]
            fh.write(",".join(header) + "\n")
            for pi, cfg in enumerate(spec.policies):
                pid = cfg.policy_id
                for ri in range(reps):
                    o = by_key[(pi, ri)]
                    for j, t in enumerate(cps):
                        row = [
                            pid, str(ri), str(int(t)), _fmt(o["regret"][j]),
                            str(int(o["draws_total"][j])),
                            str(int(o["draws_optimal"][j])),
                            str(int(o["draws_suboptimal"][j])),
                        ] + [str(int(x)) for x in o["pulls"][j]]
                        fh.write(",".join(row) + "\n")

        summary_path = outdir / "summary.csv"
        with open(summary_path, "w", newline="") as fh:
            written.append(summary_path)
            fh.write(",".join(SUMMARY_COLUMNS) + "\n")
            for pi, cfg in enumerate(spec.policies):
                rows = [by_key[(pi, ri)] for ri in range(reps)]
                final_regret = np.array([r["regret"][-1] for r in rows])
                draws_total = np.array([float(r["draws_total"][-1]) for r in rows])
                pct = np.array([
                    100.0 * r["draws_optimal"][-1] / r["draws_total"][-1]
                    if r["draws_total"][-1] > 0 else 0.0
                    for r in rows
                ])
                se = float(final_regret.std(ddof=1) / math.sqrt(reps)) if reps > 1 else 0.0
                fh.write(",".join([
                    cfg.policy_id,
                    _fmt(float(final_regret.mean())),
                    _fmt(se),
                    _fmt(float(draws_total.mean())),
                    _fmt(float(pct.mean())),
                ]) + "\n")

        lb_note = None
        try:
            curve = lower_bound_curve(instance, cps)
            lb_path = outdir / "lower_bound.csv"
            with open(lb_path, "w", newline="") as fh:
                written.append(lb_path)
                fh.write("t,value\n")
                for t, value in curve:
                    fh.write(f"{t},{_fmt(value)}\n")
        except ValueError as exc:
            lb_note = str(exc)

        manifest_path = outdir / "manifest.json"
        manifest = {
            "schema_version": 1,
            "package_version": __version__,
            "kernels_used": KERNELS_AVAILABLE and instance.is_bernoulli,
            "spec": spec.to_dict(),
            "checkpoint_rounds": len(cps),
            "lower_bound": ("written" if lb_note is None else f"skipped: {lb_note}"),
            "draw_ledger": {
                cfg.policy_id: {
                    "physical_final": [int(by_key[(pi, ri)]["draws_physical"][-1]) for ri in range(reps)],
                    "logical_final": [int(by_key[(pi, ri)]["draws_total"][-1]) for ri in range(reps)],
                }
                for pi, cfg in enumerate(spec.policies)
            },
        }
        with open(manifest_path, "w") as fh:
            written.append(manifest_path)
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except BaseException:
        for path in written:
            try:
                path.unlink()
            except OSError:
                pass
        raise
    return results_path


# ---------------------------------------------------------------------------
# presets reproducing the experimental study
# ---------------------------------------------------------------------------

PRESET_NAMES = ("fig1", "fig2", "fig3")
_DEFAULT_SEED = 20250811
_K = 20
_MEANS_M1 = [0.9] + [0.8] * 19
_MEANS_M10 = [0.9] * 10 + [0.8] * 10


def _fig1_policies() -> list[PolicyConfig]:
    K = _K
    cfgs = [
        PolicyConfig.create("vanilla_ts_gaussian"),
        PolicyConfig.create("vanilla_ts_beta"),
    ]
    for prior in ("gaussian", "beta"):
        for eps, tag in ((1.0 / K, "1overK"), (1.0 / math.sqrt(K), "1oversqrtK"), (1.0, "1")):
            cfgs.append(
                PolicyConfig.create(
                    "epsilon_ts", epsilon=eps, prior=prior, id=f"eps-ts-{prior}-{tag}"
                )
            )
    cfgs.append(PolicyConfig.create("expts_plus"))
    cfgs.append(PolicyConfig.create("kl_ucb_pp"))
    for alpha in (0.0, 0.8, 1.0):
        cfgs.append(PolicyConfig.create("ts_ma", alpha=alpha))
    for alpha in (0.0, 0.8, 1.0):
        cfgs.append(PolicyConfig.create("ts_td", alpha=alpha))
    return cfgs


def preset_specs(
    name: str,
    horizon: int | None = None,
    reps: int | None = None,
    seed: int | None = None,
    out_dir: str | Path | None = None,
) -> list[tuple[str, ExperimentSpec]]:
    """Build the spec(s) for a named preset.

    Defaults: 20 Bernoulli arms (optimal mean 0.9, suboptimal 0.8), horizon
    1e5 (desk scale; the study's sample-count figures used 1e6, available via
    ``horizon``), 50 replications.
    """
    if name not in PRESET_NAMES:
        raise ParameterError(f"unknown preset {name!r}; choose from {PRESET_NAMES}")
    horizon = int(horizon) if horizon else 100_000
    reps = int(reps) if reps else 50
    seed = _DEFAULT_SEED if seed is None else int(seed)
    base = Path(out_dir) if out_dir else default_output_dir() / name

    def spec(means, policies, sub: str | None) -> ExperimentSpec:
        return ExperimentSpec(
            means=means,
            policies=policies,
            horizon=horizon,
            replications=reps,
            seed=seed,
            output_dir=base / sub if sub else base,
        )

    if name == "fig1":
        return [("fig1", spec(_MEANS_M1, _fig1_policies(), None))]
    if name == "fig2":
        policies = [PolicyConfig.create("ts_td", alpha=a) for a in (0.0, 0.8, 1.0)]
        return [
            ("m1", spec(_MEANS_M1, policies, "m1")),
            ("m10", spec(_MEANS_M10, policies, "m10")),
        ]
    policies = [PolicyConfig.create("ts_ma", alpha=a) for a in (0.8, 1.0)]
    return [
        ("m1", spec(_MEANS_M1, policies, "m1")),
        ("m10", spec(_MEANS_M10, policies, "m10")),
    ]
