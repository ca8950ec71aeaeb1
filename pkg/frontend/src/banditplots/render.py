"""Render the three figure kinds from simulator CSV output.

Aggregation (means, standard errors, draw shares) is recomputed here from
the raw per-replication rows rather than read from summary.csv, so figures
stay correct even when summaries are regenerated with other settings.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
import pandas as pd

FIGURE_KINDS = ("regret_curves", "tstd_draw_bars", "tsma_pct_bars")

_REQUIRED_COLUMNS = [
    "policy_id", "replication", "t", "regret",
    "draws_total", "draws_optimal", "draws_suboptimal",
]

_ALPHA_ID = re.compile(r"^ts-(ma|td)-a(?P<alpha>[0-9.]+)")


@dataclass
class FigureJob:
    kind: str
    inputs: list[Path]
    output: Path
    log_x: bool = False
    labels: list[str] = field(default_factory=list)
    bound: Path | None = None

    def __post_init__(self) -> None:
        if self.kind not in FIGURE_KINDS:
            raise ValueError(f"unknown figure kind {self.kind!r}; choose from {FIGURE_KINDS}")
        if not self.inputs:
            raise ValueError("at least one input CSV is required")
        self.inputs = [Path(p) for p in self.inputs]
        self.output = Path(self.output)
        if self.labels and len(self.labels) != len(self.inputs):
            raise ValueError("--label count must match --in count")


@dataclass
class RenderResult:
    output: Path
    values: dict


def _load(path: Path) -> pd.DataFrame:
    if not path.exists():
        raise ValueError(f"input not found: {path}")
    try:
        df = pd.read_csv(path)
    except pd.errors.EmptyDataError:
        raise ValueError(f"empty input: {path}") from None
    missing = [c for c in _REQUIRED_COLUMNS if c not in df.columns]
    if missing:
        raise ValueError(f"{path}: missing columns {missing}")
    if len(df) == 0:
        raise ValueError(f"empty input: {path}")
    return df


def _labels_for(job: FigureJob) -> list[str]:
    if job.labels:
        return job.labels
    return [p.parent.name or str(p) for p in job.inputs]


def _final_rows(df: pd.DataFrame) -> pd.DataFrame:
    final_t = df["t"].max()
    return df[df["t"] == final_t].sort_values("replication")


def _alpha_of(policy_id: str) -> str | None:
    m = _ALPHA_ID.match(policy_id)
    return m.group("alpha") if m else None


def render(job: FigureJob) -> RenderResult:
    if job.kind == "regret_curves":
        return _render_regret_curves(job)
    if job.kind == "tstd_draw_bars":
        return _render_draw_bars(job, prefix="ts-td")
    return _render_pct_bars(job)


def _render_regret_curves(job: FigureJob) -> RenderResult:
    df = _load(job.inputs[0])
    policies = list(dict.fromkeys(df["policy_id"]))
    alphas = sorted({a for p in policies if (a := _alpha_of(p)) is not None}, key=float)
    baselines = [p for p in policies if _alpha_of(p) is None]
    panels = alphas if alphas else ["all"]

    bound_path = job.bound
    if bound_path is None:
        candidate = job.inputs[0].parent / "lower_bound.csv"
        bound_path = candidate if candidate.exists() else None
    bound = pd.read_csv(bound_path) if bound_path else None

    grouped = df.groupby(["policy_id", "t"])["regret"]
    mean = grouped.mean()
    count = grouped.count()
    std = grouped.std(ddof=1).fillna(0.0)
    se = std / np.sqrt(count)

    fig, axes = plt.subplots(
        1, len(panels), figsize=(5.5 * len(panels), 4.2), sharey=True, squeeze=False
    )
    for ax, panel in zip(axes[0], panels):
        members = baselines + [
            p for p in policies if _alpha_of(p) == panel
        ] if panel != "all" else policies
        for policy in members:
            ts = mean.loc[policy].index.to_numpy()
            m = mean.loc[policy].to_numpy()
            s = se.loc[policy].to_numpy()
            ax.plot(ts, m, label=policy, linewidth=1.2)
            ax.fill_between(ts, m - s, m + s, alpha=0.2)
        if bound is not None:
            ax.plot(bound["t"], bound["value"], "k--", linewidth=1.0,
                    label="asymptotic lower bound")
        if job.log_x:
            ax.set_xscale("log")
        ax.set_xlabel("round")
        ax.set_title("all policies" if panel == "all" else f"alpha = {panel}")
        ax.legend(fontsize=6)
    axes[0][0].set_ylabel("cumulative pseudo-regret")
    fig.tight_layout()
    fig.savefig(job.output, dpi=150)
    plt.close(fig)
    return RenderResult(output=job.output, values={"panels": panels, "policies": policies})


def _render_draw_bars(job: FigureJob, prefix: str) -> RenderResult:
    labels = _labels_for(job)
    totals: dict[str, dict[str, float]] = {}
    for path, label in zip(job.inputs, labels):
        df = _load(path)
        final = _final_rows(df)
        for policy, rows in final.groupby("policy_id", sort=False):
            if not policy.startswith(prefix):
                continue
            totals.setdefault(policy, {})[label] = float(
                np.mean(rows["draws_total"].to_numpy(dtype=np.float64))
            )
    if not totals:
        raise ValueError(f"no {prefix}* policies found in the inputs")

    policies = sorted(totals, key=lambda p: float(_alpha_of(p) or 0.0))
    width = 0.8 / len(labels)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    x = np.arange(len(policies))
    for li, label in enumerate(labels):
        heights = [totals[p].get(label, 0.0) for p in policies]
        ax.bar(x + li * width, heights, width, label=label)
    ax.set_xticks(x + 0.4 - width / 2.0)
    ax.set_xticklabels(policies, fontsize=8)
    ax.set_ylabel("total posterior draws")
    ax.legend()
    fig.tight_layout()
    fig.savefig(job.output, dpi=150)
    plt.close(fig)
    return RenderResult(output=job.output, values=totals)


def _render_pct_bars(job: FigureJob) -> RenderResult:
    labels = _labels_for(job)
    shares: dict[str, dict[str, float]] = {}
    for path, label in zip(job.inputs, labels):
        df = _load(path)
        final = _final_rows(df)
        for policy, rows in final.groupby("policy_id", sort=False):
            if not policy.startswith("ts-ma"):
                continue
            opt = rows["draws_optimal"].to_numpy(dtype=np.int64)
            total = rows["draws_total"].to_numpy(dtype=np.int64)
            # mirror of the summary formula: per-replication percentage in
            # replication order, then the mean
            pct = np.array([
                100.0 * o / t if t > 0 else 0.0 for o, t in zip(opt, total)
            ])
            shares.setdefault(policy, {})[label] = float(pct.mean())
    if not shares:
        raise ValueError("no ts-ma* policies found in the inputs")

    policies = sorted(shares, key=lambda p: float(_alpha_of(p) or 0.0))
    width = 0.8 / len(labels)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    x = np.arange(len(policies))
    for li, label in enumerate(labels):
        heights = [shares[p].get(label, 0.0) for p in policies]
        ax.bar(x + li * width, heights, width, label=label)
    ax.axhline(90.0, color="grey", linestyle=":", linewidth=1.0)
    ax.set_xticks(x + 0.4 - width / 2.0)
    ax.set_xticklabels(policies, fontsize=8)
    ax.set_ylabel("% of draws on optimal arms")
    ax.set_ylim(0, 105)
    ax.legend()
    fig.tight_layout()
    fig.savefig(job.output, dpi=150)
    plt.close(fig)
    return RenderResult(output=job.output, values=shares)
