"""Secondary acceptance: every figure kind renders from real preset output,
and the optimal-share bars agree with summary.csv to 1e-12.

The simulator is driven through its published interfaces only: the
``banditsim`` CLI and the CSV files it writes.
"""
import csv
import shutil
import subprocess

import pytest

from banditplots import FigureJob, render

banditsim_cli = shutil.which("banditsim")
pytestmark = pytest.mark.skipif(
    banditsim_cli is None, reason="banditsim CLI is not installed"
)


@pytest.fixture(scope="module")
def preset_outputs(tmp_path_factory):
    root = tmp_path_factory.mktemp("presets")
    fig1 = root / "fig1"
    fig3 = root / "fig3"
    for args in (
        ["preset", "fig1", "--horizon", "3000", "--reps", "4", "--seed", "11",
         "--out", str(fig1)],
        ["preset", "fig3", "--horizon", "3000", "--reps", "4", "--seed", "11",
         "--out", str(fig3)],
    ):
        subprocess.run([banditsim_cli, *args], check=True, capture_output=True)
    return {"fig1": fig1, "fig3": fig3}


def test_regret_curves_render_from_preset(preset_outputs, tmp_path):
    out = tmp_path / "fig1.png"
    result = render(FigureJob(
        kind="regret_curves",
        inputs=[preset_outputs["fig1"] / "results.csv"],
        output=out,
        log_x=True,
    ))
    assert out.exists() and out.stat().st_size > 0
    assert result.values["panels"] == ["0", "0.8", "1"]


def test_tstd_draw_bars_render_from_preset(preset_outputs, tmp_path):
    # fig1 includes the duelling policies, so its results drive the bars
    out = tmp_path / "draws.png"
    result = render(FigureJob(
        kind="tstd_draw_bars",
        inputs=[preset_outputs["fig1"] / "results.csv"],
        output=out,
        labels=["m=1"],
    ))
    assert out.exists() and out.stat().st_size > 0
    assert set(result.values) == {"ts-td-a0", "ts-td-a0.8", "ts-td-a1"}


def test_tsma_pct_bars_match_summary(preset_outputs, tmp_path):
    out = tmp_path / "pct.png"
    inputs = [
        preset_outputs["fig3"] / "m1" / "results.csv",
        preset_outputs["fig3"] / "m10" / "results.csv",
    ]
    result = render(FigureJob(
        kind="tsma_pct_bars", inputs=inputs, output=out, labels=["m1", "m10"]
    ))
    assert out.exists() and out.stat().st_size > 0
    for label, subdir in (("m1", "m1"), ("m10", "m10")):
        with open(preset_outputs["fig3"] / subdir / "summary.csv", newline="") as fh:
            summary = {r["policy_id"]: r for r in csv.DictReader(fh)}
        for policy, per_label in result.values.items():
            plotted = per_label[label]
            reference = float(summary[policy]["pct_draws_optimal_mean"])
            assert abs(plotted - reference) <= 1e-12
