import csv
import json
import math
from pathlib import Path

import numpy as np
import pytest

from banditsim.cli import main as cli_main
from banditsim.distributions import ParameterError
from banditsim.harness import (
    ExperimentSpec,
    PolicyConfig,
    default_output_dir,
    load_spec,
    preset_specs,
    run_experiment,
    spec_from_json,
)


def small_spec(tmp_path, **overrides) -> ExperimentSpec:
    kwargs = dict(
        means=[0.9, 0.8, 0.7],
        policies=[
            PolicyConfig.create("vanilla_ts_gaussian"),
            PolicyConfig.create("ts_ma", alpha=0.8),
        ],
        horizon=60,
        replications=2,
        seed=5,
        output_dir=tmp_path / "out",
    )
    kwargs.update(overrides)
    return ExperimentSpec(**kwargs)


# ---------------------------------------------------------------------------
# spec parsing
# ---------------------------------------------------------------------------


def valid_doc():
    return {
        "schema_version": 1,
        "instance": {"means": [0.9, 0.8]},
        "policies": [{"algo": "vanilla_ts_gaussian"}, {"algo": "ts_td", "alpha": 0.5}],
        "horizon": 100,
        "replications": 2,
        "seed": 3,
    }


def test_spec_round_trip():
    spec = spec_from_json(valid_doc())
    assert spec.horizon == 100
    assert [p.algo for p in spec.policies] == ["vanilla_ts_gaussian", "ts_td"]
    again = spec_from_json(spec.to_dict())
    assert again.policies == spec.policies


def test_spec_rejects_unknown_top_level_key():
    doc = valid_doc()
    doc["horizons"] = 10
    with pytest.raises(ParameterError, match="unknown spec keys"):
        spec_from_json(doc)


def test_spec_rejects_unknown_instance_key():
    doc = valid_doc()
    doc["instance"] = {"means": [0.5], "variance": 1}
    with pytest.raises(ParameterError):
        spec_from_json(doc)


def test_spec_rejects_unknown_policy_key():
    doc = valid_doc()
    doc["policies"] = [{"algo": "ts_ma", "alpha": 0.5, "phi": 3}]
    with pytest.raises(ParameterError, match="unknown parameters"):
        spec_from_json(doc)


def test_spec_rejects_missing_required_policy_param():
    with pytest.raises(ParameterError, match="missing parameters"):
        PolicyConfig.create("ts_td")


def test_spec_rejects_bad_schema_version():
    doc = valid_doc()
    doc["schema_version"] = 2
    with pytest.raises(ParameterError, match="schema_version"):
        spec_from_json(doc)


def test_spec_rejects_duplicate_policy_ids(tmp_path):
    with pytest.raises(ParameterError, match="duplicate"):
        small_spec(tmp_path, policies=[
            PolicyConfig.create("ts_ma", alpha=0.5, id="same"),
            PolicyConfig.create("ts_td", alpha=0.5, id="same"),
        ])


def test_default_output_dir_env(monkeypatch):
    monkeypatch.setenv("BANDITSIM_OUTDIR", "/tmp/bandit-out")
    assert default_output_dir() == Path("/tmp/bandit-out")


# ---------------------------------------------------------------------------
# run_experiment outputs
# ---------------------------------------------------------------------------


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_run_experiment_outputs(tmp_path):
    spec = small_spec(tmp_path)
    results = run_experiment(spec, jobs=1)
    outdir = spec.output_dir
    assert results == outdir / "results.csv"
    assert (outdir / "summary.csv").exists()
    assert (outdir / "manifest.json").exists()
    assert (outdir / "lower_bound.csv").exists()

    rows = read_csv(results)
    n_cp = 60  # horizon <= 200 so every round is a checkpoint
    assert len(rows) == 2 * 2 * n_cp
    header = list(rows[0])
    assert header == [
        "policy_id", "replication", "t", "regret",
        "draws_total", "draws_optimal", "draws_suboptimal",
        "pulls_arm_0", "pulls_arm_1", "pulls_arm_2",
    ]
    from banditsim import make_instance

    gaps = make_instance(spec.means).gaps
    for row in rows:
        pulls = [int(row[f"pulls_arm_{i}"]) for i in range(3)]
        assert sum(pulls) == int(row["t"])
        expected = 0.0
        for i in range(3):
            expected += pulls[i] * gaps[i]
        assert float(row["regret"]) == expected
        assert int(row["draws_total"]) == int(row["draws_optimal"]) + int(row["draws_suboptimal"])

    summary = read_csv(outdir / "summary.csv")
    assert [r["policy_id"] for r in summary] == ["vanilla-ts-gaussian", "ts-ma-a0.8"]
    finals = [r for r in rows if r["policy_id"] == "vanilla-ts-gaussian" and r["t"] == "60"]
    mean = np.mean([float(r["regret"]) for r in finals])
    assert float(summary[0]["final_regret_mean"]) == pytest.approx(mean, rel=1e-15)

    manifest = json.loads((outdir / "manifest.json").read_text())
    assert manifest["spec"]["horizon"] == 60
    ledger = manifest["draw_ledger"]["ts-ma-a0.8"]
    assert ledger["physical_final"] == [60, 60]


def test_run_experiment_is_byte_identical_across_runs_and_jobs(tmp_path):
    spec_a = small_spec(tmp_path, output_dir=tmp_path / "a")
    spec_b = small_spec(tmp_path, output_dir=tmp_path / "b")
    spec_c = small_spec(tmp_path, output_dir=tmp_path / "c")
    pa = run_experiment(spec_a, jobs=1)
    pb = run_experiment(spec_b, jobs=1)
    pc = run_experiment(spec_c, jobs=2)
    assert pa.read_bytes() == pb.read_bytes() == pc.read_bytes()


def test_run_experiment_seed_changes_results(tmp_path):
    pa = run_experiment(small_spec(tmp_path, output_dir=tmp_path / "a"), jobs=1)
    pb = run_experiment(small_spec(tmp_path, seed=6, output_dir=tmp_path / "b"), jobs=1)
    assert pa.read_bytes() != pb.read_bytes()


def test_adding_a_policy_does_not_perturb_existing_rows(tmp_path):
    base = small_spec(tmp_path, output_dir=tmp_path / "a")
    extended = small_spec(
        tmp_path,
        output_dir=tmp_path / "b",
        policies=[
            PolicyConfig.create("vanilla_ts_gaussian"),
            PolicyConfig.create("ts_ma", alpha=0.8),
            PolicyConfig.create("kl_ucb_pp"),
        ],
    )
    rows_a = read_csv(run_experiment(base, jobs=1))
    rows_b = read_csv(run_experiment(extended, jobs=1))
    prefix = [r for r in rows_b if r["policy_id"] != "kl-ucb-pp"]
    assert prefix == rows_a


def test_degenerate_single_arm_smoke(tmp_path):
    spec = ExperimentSpec(
        means=[0.5],
        policies=[PolicyConfig.create("vanilla_ts_gaussian")],
        horizon=10,
        replications=1,
        seed=1,
        output_dir=tmp_path / "smoke",
    )
    rows = read_csv(run_experiment(spec, jobs=1))
    assert len(rows) == 10
    assert all(float(r["regret"]) == 0.0 for r in rows)


def test_lower_bound_skipped_for_degenerate_instance(tmp_path):
    spec = small_spec(tmp_path, means=[1.0, 0.5], output_dir=tmp_path / "deg")
    run_experiment(spec, jobs=1)
    assert not (spec.output_dir / "lower_bound.csv").exists()
    manifest = json.loads((spec.output_dir / "manifest.json").read_text())
    assert manifest["lower_bound"].startswith("skipped")


def test_partial_outputs_removed_on_failure(tmp_path, monkeypatch):
    spec = small_spec(tmp_path, output_dir=tmp_path / "boom")
    import banditsim.harness as hx

    def broken_curve(instance, grid):
        raise RuntimeError("injected failure")

    monkeypatch.setattr(hx, "lower_bound_curve", broken_curve)
    with pytest.raises(RuntimeError, match="injected failure"):
        run_experiment(spec, jobs=1)
    assert not (spec.output_dir / "results.csv").exists()
    assert not (spec.output_dir / "summary.csv").exists()


# ---------------------------------------------------------------------------
# presets
# ---------------------------------------------------------------------------


def test_preset_fig1_shape():
    ((label, spec),) = preset_specs("fig1", horizon=500, reps=3)
    assert label == "fig1"
    assert len(spec.means) == 20 and spec.means.count(0.9) == 1
    ids = [p.policy_id for p in spec.policies]
    assert len(ids) == 16 and len(set(ids)) == 16
    assert "eps-ts-gaussian-1oversqrtK" in ids
    assert "ts-ma-a0.8" in ids and "ts-td-a1" in ids


def test_preset_fig2_and_fig3_instances():
    specs = dict(preset_specs("fig2", horizon=500, reps=2))
    assert specs["m1"].means.count(0.9) == 1
    assert specs["m10"].means.count(0.9) == 10
    assert all(p.algo == "ts_td" for p in specs["m1"].policies)
    specs = dict(preset_specs("fig3", horizon=500, reps=2))
    assert all(p.algo == "ts_ma" for p in specs["m1"].policies)
    with pytest.raises(ParameterError):
        preset_specs("fig9")


# ---------------------------------------------------------------------------
# CLI
# ---------------------------------------------------------------------------


def test_cli_run_spec_file(tmp_path, capsys):
    doc = valid_doc()
    doc["output_dir"] = str(tmp_path / "cli-out")
    spec_path = tmp_path / "spec.json"
    spec_path.write_text(json.dumps(doc))
    assert cli_main(["run", str(spec_path), "--jobs", "1"]) == 0
    out = capsys.readouterr().out.strip()
    assert out.endswith("results.csv")
    assert Path(out).exists()


def test_cli_run_reports_bad_spec(tmp_path, capsys):
    spec_path = tmp_path / "bad.json"
    spec_path.write_text(json.dumps({"schema_version": 1}))
    assert cli_main(["run", str(spec_path)]) == 1
    assert "error:" in capsys.readouterr().err


def test_cli_preset(tmp_path, capsys):
    code = cli_main([
        "preset", "fig3", "--horizon", "300", "--reps", "2",
        "--out", str(tmp_path / "fig3"), "--jobs", "1",
    ])
    assert code == 0
    assert (tmp_path / "fig3" / "m1" / "results.csv").exists()
    assert (tmp_path / "fig3" / "m10" / "summary.csv").exists()


def test_cli_bounds(capsys):
    assert cli_main(["bounds", "--delta", "0.1", "--horizon", "100000", "--alpha", "0"]) == 0
    out = capsys.readouterr().out
    assert "pull-count form" in out and "leading coeff ratio" in out


def test_cli_bounds_csv(tmp_path):
    out = tmp_path / "bounds.csv"
    assert cli_main(["bounds", "--delta", "0.1", "--horizon", "10000",
                     "--alpha", "0.8", "--out", str(out)]) == 0
    rows = read_csv(out)
    assert list(rows[0]) == [
        "arm", "delta", "T", "alpha", "bound_term_log", "bound_term_const", "bound_total",
    ]
    assert len(rows) == 1
    row = rows[0]
    assert float(row["bound_total"]) == pytest.approx(
        float(row["bound_term_log"]) + float(row["bound_term_const"]))
    assert float(row["delta"]) == pytest.approx(0.1)


def test_cli_rejects_unknown_flags():
    with pytest.raises(SystemExit) as exc:
        cli_main(["preset", "fig1", "--banana", "2"])
    assert exc.value.code != 0


def test_cli_rejects_unknown_preset():
    with pytest.raises(SystemExit):
        cli_main(["preset", "fig7"])


def test_cli_verify_quick():
    assert cli_main(["verify", "--trials", "20000", "--seed", "3"]) == 0
