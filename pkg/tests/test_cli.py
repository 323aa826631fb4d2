import json

import numpy as np
import pytest

from dispatchkit.cli import main
from dispatchkit.scenario import write_scenario

from .conftest import planted_scenario, table_scenario


@pytest.fixture(scope="module")
def table_manifest(tmp_path_factory):
    from dispatchkit.scenario import split_scenario

    scenario = split_scenario(table_scenario(), seed=0)
    out = tmp_path_factory.mktemp("table")
    return str(write_scenario(scenario, out))


@pytest.fixture(scope="module")
def planted_manifest(tmp_path_factory):
    scenario = planted_scenario(n=600, dim=8, seed=13)
    out = tmp_path_factory.mktemp("planted")
    return str(write_scenario(scenario, out))


def test_analyze_reports_reference_reduction(table_manifest, tmp_path):
    rc = main(["analyze", "--scenario", table_manifest, "--out-dir", str(tmp_path)])
    assert rc == 0
    report = json.loads((tmp_path / "analysis.json").read_text())
    assert report["ideal_accuracy"] == pytest.approx(0.9470, abs=1e-12)
    assert report["per_model_baselines"][2]["ideal_reduction_percent"] == pytest.approx(
        62.11, abs=0.05
    )
    assert (tmp_path / "run_manifest.json").exists()


def test_analyze_all_correct(tmp_path):
    from dispatchkit.scenario import SyntheticSpec, generate_synthetic, split_scenario

    spec = SyntheticSpec(
        num_samples=100, num_models=2, feature_dim=3, costs=(1.0, 2.0), noise_rate=0.0, seed=0,
        tier_fractions=(1.0, 0.0),
    )
    scenario = split_scenario(generate_synthetic(spec), seed=0)
    manifest = write_scenario(scenario, tmp_path / "bundle")
    rc = main(["analyze", "--scenario", str(manifest), "--out-dir", str(tmp_path / "out")])
    assert rc == 0
    report = json.loads((tmp_path / "out" / "analysis.json").read_text())
    assert report["ideal_accuracy"] == 1.0


def test_analyze_malformed_manifest(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    rc = main(["analyze", "--scenario", str(bad), "--out-dir", str(tmp_path / "o")])
    assert rc == 1
    assert "error" in capsys.readouterr().err


def test_train_zero_penalties_head_unchanged(planted_manifest, tmp_path):
    rc = main(
        [
            "train",
            "--scenario",
            planted_manifest,
            "--penalties",
            "0,0,0,0,0,0",
            "--scheme",
            "INS",
            "--out-dir",
            str(tmp_path),
            "--seed",
            "3",
        ]
    )
    assert rc == 0
    metrics = json.loads((tmp_path / "metrics.json").read_text())
    # warmup epoch still runs plain CE, but the penalized epochs are all zero loss
    assert all(l == 0.0 for l in metrics["train_loss"][1:])


def test_train_out_of_range_penalty(planted_manifest, tmp_path, capsys):
    rc = main(
        [
            "train", "--scenario", planted_manifest, "--penalties", "150,1,1,1,1,1",
            "--out-dir", str(tmp_path),
        ]
    )
    assert rc == 1
    assert "range" in capsys.readouterr().err


def test_train_penalty_count_mismatch(planted_manifest, tmp_path, capsys):
    rc = main(
        ["train", "--scenario", planted_manifest, "--penalties", "1,2", "--out-dir", str(tmp_path)]
    )
    assert rc == 1


def test_explore_deterministic_and_defaults_recorded(planted_manifest, tmp_path):
    args = [
        "explore", "--scenario", planted_manifest, "--pop", "6", "--gens", "2",
        "--seed", "7", "--train-epochs", "4",
    ]
    rc1 = main(args + ["--out-dir", str(tmp_path / "a")])
    rc2 = main(args + ["--out-dir", str(tmp_path / "b")])
    assert rc1 == rc2 == 0
    for name in ("archive.csv", "transcript.csv", "hypervolume.csv", "front_plot.dat"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    manifest = json.loads((tmp_path / "a" / "run_manifest.json").read_text())
    assert manifest["parameters"]["pop"] == 6
    assert manifest["parameters"]["seed"] == 7


def test_report_roundtrip(tmp_path):
    src = tmp_path / "front.csv"
    src.write_text(
        "tag,accuracy,mflops_per_image\nb,0.9,12.0\na,0.95,20.0\n"
    )
    assert main(["report", "--front", str(src), "--format", "json",
                 "--out", str(tmp_path / "front.json")]) == 0
    assert main(["report", "--front", str(tmp_path / "front.json"), "--format", "csv",
                 "--out", str(tmp_path / "round.csv")]) == 0
    original = src.read_text().strip().splitlines()
    roundtrip = (tmp_path / "round.csv").read_text().strip().splitlines()
    assert [l.split(",") for l in roundtrip] == [l.split(",") for l in original]


def test_report_gnuplot_sorted(tmp_path):
    src = tmp_path / "front.csv"
    src.write_text("tag,accuracy,mflops_per_image\nx,0.95,20.0\ny,0.9,5.0\n")
    assert main(["report", "--front", str(src), "--format", "gnuplot",
                 "--out", str(tmp_path / "front.dat")]) == 0
    lines = [
        l for l in (tmp_path / "front.dat").read_text().splitlines()
        if l and not l.startswith("#")
    ]
    costs = [float(l.split()[0]) for l in lines]
    assert costs == sorted(costs)


def test_report_empty_front(tmp_path):
    src = tmp_path / "front.csv"
    src.write_text("tag,accuracy,mflops_per_image\n")
    assert main(["report", "--front", str(src), "--format", "csv",
                 "--out", str(tmp_path / "o.csv")]) == 0
    assert (tmp_path / "o.csv").read_text().strip() == "tag,accuracy,mflops_per_image"


def test_generate_then_validate(tmp_path, capsys):
    rc = main(
        [
            "generate", "--out-dir", str(tmp_path / "synth"), "--samples", "120",
            "--models", "2", "--dim", "4", "--costs", "2,8", "--seed", "5",
        ]
    )
    assert rc == 0
    rc = main(["validate", "--scenario", str(tmp_path / "synth" / "manifest.json")])
    assert rc == 0
    assert "ok:" in capsys.readouterr().out
