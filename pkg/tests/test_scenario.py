import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dispatchkit.scenario import (
    ScenarioError,
    SyntheticSpec,
    generate_synthetic,
    load_scenario,
    split_scenario,
    validate_scenario,
    write_scenario,
)

from .conftest import table_scenario


def _write_bundle(tmp_path, features, correctness, models, extractor_dim=None, splits=None):
    n, d = features.shape
    feat_path = tmp_path / "features.f32le"
    feat_path.write_bytes(np.asarray(features, dtype="<f4").tobytes())
    corr_path = tmp_path / "correctness.csv"
    np.savetxt(corr_path, correctness, fmt="%d", delimiter=",")
    manifest = {
        "name": "toy",
        "extractor": {
            "name": "ext",
            "mflops_per_image": 1.0,
            "feature_dim": extractor_dim if extractor_dim is not None else d,
        },
        "models": models,
        "features": {"path": "features.f32le", "format": "f32le", "rows": n, "dim": d},
        "correctness": {"path": "correctness.csv", "format": "csv"},
    }
    if splits is not None:
        manifest["splits"] = splits
    path = tmp_path / "manifest.json"
    path.write_text(json.dumps(manifest))
    return path


def two_model_bundle(tmp_path, correctness=None):
    rng = np.random.default_rng(0)
    features = rng.normal(size=(4, 2)).astype(np.float32)
    if correctness is None:
        correctness = np.array([[1, 1], [0, 1], [1, 0], [0, 0]])
    models = [
        {"name": "small", "mflops_per_image": 2.0},
        {"name": "big", "mflops_per_image": 9.0},
    ]
    return _write_bundle(tmp_path, features, correctness, models)


def test_load_minimal(tmp_path):
    scenario = load_scenario(two_model_bundle(tmp_path))
    assert scenario.num_samples == 4
    assert scenario.num_models == 2
    assert scenario.feature_dim == 2


def test_load_missing_manifest(tmp_path):
    with pytest.raises(ScenarioError, match="not found"):
        load_scenario(tmp_path / "nope.json")


def test_load_nonbinary_correctness(tmp_path):
    path = two_model_bundle(tmp_path, correctness=np.array([[1, 2], [0, 1], [1, 0], [0, 0]]))
    with pytest.raises(ScenarioError, match="non-binary"):
        load_scenario(path)


def test_load_sorts_models_by_cost(tmp_path):
    rng = np.random.default_rng(1)
    features = rng.normal(size=(3, 2)).astype(np.float32)
    correctness = np.ones((3, 3), dtype=int)
    models = [
        {"name": "c", "mflops_per_image": 21.83},
        {"name": "a", "mflops_per_image": 5.9},
        {"name": "b", "mflops_per_image": 13.57},
    ]
    scenario = load_scenario(_write_bundle(tmp_path, features, correctness, models))
    assert [m.cost_mflops for m in scenario.models] == [5.9, 13.57, 21.83]
    assert scenario.original_model_order == ("c", "a", "b")


def test_load_duplicate_name(tmp_path):
    rng = np.random.default_rng(1)
    features = rng.normal(size=(3, 2)).astype(np.float32)
    correctness = np.ones((3, 2), dtype=int)
    models = [
        {"name": "same", "mflops_per_image": 1.0},
        {"name": "same", "mflops_per_image": 2.0},
    ]
    with pytest.raises(ScenarioError, match="duplicate"):
        load_scenario(_write_bundle(tmp_path, features, correctness, models))


def test_load_single_model_rejected(tmp_path):
    rng = np.random.default_rng(1)
    features = rng.normal(size=(3, 2)).astype(np.float32)
    correctness = np.ones((3, 1), dtype=int)
    models = [{"name": "only", "mflops_per_image": 1.0}]
    with pytest.raises(ScenarioError):
        load_scenario(_write_bundle(tmp_path, features, correctness, models))


def test_load_nonfinite_feature(tmp_path):
    features = np.array([[1.0, np.inf], [0.0, 1.0]], dtype=np.float32)
    correctness = np.ones((2, 2), dtype=int)
    models = [
        {"name": "a", "mflops_per_image": 1.0},
        {"name": "b", "mflops_per_image": 2.0},
    ]
    with pytest.raises(ScenarioError, match="non-finite"):
        load_scenario(_write_bundle(tmp_path, features, correctness, models))


def test_roundtrip_bytes_exact(tmp_path):
    scenario = split_scenario(table_scenario(), seed=5)
    manifest = write_scenario(scenario, tmp_path / "bundle")
    reloaded = load_scenario(manifest)
    assert reloaded.features.tobytes() == scenario.features.astype("<f4").tobytes()
    assert np.array_equal(reloaded.correctness, scenario.correctness)
    for split in ("train", "val", "test"):
        assert np.array_equal(reloaded.splits[split], scenario.splits[split])


def test_validate_wellformed(small_synthetic):
    report = validate_scenario(small_synthetic)
    assert report.violations == []


def test_validate_backbone_warning(tmp_path):
    rng = np.random.default_rng(2)
    n = 100
    features = rng.normal(size=(n, 2)).astype(np.float32)
    correctness = np.zeros((n, 2), dtype=int)
    correctness[:60, 0] = 1   # candidate model: 60%
    correctness[:85, 1] = 1   # backbone model: 85%
    models = [
        {"name": "weak", "mflops_per_image": 1.0},
        {"name": "backbone", "mflops_per_image": 5.0, "is_extractor_backbone": True},
    ]
    scenario = load_scenario(_write_bundle(tmp_path, features, correctness, models))
    report = validate_scenario(scenario)
    assert any("weak" in w and "backbone" in w for w in report.warnings)


def test_validate_overlapping_splits(small_synthetic):
    from dataclasses import replace

    bad = replace(
        small_synthetic,
        splits={"train": np.array([0, 1, 2]), "test": np.array([2, 3])},
    )
    report = validate_scenario(bad)
    assert any("disjoint" in v for v in report.violations)


def test_synthetic_noiseless_nested():
    spec = SyntheticSpec(
        num_samples=300, num_models=3, feature_dim=4, costs=(1.0, 2.0, 3.0), seed=7
    )
    s = generate_synthetic(spec)
    c = s.correctness.astype(int)
    assert np.all(c[:, 1] >= c[:, 0])
    assert np.all(c[:, 2] >= c[:, 1])


def test_synthetic_deterministic():
    spec = SyntheticSpec(
        num_samples=128, num_models=2, feature_dim=3, costs=(1.0, 5.0), noise_rate=0.3, seed=9
    )
    a, b = generate_synthetic(spec), generate_synthetic(spec)
    assert a.features.tobytes() == b.features.tobytes()
    assert a.correctness.tobytes() == b.correctness.tobytes()


def test_synthetic_full_noise_flips_everything():
    base_spec = SyntheticSpec(
        num_samples=200, num_models=2, feature_dim=3, costs=(1.0, 5.0), noise_rate=0.0, seed=4
    )
    flipped_spec = SyntheticSpec(
        num_samples=200, num_models=2, feature_dim=3, costs=(1.0, 5.0), noise_rate=1.0, seed=4
    )
    base = generate_synthetic(base_spec).correctness
    flipped = generate_synthetic(flipped_spec).correctness
    assert np.array_equal(flipped, 1 - base)


@given(seed=st.integers(0, 2**32 - 1), k=st.integers(2, 5))
@settings(max_examples=25, deadline=None)
def test_synthetic_nesting_property(seed, k):
    spec = SyntheticSpec(
        num_samples=64,
        num_models=k,
        feature_dim=3,
        costs=tuple(float(i + 1) for i in range(k)),
        noise_rate=0.0,
        seed=seed,
    )
    c = generate_synthetic(spec).correctness.astype(int)
    assert np.all(np.diff(c, axis=1) >= 0)


def test_split_sizes():
    spec = SyntheticSpec(num_samples=10, num_models=2, feature_dim=2, costs=(1.0, 2.0), seed=0)
    s = split_scenario(generate_synthetic(spec), (0.8, 0.1, 0.1), seed=1)
    assert (len(s.splits["train"]), len(s.splits["val"]), len(s.splits["test"])) == (8, 1, 1)


def test_split_deterministic(small_synthetic):
    a = split_scenario(small_synthetic, seed=42)
    b = split_scenario(small_synthetic, seed=42)
    for name in ("train", "val", "test"):
        assert np.array_equal(a.splits[name], b.splits[name])


def test_split_bad_fractions(small_synthetic):
    with pytest.raises(ScenarioError):
        split_scenario(small_synthetic, (0.5, 0.5, 0.5), seed=0)
