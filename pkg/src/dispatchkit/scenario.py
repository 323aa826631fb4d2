"""Scenario data model: features, per-model correctness, cost profiles.

A Scenario is an immutable bundle standing in for a set of live models:
an N x D feature matrix, an N x K binary correctness matrix (entry (n, k)
is 1 iff model k classifies sample n correctly), per-model cost profiles
and the feature-extractor profile. Models are always kept sorted ascending
by cost so "cheapest correct model" logic is a first-hit scan.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np


class ScenarioError(ValueError):
    """Raised when a scenario file or spec violates its contract."""


@dataclass(frozen=True)
class ModelProfile:
    name: str
    cost_mflops: float
    is_extractor_backbone: bool = False
    residual_mflops: float | None = None  # classifier-head cost when backbone is reused


@dataclass(frozen=True)
class ExtractorProfile:
    name: str
    cost_mflops: float
    feature_dim: int


@dataclass(frozen=True)
class Scenario:
    name: str
    features: np.ndarray        # (N, D) float32
    correctness: np.ndarray     # (N, K) uint8, entries in {0, 1}
    models: tuple[ModelProfile, ...]   # sorted ascending by cost_mflops
    extractor: ExtractorProfile
    splits: dict[str, np.ndarray] = field(default_factory=dict)
    original_model_order: tuple[str, ...] = ()

    @property
    def num_samples(self) -> int:
        return self.features.shape[0]

    @property
    def feature_dim(self) -> int:
        return self.features.shape[1]

    @property
    def num_models(self) -> int:
        return self.correctness.shape[1]

    @property
    def costs(self) -> np.ndarray:
        return np.array([m.cost_mflops for m in self.models], dtype=float)

    def split_indices(self, split: str) -> np.ndarray:
        if split not in self.splits:
            raise ScenarioError(f"unknown split {split!r}; have {sorted(self.splits)}")
        return self.splits[split]


@dataclass(frozen=True)
class SyntheticSpec:
    num_samples: int
    num_models: int
    feature_dim: int
    costs: tuple[float, ...]
    cluster_separation: float = 4.0
    noise_rate: float = 0.0
    seed: int = 0
    # Optional shaping knobs; when tier_fractions is None a geometric
    # long-tail over model tiers is used.
    tier_fractions: tuple[float, ...] | None = None
    hopeless_rate: float = 0.0

    def __post_init__(self):
        if self.num_models < 2:
            raise ScenarioError("num_models must be >= 2")
        if len(self.costs) != self.num_models:
            raise ScenarioError("costs length must equal num_models")
        if any(b <= a for a, b in zip(self.costs, self.costs[1:])):
            raise ScenarioError("costs must be strictly ascending")
        if any(c <= 0 for c in self.costs):
            raise ScenarioError("costs must be positive")
        if not 0.0 <= self.noise_rate <= 1.0:
            raise ScenarioError("noise_rate must be in [0, 1]")
        if not 0.0 <= self.hopeless_rate < 1.0:
            raise ScenarioError("hopeless_rate must be in [0, 1)")


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def _read_features(path: Path, fmt: str, rows: int, dim: int) -> np.ndarray:
    if fmt == "f32le":
        raw = path.read_bytes()
        expected = rows * dim * 4
        if len(raw) != expected:
            raise ScenarioError(
                f"feature file {path} has {len(raw)} bytes, expected {expected}"
            )
        return np.frombuffer(raw, dtype="<f4").reshape(rows, dim).copy()
    if fmt == "csv":
        mat = np.loadtxt(path, delimiter=",", dtype=np.float32, ndmin=2)
        if mat.shape != (rows, dim):
            raise ScenarioError(
                f"feature csv {path} has shape {mat.shape}, expected {(rows, dim)}"
            )
        return mat
    raise ScenarioError(f"unknown feature format {fmt!r}")


def _read_correctness(path: Path) -> np.ndarray:
    mat = np.loadtxt(path, delimiter=",", dtype=np.int64, ndmin=2)
    if not np.isin(mat, (0, 1)).all():
        raise ScenarioError(f"non-binary correctness entry in {path}")
    return mat.astype(np.uint8)


def load_scenario(manifest_path: str | Path) -> Scenario:
    """Load and validate a scenario bundle from its JSON manifest.

    Models are re-sorted ascending by cost; the manifest order is kept in
    ``original_model_order``. Raises ScenarioError on any contract
    violation so no half-valid Scenario escapes.
    """
    manifest_path = Path(manifest_path)
    if not manifest_path.is_file():
        raise ScenarioError(f"manifest not found: {manifest_path}")
    try:
        manifest = json.loads(manifest_path.read_text())
    except json.JSONDecodeError as e:
        raise ScenarioError(f"manifest is not valid JSON: {e}") from e

    base = manifest_path.parent
    try:
        feat_spec = manifest["features"]
        corr_spec = manifest["correctness"]
        extractor = ExtractorProfile(
            name=manifest["extractor"]["name"],
            cost_mflops=float(manifest["extractor"]["mflops_per_image"]),
            feature_dim=int(manifest["extractor"]["feature_dim"]),
        )
        models = [
            ModelProfile(
                name=m["name"],
                cost_mflops=float(m["mflops_per_image"]),
                is_extractor_backbone=bool(m.get("is_extractor_backbone", False)),
                residual_mflops=(
                    float(m["residual_mflops_per_image"])
                    if "residual_mflops_per_image" in m
                    else None
                ),
            )
            for m in manifest["models"]
        ]
    except (KeyError, TypeError) as e:
        raise ScenarioError(f"manifest missing required field: {e}") from e

    rows = int(feat_spec["rows"])
    dim = int(feat_spec["dim"])
    features = _read_features(base / feat_spec["path"], feat_spec.get("format", "f32le"), rows, dim)
    correctness = _read_correctness(base / corr_spec["path"])

    original_order = tuple(m.name for m in models)
    models.sort(key=lambda m: m.cost_mflops)

    splits = {}
    for split_name, idx in manifest.get("splits", {}).items():
        splits[split_name] = np.asarray(idx, dtype=np.int64)

    scenario = Scenario(
        name=manifest.get("name", manifest_path.stem),
        features=features,
        correctness=correctness,
        models=tuple(models),
        extractor=extractor,
        splits=splits,
        original_model_order=original_order,
    )
    report = validate_scenario(scenario)
    if not report.ok:
        raise ScenarioError("; ".join(report.violations))
    return scenario


def write_scenario(scenario: Scenario, out_dir: str | Path) -> Path:
    """Write a scenario bundle (manifest + f32le features + correctness CSV).

    Round-trips byte-exactly through load_scenario for float32 features.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    feat_path = out_dir / "features.f32le"
    corr_path = out_dir / "correctness.csv"
    feat_path.write_bytes(np.ascontiguousarray(scenario.features, dtype="<f4").tobytes())
    np.savetxt(corr_path, scenario.correctness, fmt="%d", delimiter=",")
    manifest = {
        "name": scenario.name,
        "extractor": {
            "name": scenario.extractor.name,
            "mflops_per_image": scenario.extractor.cost_mflops,
            "feature_dim": scenario.extractor.feature_dim,
        },
        "models": [
            {
                "name": m.name,
                "mflops_per_image": m.cost_mflops,
                **({"is_extractor_backbone": True} if m.is_extractor_backbone else {}),
                **(
                    {"residual_mflops_per_image": m.residual_mflops}
                    if m.residual_mflops is not None
                    else {}
                ),
            }
            for m in scenario.models
        ],
        "features": {
            "path": feat_path.name,
            "format": "f32le",
            "rows": int(scenario.num_samples),
            "dim": int(scenario.feature_dim),
        },
        "correctness": {"path": corr_path.name, "format": "csv"},
    }
    if scenario.splits:
        manifest["splits"] = {k: [int(i) for i in v] for k, v in scenario.splits.items()}
    manifest_path = out_dir / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2))
    return manifest_path


def validate_scenario(s: Scenario) -> ValidationReport:
    """Check scenario invariants; all findings land in the report."""
    report = ValidationReport()
    n, d = s.features.shape
    if s.correctness.ndim != 2 or s.correctness.shape[0] != n:
        report.violations.append(
            f"correctness rows {s.correctness.shape[0]} != feature rows {n}"
        )
    k = s.correctness.shape[1]
    if k < 2:
        report.violations.append(f"need at least 2 models, have {k}")
    if len(s.models) != k:
        report.violations.append(f"{len(s.models)} model profiles for {k} correctness columns")
    if d != s.extractor.feature_dim:
        report.violations.append(
            f"feature dim {d} != extractor feature_dim {s.extractor.feature_dim}"
        )
    if not np.isfinite(s.features).all():
        report.violations.append("non-finite feature entry")
    if not np.isin(s.correctness, (0, 1)).all():
        report.violations.append("non-binary correctness entry")

    names = [m.name for m in s.models]
    if len(set(names)) != len(names):
        report.violations.append("duplicate model name")
    costs = [m.cost_mflops for m in s.models]
    if any(c <= 0 for c in costs):
        report.violations.append("non-positive model cost")
    if any(b <= a for a, b in zip(costs, costs[1:])):
        report.violations.append("models not sorted strictly ascending by cost")
    if s.extractor.cost_mflops < 0:
        report.violations.append("negative extractor cost")
    if s.extractor.feature_dim < 1:
        report.violations.append("extractor feature_dim < 1")

    all_idx = []
    for split_name, idx in s.splits.items():
        if len(idx) and (idx.min() < 0 or idx.max() >= n):
            report.violations.append(f"split {split_name!r} has out-of-range index")
        all_idx.append(np.asarray(idx))
    if all_idx:
        flat = np.concatenate(all_idx)
        if len(np.unique(flat)) != len(flat):
            report.violations.append("splits not disjoint")

    # Advisory checks only when the structure is sound.
    if report.ok and len(s.models) == k:
        eval_idx = s.splits.get("test")
        corr = s.correctness if eval_idx is None or not len(eval_idx) else s.correctness[eval_idx]
        rates = corr.mean(axis=0)
        backbone = next((i for i, m in enumerate(s.models) if m.is_extractor_backbone), None)
        if backbone is not None:
            for i, m in enumerate(s.models):
                if i != backbone and rates[i] < rates[backbone]:
                    report.warnings.append(
                        f"model {m.name!r} correctness {rates[i]:.4f} is below the "
                        f"extractor backbone's {rates[backbone]:.4f}; dispatching to it "
                        "cannot help"
                    )
        from .oracle import oracle_relabel  # local import to avoid a cycle

        labels = oracle_relabel(corr)
        frac = np.bincount(labels, minlength=k) / max(len(labels), 1)
        if frac.max() > 0.90:
            report.warnings.append(
                f"severe oracle-label imbalance: majority class holds {frac.max():.1%}"
            )
    return report


def generate_synthetic(spec: SyntheticSpec) -> Scenario:
    """Deterministic synthetic scenario: clustered features, nested correctness.

    Each sample gets an intended tier (the cheapest model that should
    handle it) drawn from a long-tailed distribution; features are sampled
    around that tier's cluster center; base correctness is nested (model k
    correct iff k >= tier) and every bit is then flipped independently
    with probability noise_rate. Hopeless samples (no model correct) get
    their own cluster and tier -1 before noise.
    """
    rng = np.random.default_rng(spec.seed)
    n, k, d = spec.num_samples, spec.num_models, spec.feature_dim

    if spec.tier_fractions is not None:
        fractions = np.asarray(spec.tier_fractions, dtype=float)
        if len(fractions) != k:
            raise ScenarioError("tier_fractions length must equal num_models")
    else:
        fractions = 0.5 ** np.arange(k)
    fractions = fractions / fractions.sum() * (1.0 - spec.hopeless_rate)

    counts = np.floor(fractions * n).astype(int)
    n_hopeless = int(np.floor(spec.hopeless_rate * n))
    counts[0] += n - counts.sum() - n_hopeless
    tiers = np.repeat(np.arange(k), counts)
    tiers = np.concatenate([tiers, np.full(n_hopeless, -1)])
    rng.shuffle(tiers)

    centers = rng.normal(size=(k + 1, d))
    centers /= np.linalg.norm(centers, axis=1, keepdims=True)
    centers *= spec.cluster_separation
    features = centers[tiers] + rng.normal(size=(n, d))
    features = features.astype(np.float32)

    base = (np.arange(k)[None, :] >= tiers[:, None]) & (tiers[:, None] >= 0)
    flips = rng.random(size=(n, k)) < spec.noise_rate
    correctness = (base ^ flips).astype(np.uint8)

    models = tuple(
        ModelProfile(name=f"model{i}", cost_mflops=float(c))
        for i, c in enumerate(spec.costs)
    )
    extractor = ExtractorProfile(name="synthetic-extractor", cost_mflops=1.0, feature_dim=d)
    return Scenario(
        name=f"synthetic-{spec.seed}",
        features=features,
        correctness=correctness,
        models=models,
        extractor=extractor,
        original_model_order=tuple(m.name for m in models),
    )


def split_scenario(
    s: Scenario, fractions: tuple[float, float, float] = (0.8, 0.1, 0.1), seed: int = 0
) -> Scenario:
    """Fill train/val/test splits with a seeded shuffle partition."""
    if any(f <= 0 for f in fractions) or abs(sum(fractions) - 1.0) > 1e-9:
        raise ScenarioError(f"fractions must be positive and sum to 1, got {fractions}")
    n = s.num_samples
    perm = np.random.default_rng(seed).permutation(n)
    n_train = int(np.floor(fractions[0] * n))
    n_val = int(np.floor(fractions[1] * n))
    splits = {
        "train": np.sort(perm[:n_train]),
        "val": np.sort(perm[n_train : n_train + n_val]),
        "test": np.sort(perm[n_train + n_val :]),
    }
    return replace(s, splits=splits)
