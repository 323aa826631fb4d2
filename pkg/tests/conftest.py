import numpy as np
import pytest

from dispatchkit.scenario import (
    ExtractorProfile,
    ModelProfile,
    Scenario,
    SyntheticSpec,
    generate_synthetic,
    split_scenario,
)

# CIFAR-10 test-set distribution over three models sorted by cost:
# pattern (cheap, mid, expensive) -> image count. Sums to 10000.
TABLE_COUNTS = {
    "111": 6320,
    "110": 228,
    "101": 256,
    "100": 143,
    "011": 1759,
    "010": 237,
    "001": 527,
    "000": 530,
}
TABLE_COSTS = (5.9, 13.57, 21.83)


def table_matrix() -> np.ndarray:
    """10000 x 3 correctness matrix realizing the reference distribution."""
    rows = []
    for pattern, count in TABLE_COUNTS.items():
        bits = [int(b) for b in pattern]
        rows.append(np.tile(bits, (count, 1)))
    return np.concatenate(rows).astype(np.uint8)


@pytest.fixture(scope="session")
def table_correctness() -> np.ndarray:
    return table_matrix()


def table_scenario() -> Scenario:
    """Scenario wrapping the reference correctness matrix (features unused)."""
    c = table_matrix()
    n = len(c)
    rng = np.random.default_rng(0)
    features = rng.normal(size=(n, 4)).astype(np.float32)
    return Scenario(
        name="table",
        features=features,
        correctness=c,
        models=tuple(
            ModelProfile(name=f"m{i}", cost_mflops=cost) for i, cost in enumerate(TABLE_COSTS)
        ),
        extractor=ExtractorProfile(name="ext", cost_mflops=0.5, feature_dim=4),
        original_model_order=("m0", "m1", "m2"),
    )


def planted_scenario(
    n: int = 5000, dim: int = 16, seed: int = 11, separation: float = 6.0
) -> Scenario:
    """Planted trade-off: cheap model correct on 70%, mid 90%, expensive 97%."""
    spec = SyntheticSpec(
        num_samples=n,
        num_models=3,
        feature_dim=dim,
        costs=(5.0, 15.0, 40.0),
        cluster_separation=separation,
        noise_rate=0.0,
        seed=seed,
        tier_fractions=(0.70, 0.20, 0.07),
        hopeless_rate=0.03,
    )
    return split_scenario(generate_synthetic(spec), seed=seed)


@pytest.fixture(scope="session")
def small_synthetic() -> Scenario:
    spec = SyntheticSpec(
        num_samples=400,
        num_models=3,
        feature_dim=8,
        costs=(1.0, 4.0, 9.0),
        cluster_separation=5.0,
        noise_rate=0.05,
        seed=3,
    )
    return split_scenario(generate_synthetic(spec), seed=3)
