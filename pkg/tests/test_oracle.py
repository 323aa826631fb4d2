import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from dispatchkit.oracle import (
    combination_histogram,
    ideal_metrics,
    label_distribution,
    oracle_relabel,
)

from .conftest import TABLE_COSTS, TABLE_COUNTS


def test_histogram_matches_reference_counts(table_correctness):
    assert combination_histogram(table_correctness) == TABLE_COUNTS


def test_histogram_all_ones():
    assert combination_histogram(np.ones((5, 3), dtype=int)) == {"111": 5}


def test_histogram_against_bruteforce():
    rng = np.random.default_rng(12)
    c = rng.integers(0, 2, size=(20, 3))
    expected = {}
    for row in c:
        key = "".join(str(b) for b in row)
        expected[key] = expected.get(key, 0) + 1
    assert combination_histogram(c) == expected


def test_relabel_first_hit():
    assert oracle_relabel(np.array([[0, 1, 1]]))[0] == 1
    assert oracle_relabel(np.array([[0, 0, 0]]))[0] == 0
    assert oracle_relabel(np.array([[1, 1, 1]]))[0] == 0


def test_relabel_reference_distribution(table_correctness):
    labels = oracle_relabel(table_correctness)
    counts = np.bincount(labels, minlength=3)
    # 530 hopeless samples fall back into class 0
    assert tuple(counts) == (6947 + 530, 1996, 527)
    frac = label_distribution(labels, 3)
    assert frac == pytest.approx((0.7477, 0.1996, 0.0527), abs=1e-12)


def test_label_distribution_simple():
    assert label_distribution(np.array([0, 0, 1, 2]), 3) == pytest.approx((0.5, 0.25, 0.25))


def test_label_distribution_sums_to_one():
    rng = np.random.default_rng(5)
    labels = rng.integers(0, 4, size=997)
    assert abs(label_distribution(labels, 4).sum() - 1.0) < 1e-12


def test_ideal_metrics_reference_numbers(table_correctness):
    m = ideal_metrics(table_correctness, np.array(TABLE_COSTS))
    assert m.ideal_accuracy == pytest.approx(0.9470, abs=1e-12)
    assert m.reduction_vs_each_model[2] * 100 == pytest.approx(62.11, abs=0.05)
    assert m.accuracy_delta_vs_each_model[2] == pytest.approx(6.08, abs=0.05)
    assert m.per_model_accuracy == pytest.approx((0.6947, 0.8544, 0.8862), abs=1e-12)


def test_ideal_metrics_all_correct():
    m = ideal_metrics(np.ones((7, 3), dtype=int), np.array([1.0, 2.0, 3.0]))
    assert m.ideal_accuracy == 1.0
    assert m.ideal_mflops_per_image == 1.0


def test_ideal_metrics_against_bruteforce():
    rng = np.random.default_rng(77)
    c = rng.integers(0, 2, size=(50, 3))
    costs = np.array([2.0, 5.0, 11.0])
    m = ideal_metrics(c, costs)
    total = 0.0
    correct = 0
    for row in c:
        hit = [k for k in range(3) if row[k]]
        if hit:
            correct += 1
            total += costs[hit[0]]
        else:
            total += costs[0]
    assert m.ideal_accuracy == pytest.approx(correct / 50)
    assert m.ideal_mflops_per_image == pytest.approx(total / 50)


def test_ideal_accuracy_counts_hopeless_rows():
    c = np.array([[0, 0], [1, 0], [0, 1]])
    m = ideal_metrics(c, np.array([1.0, 2.0]))
    assert m.ideal_accuracy == pytest.approx(2 / 3)


@given(arrays(np.int8, (30, 3), elements=st.integers(0, 1)))
@settings(max_examples=50, deadline=None)
def test_histogram_counts_sum_to_n(c):
    assert sum(combination_histogram(c).values()) == 30


@given(arrays(np.int8, (25, 3), elements=st.integers(0, 1)), st.integers(0, 24), st.integers(0, 2))
@settings(max_examples=50, deadline=None)
def test_cost_monotone_under_bit_raise(c, row, col):
    # Only rows that already have a correct model: for hopeless rows the
    # fallback runs the cheapest model, so gaining an expensive correct
    # option raises cost (while raising accuracy).
    costs = np.array([1.0, 3.0, 8.0])
    if not c[row].any():
        c[row, 0] = 1
    before = ideal_metrics(c, costs).ideal_mflops_per_image
    flipped = c.copy()
    flipped[row, col] = 1
    after = ideal_metrics(flipped, costs).ideal_mflops_per_image
    assert after <= before + 1e-12
