import numpy as np
import pytest

from rwn.dataset import CATEGORICAL, NUMERIC, ColumnSchema, Dataset, standardize
from rwn.distance import distance, make_spec, paired_distances, pairwise_count, sq_distances_from
from rwn.errors import ConfigError, SchemaError
from rwn.neighborhoods import build_exact, build_pair_sample, build_pool

from conftest import random_mixed_dataset, spec_from_points


def mixed_spec(rows, cats=("a", "b", "c"), weights=None):
    schema = (
        ColumnSchema("x", NUMERIC),
        ColumnSchema("c", CATEGORICAL, cats),
    )
    d = Dataset.from_rows(schema, rows)
    return make_spec(standardize(d), weights)


def test_identical_rows_distance_zero():
    spec = mixed_spec([[1.0, "a"], [1.0, "a"], [2.0, "b"]])
    assert distance(spec, 0, 1) == 0.0


def test_single_categorical_mismatch_is_one():
    spec = mixed_spec([[3.0, "a"], [3.0, "b"]])
    assert distance(spec, 0, 1) == pytest.approx(1.0)


def test_numeric_hand_example():
    spec = spec_from_points([[-1.0, 0.0], [1.0, 0.0]])
    assert distance(spec, 0, 1) == pytest.approx(2.0)


def test_symmetry_nonnegativity_property():
    g = np.random.default_rng(42)
    for _ in range(30):
        d = random_mixed_dataset(g, missing=0.15)
        spec = make_spec(standardize(d))
        for _ in range(10):
            i, j = int(g.integers(0, d.n)), int(g.integers(0, d.n))
            dij = distance(spec, i, j)
            assert dij >= 0.0
            assert dij == pytest.approx(distance(spec, j, i), abs=1e-12)


def test_triangle_inequality_numeric():
    g = np.random.default_rng(9)
    pts = g.normal(size=(12, 3))
    spec = spec_from_points(pts)
    for a in range(12):
        for b in range(12):
            for c in range(12):
                assert distance(spec, a, c) <= distance(spec, a, b) + distance(spec, b, c) + 1e-12


def test_row_permutation_invariance():
    g = np.random.default_rng(15)
    d = random_mixed_dataset(g, n=10, missing=0.1)
    perm = g.permutation(d.n)
    dp = d.subset(perm)
    spec = make_spec(standardize(d))
    spec_p = make_spec(standardize(dp))
    inv = np.argsort(perm)
    for i in range(d.n):
        for j in range(d.n):
            assert distance(spec, i, j) == pytest.approx(
                distance(spec_p, int(inv[i]), int(inv[j])), abs=1e-9
            )


def test_missing_numeric_pair_uses_mean_contribution():
    # complete values {0, 2}: the only complete pair contributes (0-2)^2 = 4,
    # and 2 * sample variance of {0, 2} = 4 as well
    spec = spec_from_points(np.array([[0.0], [2.0], [np.nan]]))
    assert spec.num_fill[0] == pytest.approx(4.0)
    assert distance(spec, 0, 2) == pytest.approx(2.0)
    assert distance(spec, 1, 2) == pytest.approx(2.0)
    # both missing also fills: a record with missing cells is never at 0 distance
    spec2 = spec_from_points(np.array([[0.0], [2.0], [np.nan], [np.nan]]))
    assert distance(spec2, 2, 3) == pytest.approx(2.0)


def test_missing_categorical_pair_uses_mean_mismatch():
    # labels {a, a, b}: mean mismatch over complete pairs = 1 - [C(2,2)]/C(3,2) = 2/3
    schema = (ColumnSchema("c", CATEGORICAL, ("a", "b")),)
    d = Dataset.from_rows(schema, [["a"], ["a"], ["b"], [None]])
    spec = make_spec(standardize(d))
    assert spec.cat_fill[0] == pytest.approx(2.0 / 3.0)
    assert distance(spec, 0, 3) == pytest.approx(np.sqrt(2.0 / 3.0))


def test_weights_scale_contributions():
    spec = mixed_spec([[3.0, "a"], [3.0, "b"]], weights={"c": 4.0})
    assert distance(spec, 0, 1) == pytest.approx(2.0)
    spec0 = mixed_spec([[3.0, "a"], [3.0, "b"]], weights={"c": 0.0})
    assert distance(spec0, 0, 1) == 0.0
    with pytest.raises(ConfigError):
        mixed_spec([[3.0, "a"], [3.0, "b"]], weights={"c": -1.0})
    with pytest.raises(SchemaError):
        mixed_spec([[3.0, "a"], [3.0, "b"]], weights={"nope": 1.0})


def test_index_out_of_range():
    spec = spec_from_points([[0.0], [1.0]])
    with pytest.raises(IndexError):
        distance(spec, 0, 2)
    with pytest.raises(IndexError):
        distance(spec, -3, 0)


def test_vectorized_rows_match_scalar():
    g = np.random.default_rng(77)
    d = random_mixed_dataset(g, n=8, missing=0.2)
    spec = make_spec(standardize(d))
    for i in range(d.n):
        sq = sq_distances_from(spec, i, slice(None))
        for j in range(d.n):
            assert np.sqrt(sq[j]) == pytest.approx(distance(spec, i, j), abs=1e-12)


def test_paired_distances_matches_scalar():
    g = np.random.default_rng(78)
    d = random_mixed_dataset(g, n=6, missing=0.1)
    view = standardize(d)
    spec = make_spec(view)
    perm = g.permutation(d.n)
    other = view.apply_to(d.subset(perm))
    got = paired_distances(spec, other)
    assert got.shape == (d.n,)
    assert np.all(got >= 0)


# -- evaluation counters ----------------------------------------------------


def test_exact_backend_counts_unique_pairs():
    g = np.random.default_rng(1)
    spec = spec_from_points(g.normal(size=(100, 2)))
    ns = build_exact(spec, 0.5, 3)
    assert pairwise_count(ns) == 100 * 99 // 2 == 4950


def test_pool_backend_count_bounded_by_mn():
    g = np.random.default_rng(2)
    spec = spec_from_points(g.normal(size=(100, 2)))
    ns = build_pool(spec, 0.5, 3, m=10, seed=4)
    assert pairwise_count(ns) <= 100 * 10
    ns_fresh = build_pool(spec, 0.5, 3, m=10, seed=4, fresh_pool_per_point=True)
    assert pairwise_count(ns_fresh) <= 100 * 10


def test_pair_sample_backend_count_exact():
    g = np.random.default_rng(3)
    spec = spec_from_points(g.normal(size=(100, 2)))
    ns = build_pair_sample(spec, 0.5, 3, m=10, seed=4)
    assert pairwise_count(ns) == 100 * 10 // 2 == 500
