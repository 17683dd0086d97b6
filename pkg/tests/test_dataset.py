import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gdcatree.dataset import Dataset, load_dense, load_libsvm, make_synthetic, normalize, partition_by_fractions
from gdcatree.errors import ConfigError, DataIOError, MapError, ParseError


def test_load_dense_readback(tmp_path):
    f = tmp_path / "a.csv"
    f.write_text("1,2,3\n4,5,6\n")
    ds = load_dense(f, label_column=2)
    assert (ds.d, ds.m) == (2, 2)
    np.testing.assert_array_equal(ds.labels, [3, 6])
    np.testing.assert_array_equal(ds.features, [[1, 4], [2, 5]])
    np.testing.assert_array_equal(ds.column(1), [4, 5])


def test_load_dense_wine_shaped(tmp_path):
    # same layout as the UCI wine file: header, ';' separated, 12 columns
    rng = np.random.default_rng(0)
    vals = rng.uniform(0, 10, size=(6493, 12)).round(3)
    lines = [";".join(f'"c{j}"' for j in range(12))] + [";".join(map(str, r)) for r in vals]
    f = tmp_path / "wine.csv"
    f.write_text("\n".join(lines) + "\n")
    ds = load_dense(f, delimiter=";", label_column=11, header=True)
    assert (ds.m, ds.d) == (6493, 11)
    np.testing.assert_allclose(ds.labels, vals[:, 11])


@pytest.mark.parametrize("text,exc", [
    ("", DataIOError),
    ("   \n", DataIOError),
    ("1,2,3\n4,5\n", ParseError),
    ("1,2,x\n", ParseError),
])
def test_load_dense_bad_input(tmp_path, text, exc):
    f = tmp_path / "bad.csv"
    f.write_text(text)
    with pytest.raises(exc):
        load_dense(f, label_column=-1)


def test_load_dense_missing(tmp_path):
    with pytest.raises(DataIOError):
        load_dense(tmp_path / "nope.csv")


def test_load_libsvm_readback(tmp_path):
    f = tmp_path / "a.svm"
    f.write_text("2 1:0.5 3:-0.5\n1 2:1.0\n")
    ds = load_libsvm(f, {2: 1, 1: -1})
    np.testing.assert_array_equal(ds.column(0), [0.5, 0.0, -0.5])
    np.testing.assert_array_equal(ds.labels, [1, -1])


@pytest.mark.parametrize("text,exc", [
    ("1 1:0.5 1:0.2\n", ParseError),
    ("1 1:abc\n", ParseError),
    ("1 0:1\n", ParseError),
    ("1 3\n", ParseError),
    ("3 1:1\n", MapError),
])
def test_load_libsvm_bad(tmp_path, text, exc):
    f = tmp_path / "bad.svm"
    f.write_text(text)
    with pytest.raises(exc):
        load_libsvm(f, {1: 1, 2: -1})


def test_normalize_examples():
    ds = Dataset(np.array([[3.0, 4.0], [0.0, 0.0], [1.0, 0.0], [0.3, 0.4]]), np.zeros(4))
    out = normalize(ds)
    np.testing.assert_allclose(out.points[0], [0.6, 0.8])
    np.testing.assert_array_equal(out.points[1], [0, 0])
    np.testing.assert_array_equal(out.points[2], [1, 0])
    np.testing.assert_allclose(np.linalg.norm(out.points[3]), 1.0)
    capped = normalize(ds, "cap_at_one")
    np.testing.assert_array_equal(capped.points[3], [0.3, 0.4])
    np.testing.assert_allclose(capped.points[0], [0.6, 0.8])


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 30), st.integers(1, 8), st.integers(0, 1000), st.sampled_from(["per_instance_unit", "cap_at_one"]))
def test_normalize_bounds_and_idempotence(m, d, seed, mode):
    ds = Dataset(np.random.default_rng(seed).normal(scale=3, size=(m, d)), np.zeros(m))
    once = normalize(ds, mode)
    assert np.linalg.norm(once.points, axis=1).max() <= 1 + 1e-12
    np.testing.assert_array_equal(normalize(once, mode).points, once.points)


def test_partition_examples():
    p = partition_by_fractions(6493, [0.1, 0.1, 0.1, 0.7], [3, 4, 5, 6], seed=0)
    assert [len(p[k]) for k in (3, 4, 5, 6)] == [649, 649, 649, 4546]
    p.validate(6493)
    assert len(partition_by_fractions(17, [1.0], [0], 1)[0]) == 17
    assert list(partition_by_fractions(10, [0.5, 0.5], [1, 2]).sizes().values()) == [5, 5]


@pytest.mark.parametrize("fractions,leaves", [
    ([0.5, 0.4], [1, 2]),
    ([0.5, 0.5], [1]),
    ([1.2, -0.2], [1, 2]),
])
def test_partition_bad_fractions(fractions, leaves):
    with pytest.raises(ConfigError):
        partition_by_fractions(10, fractions, leaves)


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 5000), st.lists(st.floats(0.01, 1.0), min_size=1, max_size=8), st.integers(0, 2**31))
def test_partition_covers_and_is_deterministic(m, weights, seed):
    fr = np.array(weights) / sum(weights)
    fr[-1] = 1.0 - fr[:-1].sum()
    if fr[-1] <= 0:
        return
    leaves = list(range(len(fr)))
    p = partition_by_fractions(m, list(fr), leaves, seed)
    assert sum(p.sizes().values()) == m
    p.validate(m)
    q = partition_by_fractions(m, list(fr), leaves, seed)
    for k in leaves:
        np.testing.assert_array_equal(p[k], q[k])


def test_dataset_validation():
    with pytest.raises(ValueError):
        Dataset(np.zeros((3, 2)), np.zeros(2))
    ds = make_synthetic(10, 3, task="classification")
    assert set(np.unique(ds.labels)) <= {-1.0, 1.0}
