import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gdcatree.dataset import Partition, partition_by_fractions
from gdcatree.errors import ConfigError, EmptyNode, UnknownNode
from gdcatree.topology import Topology, build_tree, compute_betas, node_index_set, schedule_iterations


def test_build_tree_shapes():
    t = build_tree([2, 2])
    assert t.depth == 2 and len(t.nodes) == 7 and t.leaves() == [3, 4, 5, 6]
    assert t.nodes[0].children == (1, 2) and t.nodes[2].children == (5, 6)
    assert len(build_tree([2, 4]).leaves()) == 8
    single = build_tree([1])
    assert single.leaves() == [1] and single.depth == 1


@pytest.mark.parametrize("fanout", [[], [0], [2, -1]])
def test_build_tree_bad(fanout):
    with pytest.raises(ConfigError):
        build_tree(fanout)


def test_from_children_non_complete():
    t = Topology.from_children({0: [1, 2], 1: [3], 2: [4, 5, 6]})
    assert t.root == 0 and t.leaves() == [3, 4, 5, 6]
    with pytest.raises(ConfigError):
        Topology.from_children({0: [1, 2], 1: [3]})  # leaves on different layers
    with pytest.raises(ConfigError):
        Topology.from_children({0: [1], 2: [1]})


def test_node_index_set():
    t = build_tree([2, 1])  # 0 -> 1, 2 ; 1 -> 3 ; 2 -> 4
    p = Partition({3: [7, 3], 4: [0, 1, 2, 4, 5, 6]})
    np.testing.assert_array_equal(node_index_set(t, p, 3), [3, 7])
    np.testing.assert_array_equal(node_index_set(t, p, 0), np.arange(8))
    t2 = Topology.from_children({0: [1], 1: [2, 3]})
    np.testing.assert_array_equal(node_index_set(t2, Partition({2: [1, 2], 3: [3]}), 1), [1, 2, 3])
    with pytest.raises(UnknownNode):
        node_index_set(t, p, 99)


def test_wine_betas():
    t = build_tree([2, 2])
    p = partition_by_fractions(6493, [0.1, 0.1, 0.1, 0.7], t.leaves(), seed=3)
    b = compute_betas(t, p, "data_proportional")
    assert b.for_parent(1, 2) == [0.5, 0.5]
    assert b.for_parent(2, 2) == pytest.approx([649 / 5195, 4546 / 5195])
    assert b.for_parent(0, 2) == pytest.approx([1298 / 6493, 5195 / 6493])
    u = compute_betas(t, p, "uniform")
    assert u.for_parent(2, 2) == [0.5, 0.5]


def test_uniform_and_single_child():
    t = build_tree([4])
    assert compute_betas(t, None, "uniform").for_parent(0, 4) == [0.25] * 4
    t1 = build_tree([1])
    p = Partition({1: [0, 1, 2]})
    assert compute_betas(t1, p, "uniform").for_parent(0, 1) == [1.0]
    assert compute_betas(t1, p, "data_proportional").for_parent(0, 1) == [1.0]


def test_empty_node():
    t = build_tree([2])
    with pytest.raises(EmptyNode):
        compute_betas(t, Partition({1: [], 2: []}), "data_proportional")
    # an empty child alongside a nonempty one is fine
    assert compute_betas(t, Partition({1: [], 2: [0]})).for_parent(0, 2) == [0.0, 1.0]


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(1, 3), min_size=1, max_size=3), st.integers(50, 400), st.integers(0, 99))
def test_beta_sums(fanout, m, seed):
    t = build_tree(fanout)
    leaves = t.leaves()
    rng = np.random.default_rng(seed)
    w = rng.uniform(0.2, 1, len(leaves))
    fr = list(w / w.sum())
    fr[-1] = 1 - sum(fr[:-1])
    p = partition_by_fractions(m, fr, leaves, seed)
    b = compute_betas(t, p)
    for nid in t.internal_nodes():
        bs = b.for_parent(nid, len(t.nodes[nid].children))
        assert abs(sum(bs) - 1) <= 1e-12 and min(bs) >= 0 and max(bs) <= 1
    assert len(node_index_set(t, p, t.root)) == m


def test_equal_children_proportional_equals_uniform():
    t = build_tree([3, 2])
    p = partition_by_fractions(600, [1 / 6] * 6, t.leaves())
    assert compute_betas(t, p).beta == pytest.approx(compute_betas(t, p, "uniform").beta)


def test_schedules():
    t = build_tree([2, 2])
    p = partition_by_fractions(6493, [0.1, 0.1, 0.1, 0.7], t.leaves())
    u = schedule_iterations(t, p, [5, 10, 100], "uniform")
    assert [u[leaf] for leaf in t.leaves()] == [100] * 4 and u[0] == 5 and u[1] == 10
    pinned = schedule_iterations(t, p, [5, 10, 100], "delayed", pins={6: 300})
    assert pinned[6] == 300
    d = schedule_iterations(t, p, [5, 10, 100], "delayed")
    assert [d[leaf] for leaf in t.leaves()] == [100, 100, 25, 175]
    bn = schedule_iterations(t, p, [5, 10, 100], "delayed", scope="bottleneck")
    assert len({bn[leaf] for leaf in t.leaves()}) == 1 and bn[3] == round(100 * 4546 / (6493 / 4))
    single = schedule_iterations(build_tree([1]), Partition({1: [0, 1]}), [1, 50], "delayed")
    assert single[1] == 50
    with pytest.raises(ConfigError):
        schedule_iterations(t, p, [5, 100], "uniform")
