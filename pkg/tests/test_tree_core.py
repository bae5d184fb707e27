import random
from functools import reduce

import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_tree, toy_trees
from treepca.tree_core import (
    ROOT,
    DataSet,
    EmptyDatasetError,
    InvalidTreeError,
    LabeledTree,
    NodeId,
    TreeError,
    TreePath,
    distance,
    enumerate_paths,
    intersection,
    support,
    validate,
)


def T(text):
    return LabeledTree.from_strings(text.split())


def test_node_id_roundtrip_and_order():
    assert str(NodeId.parse("r.0.12")) == "r.0.12"
    assert NodeId.parse("r") == ROOT
    assert NodeId.parse("r.0") < NodeId.parse("r.0.0") < NodeId.parse("r.1")
    assert NodeId.parse("r.2.1").parent == NodeId.parse("r.2")
    assert ROOT.parent is None
    assert ROOT.is_ancestor_of(NodeId.parse("r.3"))
    assert not NodeId.parse("r.1").is_ancestor_of(NodeId.parse("r.1"))


@pytest.mark.parametrize("bad", ["", "x", "r.", "r..0", "r.01", "r.-1", "r.a", "R.0"])
def test_node_id_rejects_malformed(bad):
    with pytest.raises(TreeError):
        NodeId.parse(bad)


def test_validate_reports_missing_parent_and_root():
    problems = validate(["r", "r.0.1"])
    assert [p.message for p in problems] == ["parent r.0 of r.0.1 missing"]
    problems = validate(["r.0"])
    assert problems[0].message == "root missing"
    with pytest.raises(InvalidTreeError, match="parent r.0 of r.0.1 missing"):
        T("r r.0.1")


def test_tree_basics():
    t = T("r r.1 r.0 r.0.0")
    assert [str(v) for v in t] == ["r", "r.0", "r.0.0", "r.1"]
    assert t.leaves() == [NodeId.parse("r.0.0"), NodeId.parse("r.1")]
    assert t.height() == 2
    assert T("r r.0") <= t
    assert (t & T("r r.1 r.1.0")) == T("r r.1")


def test_toy_distances_to_example_line():
    t1, t2, t3 = toy_trees()
    l0 = T("r r.0 r.0.0")
    l1 = T("r r.0 r.0.0 r.1")
    l2 = T("r r.0 r.0.0 r.1 r.1.1")
    table = [[distance(t, l) for l in (l0, l1, l2)] for t in (t1, t2, t3)]
    assert table == [[3, 2, 1], [5, 4, 5], [8, 7, 6]]


def test_toy_support_and_intersection():
    trees = toy_trees()
    assert support(trees) == T("r r.0 r.0.0 r.0.1 r.1 r.1.0 r.1.1 r.2 r.2.0 r.2.1")
    assert intersection(trees) == T("r r.1")


def test_empty_dataset_rejected():
    with pytest.raises(EmptyDatasetError):
        support([])
    with pytest.raises(EmptyDatasetError):
        intersection(DataSet([]))


def test_support_and_intersection_match_set_folds():
    rng = random.Random(11)
    trees = [random_tree(rng, 4, 3, 0.6) for _ in range(50)]
    union = reduce(lambda a, b: a | set(b.nodes), trees, set())
    common = reduce(lambda a, b: a & set(b.nodes), trees[1:], set(trees[0].nodes))
    assert support(trees).nodes == union
    assert intersection(trees).nodes == common
    assert validate(union) == [] and validate(common) == []


def test_enumerate_paths_toy():
    supp = support(toy_trees())
    paths = enumerate_paths(supp, T("r r.1"))
    assert [str(p.leaf) for p in paths] == ["r.0.0", "r.0.1", "r.1.0", "r.1.1", "r.2.0", "r.2.1"]
    assert str(paths[0]) == "r;r.0;r.0.0"


def test_enumerate_paths_requires_contained_start():
    with pytest.raises(TreeError, match="starting tree not contained in support"):
        enumerate_paths(T("r r.0"), T("r r.1"))


def test_enumerate_paths_counts_leaves_outside_start():
    rng = random.Random(5)
    for _ in range(100):
        supp = random_tree(rng, rng.randint(0, 5), rng.randint(1, 3), 0.7)
        l0 = random_tree(rng, 2, 3, 0.5) & supp
        # independent leaf scan: a node is a leaf when no other node has it as parent
        parents = {v[:-1] for v in supp.nodes if v}
        leaves = sorted(v for v in supp.nodes if v not in parents and v not in l0.nodes)
        paths = enumerate_paths(supp, l0)
        assert [p.leaf for p in paths] == leaves
        for p in paths:
            assert p.nodes[0] == ROOT and set(p.nodes) <= supp.nodes


def test_tree_path_validation_and_identity():
    p = TreePath(["r", "r.1", "r.1.0"])
    assert p == TreePath.to("r.1.0")
    assert hash(p) == hash(TreePath.to("r.1.0"))
    assert TreePath.to("r.1.0").nodes == p.nodes
    assert len(p) == 3
    with pytest.raises(TreeError):
        TreePath(["r", "r.1.0"])
    with pytest.raises(TreeError):
        TreePath(["r.1"])


def test_dataset_ids():
    ds = DataSet.from_trees(toy_trees())
    assert ds.ids == ("t1", "t2", "t3")
    with pytest.raises(TreeError, match="duplicate"):
        DataSet(list(ds.records) + [ds.records[0]])


node_sets = st.lists(
    st.lists(st.integers(0, 2), min_size=0, max_size=3), min_size=0, max_size=12
)


def closed(slot_lists):
    nodes = {ROOT}
    for slots in slot_lists:
        for k in range(1, len(slots) + 1):
            nodes.add(NodeId(slots[:k]))
    return LabeledTree(nodes)


@settings(max_examples=300, deadline=None)
@given(node_sets, node_sets, node_sets)
def test_metric_axioms(a, b, c):
    x, y, z = closed(a), closed(b), closed(c)
    assert distance(x, y) == distance(y, x)
    assert (distance(x, y) == 0) == (x == y)
    assert distance(x, z) <= distance(x, y) + distance(y, z)
