import random
import sys

import pytest

from treepca.tree_core import ROOT, DataSet, LabeledTree, NodeId, intersection

TOY = {
    "t1": "r r.0 r.0.0 r.0.1 r.1 r.1.1",
    "t2": "r r.0 r.0.1 r.1 r.1.0 r.2",
    "t3": "r r.1 r.1.0 r.1.1 r.2 r.2.0 r.2.1",
}


def toy_trees():
    return [LabeledTree.from_strings(TOY[k].split()) for k in sorted(TOY)]


def random_tree(rng: random.Random, depth: int, arity: int, keep: float) -> LabeledTree:
    """Random parent-closed subset of the full ``arity``-ary template of ``depth``."""
    nodes = [ROOT]
    frontier = [ROOT]
    for _ in range(depth):
        nxt = []
        for v in frontier:
            for s in range(arity):
                if rng.random() < keep:
                    child = NodeId(v + (s,))
                    nodes.append(child)
                    nxt.append(child)
        frontier = nxt
    return LabeledTree(nodes, check=False)


def random_dataset(rng: random.Random, max_trees=8, max_depth=4, max_arity=3) -> DataSet:
    depth = rng.randint(1, max_depth)
    arity = rng.randint(1, max_arity)
    keep = rng.uniform(0.3, 0.95)
    count = rng.randint(1, max_trees)
    return DataSet.from_trees(random_tree(rng, depth, arity, keep) for _ in range(count))


def start_tree(ds: DataSet, which: str) -> LabeledTree:
    return LabeledTree([ROOT]) if which == "root" else intersection(ds)


@pytest.fixture
def toy():
    return DataSet.from_trees(toy_trees())


@pytest.fixture
def toy_int(toy):
    return intersection(toy)


@pytest.fixture
def toy_file(tmp_path, toy):
    from treepca.io import write_dataset

    path = tmp_path / "toy.jsonl"
    write_dataset(toy, path)
    return path


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
