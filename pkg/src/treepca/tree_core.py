"""Rooted labeled trees as parent-closed sets of canonical node labels.

A node is named by the sequence of child slots leading to it from the root,
written ``r``, ``r.0``, ``r.0.1`` and so on. Two data trees share a node
exactly when they share the label, which is what makes set operations
(distance, support, intersection) meaningful across a data set.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence, Union

__all__ = [
    "NodeId",
    "ROOT",
    "LabeledTree",
    "TreePath",
    "Record",
    "DataSet",
    "Violation",
    "TreeError",
    "InvalidTreeError",
    "EmptyDatasetError",
    "distance",
    "support",
    "intersection",
    "enumerate_paths",
    "validate",
]

_NODE_RE = re.compile(r"r(?:\.(?:0|[1-9][0-9]*))*\Z")


class TreeError(ValueError):
    """Base class for invalid tree or data set input."""


class InvalidTreeError(TreeError):
    def __init__(self, violations: Sequence["Violation"]):
        self.violations = list(violations)
        super().__init__("; ".join(v.message for v in self.violations))


class EmptyDatasetError(TreeError):
    def __init__(self, message: str = "empty dataset"):
        super().__init__(message)


class NodeId(tuple):
    """Canonical node label: the child-slot sequence from the root.

    Ordering is plain tuple ordering, so a proper prefix sorts before any of
    its extensions and siblings sort by slot ("leftmost first").
    """

    __slots__ = ()

    def __new__(cls, slots: Iterable[int] = ()):
        self = super().__new__(cls, slots)
        for s in self:
            if type(s) is not int or s < 0:
                raise TreeError(f"invalid child slot {s!r}")
        return self

    @classmethod
    def parse(cls, text: str) -> "NodeId":
        if not isinstance(text, str) or not _NODE_RE.match(text):
            raise TreeError(f"malformed node id {text!r}")
        return cls(int(p) for p in text.split(".")[1:])

    def __str__(self) -> str:
        return "r" + "".join("." + str(s) for s in self)

    def __repr__(self) -> str:
        return f"NodeId({str(self)!r})"

    @property
    def parent(self) -> "NodeId | None":
        if not self:
            return None
        return NodeId(self[:-1])

    @property
    def depth(self) -> int:
        return len(self)

    def child(self, slot: int) -> "NodeId":
        return NodeId(self + (slot,))

    def is_ancestor_of(self, other: "NodeId") -> bool:
        """True if ``self`` is a proper prefix of ``other``."""
        return len(self) < len(other) and other[: len(self)] == self


ROOT = NodeId()

NodeLike = Union[NodeId, str, Sequence[int]]


def as_node(value: NodeLike) -> NodeId:
    if isinstance(value, NodeId):
        return value
    if isinstance(value, str):
        return NodeId.parse(value)
    return NodeId(value)


@dataclass(frozen=True)
class Violation:
    kind: str  # "root-missing" | "parent-missing"
    node: NodeId | None
    message: str


def validate(nodes: Iterable[NodeLike]) -> list[Violation]:
    """Diagnose a candidate node set; an empty list means it is a valid tree."""
    node_set = {as_node(n) for n in nodes}
    problems: list[Violation] = []
    if ROOT not in node_set:
        problems.append(Violation("root-missing", None, "root missing"))
    for node in sorted(node_set):
        if node and node[:-1] not in node_set:
            parent = node.parent
            problems.append(
                Violation(
                    "parent-missing",
                    node,
                    f"parent {parent} of {node} missing",
                )
            )
    return problems


class LabeledTree:
    """Immutable rooted tree, stored as a frozenset of :class:`NodeId`.

    Construction checks that the root is present and that the set is
    parent-closed. Pass ``check=False`` only for sets that are valid by
    construction (unions and intersections of valid trees, generator output).
    """

    __slots__ = ("nodes", "_sorted")

    def __init__(self, nodes: Iterable[NodeLike] = (ROOT,), *, check: bool = True):
        if isinstance(nodes, LabeledTree):
            frozen = nodes.nodes
        elif check:
            frozen = frozenset(as_node(n) for n in nodes)
        else:
            frozen = frozenset(nodes)
        if check:
            problems = validate(frozen)
            if problems:
                raise InvalidTreeError(problems)
        object.__setattr__(self, "nodes", frozen)
        object.__setattr__(self, "_sorted", None)

    def __setattr__(self, name, value):
        raise AttributeError("LabeledTree is immutable")

    @classmethod
    def from_strings(cls, labels: Iterable[str]) -> "LabeledTree":
        return cls(NodeId.parse(s) for s in labels)

    def sorted_nodes(self) -> tuple[NodeId, ...]:
        if self._sorted is None:
            object.__setattr__(self, "_sorted", tuple(sorted(self.nodes)))
        return self._sorted

    def __iter__(self) -> Iterator[NodeId]:
        return iter(self.sorted_nodes())

    def __len__(self) -> int:
        return len(self.nodes)

    def __contains__(self, node) -> bool:
        return node in self.nodes

    def __eq__(self, other) -> bool:
        if isinstance(other, LabeledTree):
            return self.nodes == other.nodes
        return NotImplemented

    def __hash__(self) -> int:
        return hash(self.nodes)

    def __or__(self, other: "LabeledTree") -> "LabeledTree":
        return LabeledTree(self.nodes | other.nodes, check=False)

    def __and__(self, other: "LabeledTree") -> "LabeledTree":
        return LabeledTree(self.nodes & other.nodes, check=False)

    def __sub__(self, other: "LabeledTree") -> frozenset:
        # differences are generally not parent-closed
        return self.nodes - other.nodes

    def __le__(self, other: "LabeledTree") -> bool:
        return self.nodes <= other.nodes

    def __repr__(self) -> str:
        inner = ",".join(str(n) for n in self)
        return f"LabeledTree({{{inner}}})"

    def children_map(self) -> dict[NodeId, list[NodeId]]:
        """Children of every node, in slot order."""
        kids: dict[NodeId, list[NodeId]] = {n: [] for n in self.nodes}
        for node in self.sorted_nodes():
            if node:
                kids[node.parent].append(node)
        return kids

    def leaves(self) -> list[NodeId]:
        kids = self.children_map()
        return [n for n in self.sorted_nodes() if not kids[n]]

    def height(self) -> int:
        return max(len(n) for n in self.nodes)


class TreePath:
    """Root-to-node chain ``(r, ..., leaf)``.

    A path is fully determined by its last node, so equality, hashing and
    ordering use the leaf alone and the chain itself is built on demand.
    """

    __slots__ = ("leaf", "_nodes")

    def __init__(self, nodes: Iterable[NodeLike]):
        chain = tuple(as_node(n) for n in nodes)
        if not chain or chain[0] != ROOT:
            raise TreeError("path must start at the root")
        for upper, lower in zip(chain, chain[1:]):
            if len(lower) != len(upper) + 1 or lower[:-1] != upper:
                raise TreeError(f"{lower} is not a child of {upper}")
        self.leaf = chain[-1]
        self._nodes = chain

    @classmethod
    def to(cls, leaf: NodeLike) -> "TreePath":
        path = object.__new__(cls)
        path.leaf = as_node(leaf)
        path._nodes = None
        return path

    @property
    def nodes(self) -> tuple[NodeId, ...]:
        if self._nodes is None:
            leaf = self.leaf
            self._nodes = tuple(NodeId(leaf[:i]) for i in range(len(leaf))) + (leaf,)
        return self._nodes

    def node_set(self) -> frozenset:
        return frozenset(self.nodes)

    def __eq__(self, other) -> bool:
        if isinstance(other, TreePath):
            return self.leaf == other.leaf
        return NotImplemented

    def __hash__(self) -> int:
        return hash(("path", self.leaf))

    def __lt__(self, other: "TreePath") -> bool:
        return self.leaf < other.leaf

    def __len__(self) -> int:
        return len(self.leaf) + 1

    def __iter__(self) -> Iterator[NodeId]:
        return iter(self.nodes)

    def __str__(self) -> str:
        return ";".join(str(n) for n in self.nodes)

    def __repr__(self) -> str:
        return f"TreePath.to({str(self.leaf)!r})"


@dataclass(frozen=True)
class Record:
    id: str
    tree: LabeledTree
    covariates: Mapping[str, float] = field(default_factory=dict)


class DataSet:
    """Indexed list of data trees with per-tree id and scalar covariates."""

    def __init__(self, records: Iterable[Record]):
        self.records: tuple[Record, ...] = tuple(records)
        seen: set[str] = set()
        for rec in self.records:
            if rec.id in seen:
                raise TreeError(f"duplicate tree id {rec.id!r}")
            seen.add(rec.id)

    @classmethod
    def from_trees(cls, trees: Iterable[LabeledTree], prefix: str = "t") -> "DataSet":
        trees = list(trees)
        width = max(1, len(str(len(trees))))
        return cls(
            Record(f"{prefix}{i + 1:0{width}d}", t) for i, t in enumerate(trees)
        )

    @property
    def trees(self) -> tuple[LabeledTree, ...]:
        return tuple(r.tree for r in self.records)

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(r.id for r in self.records)

    def covariate(self, name: str) -> list[float]:
        values = []
        for rec in self.records:
            if name not in rec.covariates:
                raise TreeError(f"tree {rec.id!r} has no covariate {name!r}")
            values.append(float(rec.covariates[name]))
        return values

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[LabeledTree]:
        return (r.tree for r in self.records)

    def __getitem__(self, i: int) -> LabeledTree:
        return self.records[i].tree

    def require_nonempty(self) -> None:
        if not self.records:
            raise EmptyDatasetError()


def _trees_of(ds: DataSet | Iterable[LabeledTree]) -> list[LabeledTree]:
    trees = list(ds.trees) if isinstance(ds, DataSet) else list(ds)
    if not trees:
        raise EmptyDatasetError()
    return trees


def distance(t1: LabeledTree, t2: LabeledTree) -> int:
    """Size of the symmetric difference of the two node sets."""
    return len(t1.nodes ^ t2.nodes)


def support(ds: DataSet | Iterable[LabeledTree]) -> LabeledTree:
    trees = _trees_of(ds)
    return LabeledTree(frozenset().union(*(t.nodes for t in trees)), check=False)


def intersection(ds: DataSet | Iterable[LabeledTree]) -> LabeledTree:
    trees = _trees_of(ds)
    return LabeledTree(trees[0].nodes.intersection(*(t.nodes for t in trees[1:])), check=False)


def enumerate_paths(support_tree: LabeledTree, l0: LabeledTree) -> list[TreePath]:
    """All root-to-leaf paths of ``support_tree`` whose leaf lies outside ``l0``.

    Sorted by leaf label; the list length is the number of components a full
    decomposition produces.
    """
    if not l0.nodes <= support_tree.nodes:
        raise TreeError("starting tree not contained in support")
    kids = support_tree.children_map()
    paths: list[TreePath] = []
    # iterative DFS in slot order keeps output sorted by leaf
    stack: list[NodeId] = []
    todo: list[tuple[NodeId, int]] = [(ROOT, 0)]
    while todo:
        node, depth = todo.pop()
        del stack[depth:]
        stack.append(node)
        children = kids[node]
        if not children:
            if node not in l0.nodes:
                paths.append(_trusted_path(tuple(stack)))
            continue
        for child in reversed(children):
            todo.append((child, depth + 1))
    return paths


def _trusted_path(nodes: tuple[NodeId, ...]) -> TreePath:
    # skips re-validation for chains built by walking a valid tree
    path = object.__new__(TreePath)
    path.leaf = nodes[-1]
    path._nodes = nodes
    return path
