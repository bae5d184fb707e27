"""Tree-line principal components: projections, forward and backward steps.

Component paths are compared through the label of their leaf. With the
default ``tiebreak="left"`` the forward search prefers the leftmost of equally
good paths and the backward search the rightmost; ``"right"`` swaps both.
The two directions always use mirrored rules.
"""
from __future__ import annotations

import csv
import heapq
import json
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .tree_core import (
    ROOT,
    DataSet,
    LabeledTree,
    NodeId,
    TreeError,
    TreePath,
    distance,
    enumerate_paths,
    support,
)

__all__ = [
    "TreeLine",
    "Component",
    "Decomposition",
    "EquivalenceReport",
    "DecompositionComplete",
    "project",
    "project_union",
    "node_counts",
    "forward_weights",
    "forward_step",
    "backward_weights",
    "backward_step",
    "decompose",
    "iterate_steps",
    "residual",
    "verify_equivalence",
    "write_decomposition",
    "read_decomposition",
]

TIEBREAKS = ("left", "right")
DIRECTIONS = ("forward", "backward")


class DecompositionComplete(TreeError):
    def __init__(self):
        super().__init__("decomposition complete")


def _check_tiebreak(tiebreak: str) -> None:
    if tiebreak not in TIEBREAKS:
        raise ValueError(f"tiebreak must be 'left' or 'right', got {tiebreak!r}")


@dataclass(frozen=True)
class TreeLine:
    """Starting tree ``l0`` grown one node at a time along a downward chain.

    ``added`` holds v_1..v_k; member i of the line is ``l0 | {v_1..v_i}``.
    """

    l0: LabeledTree
    added: tuple[NodeId, ...]

    def __post_init__(self):
        added = tuple(self.added)
        object.__setattr__(self, "added", added)
        if not added:
            raise TreeError("tree-line must add at least one node")
        if added[0] in self.l0 or added[0].parent not in self.l0:
            raise TreeError(f"{added[0]} must be a child of the starting tree")
        for upper, lower in zip(added, added[1:]):
            if lower.parent != upper:
                raise TreeError(f"{lower} is not a child of {upper}")

    @classmethod
    def from_path(cls, l0: LabeledTree, path: TreePath) -> "TreeLine":
        return cls(l0, tuple(v for v in path.nodes if v not in l0.nodes))

    @property
    def path(self) -> TreePath:
        return TreePath.to(self.added[-1])

    def __len__(self) -> int:
        """Number of members, l0 included."""
        return len(self.added) + 1

    def member(self, i: int) -> LabeledTree:
        return LabeledTree(self.l0.nodes.union(self.added[:i]), check=False)

    def members(self) -> list[LabeledTree]:
        return [self.member(i) for i in range(len(self))]


def project(t: LabeledTree, line: TreeLine) -> LabeledTree:
    """Closest member of ``line`` to ``t``: ``l0 | (t & path)``."""
    return LabeledTree(line.l0.nodes | (t.nodes & line.path.node_set()), check=False)


def _common_start(lines: Sequence[TreeLine]) -> LabeledTree:
    if not lines:
        raise TreeError("no tree-lines given")
    l0 = lines[0].l0
    for line in lines[1:]:
        if line.l0 != l0:
            raise TreeError("starting trees differ")
    return l0


def project_union(t: LabeledTree, lines: Sequence[TreeLine]) -> LabeledTree:
    """Projection onto the union of lines sharing a start.

    Equal to the union of the single-line projections.
    """
    l0 = _common_start(lines)
    covered = frozenset().union(*(line.path.node_set() for line in lines))
    return LabeledTree(l0.nodes | (t.nodes & covered), check=False)


def node_counts(ds: DataSet | Iterable[LabeledTree]) -> Counter:
    """Number of data trees containing each node."""
    counts: Counter = Counter()
    for tree in ds:
        counts.update(tree.nodes)
    return counts


def _checked_paths(ds: DataSet, l0: LabeledTree, chosen: Iterable[TreePath]):
    ds.require_nonempty()
    supp = support(ds)
    paths = enumerate_paths(supp, l0)
    valid = {p.leaf: p for p in paths}
    chosen = list(chosen)
    for p in chosen:
        if valid.get(p.leaf) != p:
            raise TreeError(f"path to {p.leaf} is not a maximal path of the support")
    return supp, paths, chosen


def forward_weights(
    ds: DataSet, l0: LabeledTree, prev_paths: Sequence[TreePath] = ()
) -> dict[NodeId, int]:
    """Forward weights over the support tree.

    A node weighs the number of data trees containing it, or 0 when it is in
    ``l0`` or on an already selected path.
    """
    supp, _, prev_paths = _checked_paths(ds, l0, prev_paths)
    counts = node_counts(ds)
    covered = l0.nodes.union(*(p.nodes for p in prev_paths))
    return {v: 0 if v in covered else counts[v] for v in supp.nodes}


def _leaf_preference(leaf: NodeId, prefer_left: bool):
    # sort key: smaller is preferred
    return leaf if prefer_left else tuple(-s - 1 for s in leaf) + (1,)


def forward_step(
    ds: DataSet,
    l0: LabeledTree,
    prev_paths: Sequence[TreePath] = (),
    tiebreak: str = "left",
) -> tuple[TreePath, int]:
    """Next forward component: the unselected path of maximum weight sum."""
    _check_tiebreak(tiebreak)
    weights = forward_weights(ds, l0, prev_paths)
    _, paths, _ = _checked_paths(ds, l0, ())
    taken = {p.leaf for p in prev_paths}
    best = None
    for p in paths:
        if p.leaf in taken:
            continue
        score = sum(weights[v] for v in p.nodes)
        key = (-score, _leaf_preference(p.leaf, tiebreak == "left"))
        if best is None or key < best[0]:
            best = (key, p, score)
    if best is None:
        raise DecompositionComplete()
    return best[1], best[2]


def backward_weights(
    ds: DataSet, l0: LabeledTree, remaining: Sequence[TreePath]
) -> dict[NodeId, int]:
    """Backward weights over ``l0`` plus the remaining paths.

    A node weighs the number of data trees containing it, or 0 when it is in
    ``l0`` or shared by two or more remaining paths.
    """
    _, _, remaining = _checked_paths(ds, l0, remaining)
    if not remaining:
        raise TreeError("no remaining paths")
    counts = node_counts(ds)
    multiplicity: Counter = Counter()
    for p in remaining:
        multiplicity.update(p.nodes)
    weights = {v: 0 for v in l0.nodes}
    for v, m in multiplicity.items():
        if v not in l0.nodes:
            weights[v] = counts[v] if m == 1 else 0
    return weights


def backward_step(
    ds: DataSet,
    l0: LabeledTree,
    remaining: Sequence[TreePath],
    tiebreak: str = "left",
) -> tuple[TreePath, int]:
    """Next backward component: the remaining path of minimum weight sum.

    ``tiebreak`` names the forward rule; ties here go the opposite way.
    """
    _check_tiebreak(tiebreak)
    weights = backward_weights(ds, l0, remaining)
    best = None
    for p in remaining:
        score = sum(weights[v] for v in p.nodes)
        key = (score, _leaf_preference(p.leaf, tiebreak == "right"))
        if best is None or key < best[0]:
            best = (key, p, score)
    return best[1], best[2]


@dataclass(frozen=True)
class Component:
    index: int
    path: TreePath
    weight_sum: int

    @property
    def leaf(self) -> NodeId:
        return self.path.leaf


@dataclass(frozen=True)
class Decomposition:
    """All components of a data set for one starting tree.

    ``components[k-1]`` is component k for both directions. A backward run
    selects component n first and component 1 last.
    """

    direction: str
    l0: LabeledTree
    components: tuple[Component, ...]
    tiebreak: str = "left"

    @property
    def n(self) -> int:
        return len(self.components)

    @property
    def paths(self) -> list[TreePath]:
        return [c.path for c in self.components]

    def selection_order(self) -> list[Component]:
        if self.direction == "forward":
            return list(self.components)
        return list(reversed(self.components))

    def removal_order(self) -> list[Component]:
        """Least influential first: component n, n-1, ..., 1."""
        return list(reversed(self.components))

    def lines(self) -> list[TreeLine]:
        return [TreeLine.from_path(self.l0, p) for p in self.paths]


class _Support:
    """Support tree in index form shared by the fast decompositions."""

    def __init__(self, ds: DataSet, l0: LabeledTree):
        ds.require_nonempty()
        counts = node_counts(ds)
        supp_nodes = sorted(counts)
        if not l0.nodes <= counts.keys():
            raise TreeError("starting tree not contained in support")
        index = {v: i for i, v in enumerate(supp_nodes)}
        self.nodes = supp_nodes
        self.count = [counts[v] for v in supp_nodes]
        self.in_l0 = [v in l0.nodes for v in supp_nodes]
        self.parent = [-1] * len(supp_nodes)
        self.children: list[list[int]] = [[] for _ in supp_nodes]
        # sorted order lists each parent before its children, siblings by slot
        for i, v in enumerate(supp_nodes):
            if v:
                p = index[v[:-1]]
                self.parent[i] = p
                self.children[p].append(i)
        self.candidates = [
            i for i, kids in enumerate(self.children) if not kids and not self.in_l0[i]
        ]
        # candidate leaves are already in label order
        self.rank = {leaf: r for r, leaf in enumerate(self.candidates)}

    def path(self, i: int) -> TreePath:
        return TreePath.to(self.nodes[i])


def _forward_fast(sup: _Support, prefer_left: bool) -> list[tuple[int, int]]:
    weight = [0 if l0 else c for c, l0 in zip(sup.count, sup.in_l0)]
    n = len(sup.nodes)
    # best[i] = (weight sum down to the preferred leaf, leaf) within subtree i
    best_sum = [0] * n
    best_leaf = [-1] * n
    for i in range(n - 1, -1, -1):
        kids = sup.children[i]
        if not kids:
            if not sup.in_l0[i]:
                best_sum[i], best_leaf[i] = weight[i], i
            continue
        pick = -1
        for k in kids:
            if best_leaf[k] < 0:
                continue
            if pick < 0 or best_sum[k] > best_sum[pick] or (
                best_sum[k] == best_sum[pick] and not prefer_left
            ):
                pick = k
        if pick >= 0:
            best_sum[i], best_leaf[i] = weight[i] + best_sum[pick], best_leaf[pick]

    def key(i):
        r = sup.rank[best_leaf[i]]
        return (-best_sum[i], r if prefer_left else -r, i)

    heap = [key(0)] if best_leaf[0] >= 0 else []
    picked = []
    while heap:
        neg_sum, _, top = heapq.heappop(heap)
        leaf = best_leaf[top]
        picked.append((leaf, -neg_sum))
        # subtrees hanging off the new path become independent candidates
        on_path = leaf
        prev = -1
        while True:
            for k in sup.children[on_path]:
                if k != prev and best_leaf[k] >= 0:
                    heapq.heappush(heap, key(k))
            if on_path == top:
                break
            prev, on_path = on_path, sup.parent[on_path]
    return picked


def _backward_fast(sup: _Support, prefer_right: bool) -> list[tuple[int, int]]:
    n = len(sup.nodes)
    leaf_total = [0] * n
    for leaf in sup.candidates:
        leaf_total[leaf] = 1
    for i in range(n - 1, 0, -1):
        leaf_total[sup.parent[i]] += leaf_total[i]
    active_kids = [sum(1 for k in kids if leaf_total[k]) for kids in sup.children]
    alive = [t > 0 for t in leaf_total]

    # each candidate leaf owns a private chain of nodes no other path uses
    cost = {}
    chain_top = {}
    owner = {}
    for leaf in sup.candidates:
        c, x, top = 0, leaf, leaf
        while x >= 0 and not sup.in_l0[x] and leaf_total[x] == 1:
            c += sup.count[x]
            top = x
            x = sup.parent[x]
        cost[leaf] = c
        chain_top[leaf] = top
        owner[top] = leaf

    def key(leaf):
        r = sup.rank[leaf]
        return (cost[leaf], -r if prefer_right else r, leaf)

    heap = [key(leaf) for leaf in sup.candidates]
    heapq.heapify(heap)
    picked = []
    while heap:
        c, _, leaf = heapq.heappop(heap)
        if leaf not in cost or cost[leaf] != c:
            continue  # stale entry
        picked.append((leaf, c))
        del cost[leaf]
        top = chain_top.pop(leaf)
        del owner[top]
        x = leaf
        while True:
            alive[x] = False
            if x == top:
                break
            x = sup.parent[x]
        b = sup.parent[top]
        active_kids[b] -= 1
        if sup.in_l0[b] or active_kids[b] != 1:
            continue
        survivor = next(k for k in sup.children[b] if alive[k])
        other = owner.get(survivor)
        if other is None:
            continue  # the surviving subtree still holds several paths
        # the other path now owns b and possibly further ancestors
        del owner[survivor]
        x, new_top = b, survivor
        while x >= 0 and not sup.in_l0[x] and active_kids[x] == 1:
            cost[other] += sup.count[x]
            new_top = x
            x = sup.parent[x]
        chain_top[other] = new_top
        owner[new_top] = other
        heapq.heappush(heap, key(other))
    return picked


def decompose(
    ds: DataSet,
    l0: LabeledTree,
    direction: str = "forward",
    tiebreak: str = "left",
) -> Decomposition:
    """Run the forward or backward algorithm to exhaustion.

    Uses incremental bookkeeping (a heap over candidate subtrees, or over
    private leaf chains) so a full run is O(N log N) in the support size.
    :func:`iterate_steps` gives the same result one step at a time.
    """
    _check_tiebreak(tiebreak)
    sup = _Support(ds, l0)
    if direction == "forward":
        picked = _forward_fast(sup, tiebreak == "left")
        comps = [
            Component(k + 1, sup.path(leaf), w) for k, (leaf, w) in enumerate(picked)
        ]
    elif direction == "backward":
        picked = _backward_fast(sup, tiebreak == "left")
        total = len(picked)
        comps = [
            Component(total - k, sup.path(leaf), w) for k, (leaf, w) in enumerate(picked)
        ]
        comps.reverse()
    else:
        raise ValueError(f"direction must be 'forward' or 'backward', got {direction!r}")
    return Decomposition(direction, l0, tuple(comps), tiebreak)


def iterate_steps(
    ds: DataSet, l0: LabeledTree, direction: str = "forward", tiebreak: str = "left"
) -> Decomposition:
    """Reference decomposition that calls the single-step functions n times."""
    paths = enumerate_paths(support(ds), l0)
    total = len(paths)
    if direction == "forward":
        chosen: list[TreePath] = []
        comps = []
        for k in range(1, total + 1):
            p, w = forward_step(ds, l0, chosen, tiebreak)
            chosen.append(p)
            comps.append(Component(k, p, w))
    elif direction == "backward":
        remaining = list(paths)
        comps = []
        for k in range(total, 0, -1):
            p, w = backward_step(ds, l0, remaining, tiebreak)
            remaining.remove(p)
            comps.append(Component(k, p, w))
        comps.reverse()
    else:
        raise ValueError(f"direction must be 'forward' or 'backward', got {direction!r}")
    return Decomposition(direction, l0, tuple(comps), tiebreak)


def residual(ds: DataSet, l0: LabeledTree, lines: Sequence[TreeLine] = ()) -> int:
    """Total distance from the data trees to their projections on ``lines``."""
    if lines:
        if _common_start(lines) != l0:
            raise TreeError("starting trees differ")
        return sum(distance(t, project_union(t, lines)) for t in ds)
    return sum(distance(t, l0) for t in ds)


@dataclass(frozen=True)
class EquivalenceReport:
    forward: Decomposition
    backward: Decomposition
    mismatches: tuple[tuple[int, TreePath | None, TreePath | None], ...]

    @property
    def ok(self) -> bool:
        return not self.mismatches

    def __bool__(self) -> bool:
        return self.ok


def verify_equivalence(ds: DataSet, l0: LabeledTree, tiebreak: str = "left") -> EquivalenceReport:
    """Compare forward and backward components position by position."""
    fwd = decompose(ds, l0, "forward", tiebreak)
    bwd = decompose(ds, l0, "backward", tiebreak)
    mismatches = []
    for k in range(max(fwd.n, bwd.n)):
        pf = fwd.components[k].path if k < fwd.n else None
        pb = bwd.components[k].path if k < bwd.n else None
        if pf != pb:
            mismatches.append((k + 1, pf, pb))
    return EquivalenceReport(fwd, bwd, tuple(mismatches))


CSV_HEADER = ["index", "leaf", "weight_sum", "path"]


def _sidecar(path: Path) -> Path:
    return path.with_suffix(".json")


def write_decomposition(dec: Decomposition, path: str | Path) -> None:
    """Write ``index,leaf,weight_sum,path`` rows plus a JSON sidecar."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for c in dec.components:
            writer.writerow([c.index, str(c.leaf), c.weight_sum, str(c.path)])
    meta = {
        "direction": dec.direction,
        "tiebreak": dec.tiebreak,
        "n": dec.n,
        "l0": [str(v) for v in dec.l0],
    }
    _sidecar(path).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


def read_decomposition(path: str | Path) -> Decomposition:
    path = Path(path)
    meta = json.loads(_sidecar(path).read_text())
    l0 = LabeledTree.from_strings(meta["l0"])
    comps = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != CSV_HEADER:
            raise TreeError(f"unexpected decomposition header {header}")
        for row in reader:
            index, leaf, weight_sum, chain = row
            p = TreePath(tuple(NodeId.parse(s) for s in chain.split(";")))
            if str(p.leaf) != leaf:
                raise TreeError(f"row {index}: leaf {leaf} does not end path")
            comps.append(Component(int(index), p, int(weight_sum)))
    return Decomposition(meta["direction"], l0, tuple(comps), meta.get("tiebreak", "left"))
