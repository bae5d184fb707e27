"""Turning raw, unordered branching structures into labeled trees.

Raw trees arrive as balanced parentheses, ``(()())`` being a root with two
leaf children. Sibling order in the input carries no meaning until a
correspondence scheme assigns child slots.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .tree_core import ROOT, LabeledTree, NodeId, TreeError

__all__ = [
    "RawTree",
    "parse_parens",
    "to_parens",
    "raw_from_labeled",
    "descendant_relabel",
    "level_order_index",
]


@dataclass
class RawTree:
    children: list["RawTree"] = field(default_factory=list)

    def size(self) -> int:
        total, stack = 0, [self]
        while stack:
            node = stack.pop()
            total += 1
            stack.extend(node.children)
        return total


def parse_parens(text: str) -> RawTree:
    """Parse ``tree := "(" tree* ")"``; surrounding whitespace is ignored."""
    text = text.strip()
    if not text:
        raise TreeError("empty tree text")
    stack: list[RawTree] = []
    root = None
    for pos, ch in enumerate(text):
        if ch == "(":
            if root is not None:
                raise TreeError(f"trailing input at column {pos + 1}")
            node = RawTree()
            if stack:
                stack[-1].children.append(node)
            stack.append(node)
        elif ch == ")":
            if not stack:
                raise TreeError(f"unbalanced ')' at column {pos + 1}")
            node = stack.pop()
            if not stack:
                root = node
        else:
            raise TreeError(f"unexpected character {ch!r} at column {pos + 1}")
    if stack or root is None:
        raise TreeError("unbalanced '('")
    return root


def to_parens(tree: RawTree) -> str:
    parts: list[str] = []
    stack: list[object] = [tree]
    while stack:
        item = stack.pop()
        if item == ")":
            parts.append(")")
            continue
        parts.append("(")
        stack.append(")")
        stack.extend(reversed(item.children))
    return "".join(parts)


def raw_from_labeled(tree: LabeledTree) -> RawTree:
    """Forget labels but keep slot order as ingestion order."""
    raws = {v: RawTree() for v in tree.nodes}
    for v in tree.sorted_nodes():
        if v:
            raws[v.parent].children.append(raws[v])
    return raws[ROOT]


def _canonical(raw: RawTree) -> dict:
    """Map ``id(node)`` to (size, height, encoding, ordered children).

    Children are ordered by descendant count (largest first), then height
    (deepest first), then the parenthesis encoding of the already relabeled
    subtree; Python's stable sort keeps ingestion order for exact copies.
    """
    # post-order without recursion so deep chains do not hit the limit
    info: dict[int, tuple[int, int, str, list[RawTree]]] = {}
    stack = [(raw, False)]
    while stack:
        node, done = stack.pop()
        if not done:
            stack.append((node, True))
            stack.extend((c, False) for c in node.children)
            continue
        kids = sorted(
            node.children,
            key=lambda c: (-info[id(c)][0], -info[id(c)][1], info[id(c)][2]),
        )
        size = 1 + sum(info[id(c)][0] for c in kids)
        height = 1 + max((info[id(c)][1] for c in kids), default=-1)
        enc = "(" + "".join(info[id(c)][2] for c in kids) + ")"
        info[id(node)] = (size, height, enc, kids)
    return info


def descendant_relabel(raw: RawTree) -> LabeledTree:
    """Descendant correspondence: the child with most descendants gets slot 0."""
    info = _canonical(raw)
    nodes = [ROOT]
    stack = [(raw, ROOT)]
    while stack:
        node, label = stack.pop()
        for slot, child in enumerate(info[id(node)][3]):
            child_label = NodeId(label + (slot,))
            nodes.append(child_label)
            stack.append((child, child_label))
    return LabeledTree(nodes, check=False)


def level_order_index(tree: LabeledTree) -> dict[NodeId, int]:
    """Heap-style numbering of a binary tree: root 1, children 2i and 2i+1."""
    index: dict[NodeId, int] = {}
    for v in tree.sorted_nodes():
        if any(s > 1 for s in v):
            raise TreeError("level-order indexing requires binary tree")
        i = 1
        for s in v:
            i = 2 * i + s
        index[v] = i
    return index
