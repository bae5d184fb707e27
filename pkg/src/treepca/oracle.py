"""Exhaustive reference implementations for verifying :mod:`treepca.pca`.

Everything here enumerates candidate trees explicitly and measures distances
directly. Nothing calls into ``pca`` beyond its ``TreeLine`` value type, so
agreement between the two is real evidence. Running time is exponential in
the number of lines; bounds are enforced, never silently truncated.
"""
from __future__ import annotations

import math
from typing import Sequence

from .pca import TreeLine
from .tree_core import DataSet, LabeledTree, TreeError, TreePath, distance, enumerate_paths, support

__all__ = [
    "OracleBoundError",
    "DEFAULT_LINE_BOUND",
    "DEFAULT_UNION_BOUND",
    "brute_force_projection",
    "brute_force_projection_union",
    "union_members",
    "brute_force_pc",
    "brute_force_bpc",
]

DEFAULT_LINE_BOUND = 32
DEFAULT_UNION_BOUND = 10**6


class OracleBoundError(RuntimeError):
    def __init__(self, detail: str):
        super().__init__(f"oracle bound: {detail}")


def _line_members(line: TreeLine) -> list[frozenset]:
    members = [line.l0.nodes]
    grown = set(line.l0.nodes)
    for v in line.added:
        grown.add(v)
        members.append(frozenset(grown))
    return members


def brute_force_projection(
    t: LabeledTree, line: TreeLine, max_length: int = DEFAULT_LINE_BOUND
) -> LabeledTree:
    """Member of ``line`` nearest to ``t``; the earliest member wins ties."""
    if len(line) > max_length:
        raise OracleBoundError(f"line has {len(line)} members > {max_length}")
    best, best_d = None, None
    for m in _line_members(line):
        d = len(t.nodes ^ m)
        if best_d is None or d < best_d:
            best, best_d = m, d
    return LabeledTree(best, check=False)


def union_members(
    lines: Sequence[TreeLine], max_combinations: int = DEFAULT_UNION_BOUND
) -> set[frozenset]:
    """Every tree ``l_{1,i_1} | ... | l_{q,i_q}`` for all index choices.

    Duplicate unions are collapsed as they appear, which keeps enumeration
    cheap when lines share prefixes but still visits every index tuple's
    result.
    """
    if not lines:
        raise TreeError("no tree-lines given")
    l0 = lines[0].l0
    if any(line.l0 != l0 for line in lines):
        raise TreeError("starting trees differ")
    combos = math.prod(len(line) for line in lines)
    if combos > max_combinations:
        raise OracleBoundError(f"{combos} index combinations > {max_combinations}")
    family = {l0.nodes}
    for line in lines:
        members = _line_members(line)
        family = {s | m for s in family for m in members}
    return family


def _nearest(t: LabeledTree, family) -> frozenset:
    scored = [(len(t.nodes ^ s), s) for s in family]
    best_d = min(d for d, _ in scored)
    ties = [s for d, s in scored if d == best_d]
    # family is an unordered set; break ties on labels to stay deterministic
    return ties[0] if len(ties) == 1 else min(ties, key=sorted)


def brute_force_projection_union(
    t: LabeledTree, lines: Sequence[TreeLine], max_combinations: int = DEFAULT_UNION_BOUND
) -> LabeledTree:
    return LabeledTree(_nearest(t, union_members(lines, max_combinations)), check=False)


def _objective(ds: DataSet, l0: LabeledTree, lines: Sequence[TreeLine], bound: int) -> int:
    if not lines:
        return sum(distance(t, l0) for t in ds)
    family = union_members(lines, bound)
    return sum(min(len(t.nodes ^ s) for s in family) for t in ds)


def _prefer(leaf_a, leaf_b, leftmost: bool) -> bool:
    return leaf_a < leaf_b if leftmost else leaf_a > leaf_b


def brute_force_pc(
    ds: DataSet,
    l0: LabeledTree,
    prev_lines: Sequence[TreeLine] = (),
    tiebreak: str = "left",
    max_combinations: int = DEFAULT_UNION_BOUND,
) -> tuple[TreeLine, int]:
    """Next forward component by direct minimisation of the total distance.

    Returns the winning line and its objective value.
    """
    taken = {line.added[-1] for line in prev_lines}
    best = None
    for p in enumerate_paths(support(ds), l0):
        if p.leaf in taken:
            continue
        cand = TreeLine(l0, tuple(v for v in p.nodes if v not in l0.nodes))
        obj = _objective(ds, l0, [*prev_lines, cand], max_combinations)
        if best is None or obj < best[1] or (
            obj == best[1] and _prefer(p.leaf, best[0].added[-1], tiebreak == "left")
        ):
            best = (cand, obj)
    if best is None:
        raise TreeError("decomposition complete")
    return best


def brute_force_bpc(
    ds: DataSet,
    l0: LabeledTree,
    remaining: Sequence[TreePath],
    tiebreak: str = "left",
    max_combinations: int = DEFAULT_UNION_BOUND,
) -> tuple[TreeLine, int]:
    """Next backward component: the line whose removal costs least fit.

    ``tiebreak`` names the forward rule; ties here go the opposite way.
    Returns the winning line and the objective of the span left behind.
    """
    if not remaining:
        raise TreeError("no remaining paths")
    lines = [TreeLine(l0, tuple(v for v in p.nodes if v not in l0.nodes)) for p in remaining]
    best = None
    for i, cand in enumerate(lines):
        others = lines[:i] + lines[i + 1:]
        obj = _objective(ds, l0, others, max_combinations)
        if best is None or obj < best[1] or (
            obj == best[1] and _prefer(cand.added[-1], best[0].added[-1], tiebreak == "right")
        ):
            best = (cand, obj)
    return best
