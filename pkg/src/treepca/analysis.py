"""Downstream analyses built on a component decomposition.

Components are removed least influential first (component n, then n-1, ...)
and the data are re-projected onto what remains. All outputs are plain
records suitable for CSV; plotting is left to the caller.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

from ._stats import DegenerateRegressor, RegressionResult, ols_slope_pvalue
from .pca import Decomposition, node_counts
from .tree_core import ROOT, DataSet, LabeledTree, NodeId, TreeError, TreePath, enumerate_paths, support

__all__ = [
    "CurvePoint",
    "PValuePoint",
    "SplitScatterPoint",
    "SplitResult",
    "LayoutPoint",
    "RegressionResult",
    "ols_slope_pvalue",
    "variation_curve",
    "scale_curve",
    "projection_sizes",
    "pvalue_curve",
    "set_split",
    "radial_layout",
    "component_ranks",
    "node_component_rank",
    "layout_svg",
]


@dataclass(frozen=True)
class CurvePoint:
    removed: float
    explained: float


@dataclass(frozen=True)
class PValuePoint:
    removed: int
    p_value: float | None  # None marks a degenerate regression


@dataclass(frozen=True)
class SplitScatterPoint:
    tree_id: str
    x: float
    y: float


@dataclass(frozen=True)
class SplitResult:
    set1: tuple[TreePath, ...]
    set2: tuple[TreePath, ...]
    points: tuple[SplitScatterPoint, ...]
    set1_sizes: tuple[int, ...]
    set2_sizes: tuple[int, ...]


@dataclass(frozen=True)
class LayoutPoint:
    node: NodeId
    radius: float
    angle: float
    arc: tuple[float, float]


def _check_matches(ds: DataSet, dec: Decomposition) -> None:
    expected = {p.leaf: p for p in enumerate_paths(support(ds), dec.l0)}
    got = {c.leaf: c.path for c in dec.components}
    if got != expected or sorted(c.index for c in dec.components) != list(range(1, dec.n + 1)):
        raise TreeError("decomposition does not match dataset")


def _removal_drops(dec: Decomposition) -> list[list[NodeId]]:
    """Nodes leaving the span at each removal, in removal order."""
    cover: Counter = Counter()
    for c in dec.components:
        cover.update(v for v in c.path.nodes if v not in dec.l0.nodes)
    drops = []
    for c in dec.removal_order():
        lost = []
        for v in c.path.nodes:
            if v in dec.l0.nodes:
                continue
            cover[v] -= 1
            if cover[v] == 0:
                lost.append(v)
        drops.append(lost)
    return drops


def variation_curve(ds: DataSet, dec: Decomposition) -> list[CurvePoint]:
    """Data nodes still covered after removing 0..n components.

    ``explained(j)`` counts, over all trees, the nodes of each tree lying in
    ``l0`` or on one of the n - j components not yet removed.
    """
    _check_matches(ds, dec)
    counts = node_counts(ds)
    explained = sum(counts.values())  # l0 plus all paths covers the support
    points = [CurvePoint(0, explained)]
    for j, lost in enumerate(_removal_drops(dec), start=1):
        explained -= sum(counts[v] for v in lost)
        points.append(CurvePoint(j, explained))
    return points


def scale_curve(points: Sequence[CurvePoint]) -> list[CurvePoint]:
    """Rescale both axes so their maxima become 100.

    x is mapped affinely from [min, max] onto [0, 100]; y is divided by its
    maximum. A constant axis maps to 100 throughout.
    """
    if not points:
        raise ValueError("empty curve")
    xs = [p.removed for p in points]
    ys = [p.explained for p in points]
    x_lo, x_hi = min(xs), max(xs)
    y_hi = max(ys)

    def sx(x):
        return 100.0 if x_hi == x_lo else 100.0 * (x - x_lo) / (x_hi - x_lo)

    def sy(y):
        return 100.0 if y_hi == min(ys) or y_hi == 0 else 100.0 * y / y_hi

    return [CurvePoint(sx(p.removed), sy(p.explained)) for p in points]


def projection_sizes(ds: DataSet, dec: Decomposition) -> list[list[int]]:
    """``sizes[j][i]`` is the node count of tree i projected onto the span
    left after j removals, ``l0`` included."""
    _check_matches(ds, dec)
    l0 = dec.l0.nodes
    holders: dict[NodeId, list[int]] = {}
    for i, t in enumerate(ds):
        for v in t.nodes:
            if v not in l0:
                holders.setdefault(v, []).append(i)
    sizes = [len(l0) + len(t.nodes - l0) for t in ds]
    rows = [list(sizes)]
    for lost in _removal_drops(dec):
        for v in lost:
            for i in holders.get(v, ()):
                sizes[i] -= 1
        rows.append(list(sizes))
    return rows


def pvalue_curve(ds: DataSet, dec: Decomposition, covariate: str) -> list[PValuePoint]:
    """Slope-test p-value of projection size against a covariate, per removal count."""
    x = ds.covariate(covariate)
    out = []
    for j, sizes in enumerate(projection_sizes(ds, dec)):
        try:
            p = ols_slope_pvalue(x, sizes).p_value
        except DegenerateRegressor:
            p = None
        out.append(PValuePoint(j, p))
    return out


def set_split(ds: DataSet, dec: Decomposition, fraction: float = 0.9) -> SplitResult:
    """Split components into the least influential share (SET 2) and the rest.

    SET 2 takes the first ``ceil(fraction * n)`` components in removal order,
    clamped so that both sets are non-empty.
    """
    if not 0.0 < fraction < 1.0:
        raise ValueError("fraction must lie strictly between 0 and 1")
    _check_matches(ds, dec)
    n = dec.n
    if n < 2:
        raise TreeError("set split needs at least two components")
    k2 = min(n - 1, max(1, math.ceil(fraction * n - 1e-9)))
    order = dec.removal_order()
    set2 = tuple(c.path for c in order[:k2])
    set1 = tuple(c.path for c in order[k2:])
    l0 = dec.l0.nodes
    span1 = frozenset().union(*(p.nodes for p in set1))
    span2 = frozenset().union(*(p.nodes for p in set2))
    s1 = [len(l0 | (t.nodes & span1)) for t in ds]
    s2 = [len(l0 | (t.nodes & span2)) for t in ds]
    m1, m2 = max(s1), max(s2)
    points = tuple(
        SplitScatterPoint(rec.id, a / m1 if m1 else 0.0, b / m2 if m2 else 0.0)
        for rec, a, b in zip(ds.records, s1, s2)
    )
    return SplitResult(set1, set2, points, tuple(s1), tuple(s2))


def radial_layout(t: LabeledTree) -> list[LayoutPoint]:
    """Concentric-circle drawing coordinates, root at the origin.

    A node on circle ``depth`` sits at the middle of its arc. Each arc is
    shared among the children in slot order, proportionally to
    1 + descendants, starting from the low end of the parent's arc.
    """
    kids = t.children_map()
    size: dict[NodeId, int] = {}
    for v in reversed(t.sorted_nodes()):
        size[v] = 1 + sum(size[c] for c in kids[v])
    points = []
    arcs = {ROOT: (0.0, 360.0)}
    for v in t.sorted_nodes():
        lo, hi = arcs[v]
        angle = 0.0 if not v else (lo + hi) / 2.0
        points.append(LayoutPoint(v, float(len(v)), angle, (lo, hi)))
        children = kids[v]
        if not children:
            continue
        total = sum(size[c] for c in children)
        start, acc = lo, 0
        for c in children:
            acc += size[c]
            end = lo + (hi - lo) * acc / total
            arcs[c] = (start, end)
            start = end
    return points


def component_ranks(dec: Decomposition) -> dict[int, int]:
    """Rank components by stored weight sum, 1 = smallest (coolest colour)."""
    order = sorted(dec.components, key=lambda c: (c.weight_sum, -c.index))
    return {c.index: r for r, c in enumerate(order, start=1)}


def node_component_rank(dec: Decomposition) -> dict[NodeId, int]:
    """Highest component rank among the components passing through each node."""
    ranks = component_ranks(dec)
    out: dict[NodeId, int] = {}
    for c in dec.components:
        for v in c.path.nodes:
            out[v] = max(out.get(v, 0), ranks[c.index])
    return out


def _colour(rank: int, top: int) -> str:
    # blue (low) to red (high) through green
    f = 0.0 if top <= 1 else (rank - 1) / (top - 1)
    r = int(round(255 * min(1.0, 2 * f)))
    b = int(round(255 * min(1.0, 2 * (1 - f))))
    g = int(round(255 * (1 - abs(2 * f - 1))))
    return f"#{r:02x}{g:02x}{b:02x}"


def layout_svg(
    points: Iterable[LayoutPoint],
    ranks: dict[NodeId, int] | None = None,
    ring: float = 40.0,
) -> str:
    """Minimal SVG: one circle per depth, a dot per node, parent edges."""
    points = list(points)
    depth = int(max(p.radius for p in points))
    half = ring * (depth + 1)
    where = {}
    for p in points:
        a = math.radians(p.angle)
        where[p.node] = (half + ring * p.radius * math.cos(a), half - ring * p.radius * math.sin(a))
    top = max(ranks.values(), default=1) if ranks else 1
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{2 * half:.0f}" '
        f'height="{2 * half:.0f}" viewBox="0 0 {2 * half:.0f} {2 * half:.0f}">'
    ]
    for d in range(1, depth + 1):
        out.append(
            f'<circle cx="{half:.2f}" cy="{half:.2f}" r="{ring * d:.2f}" '
            'fill="none" stroke="#cccccc"/>'
        )
    for p in points:
        if p.node:
            (x1, y1), (x2, y2) = where[p.node.parent], where[p.node]
            out.append(
                f'<line x1="{x1:.2f}" y1="{y1:.2f}" x2="{x2:.2f}" y2="{y2:.2f}" '
                'stroke="#888888" stroke-width="0.5"/>'
            )
    for p in points:
        x, y = where[p.node]
        fill = _colour(ranks[p.node], top) if ranks and p.node in ranks else "#000000"
        out.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="2" fill="{fill}"><title>{p.node}</title></circle>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
