import math
import random

import numpy as np
import pytest
from scipy import stats

from conftest import random_dataset, random_tree, toy_trees
from treepca._stats import DegenerateRegressor, betainc, ols_slope_pvalue
from treepca.analysis import (
    CurvePoint,
    layout_svg,
    node_component_rank,
    projection_sizes,
    pvalue_curve,
    radial_layout,
    scale_curve,
    set_split,
    variation_curve,
)
from treepca.pca import decompose
from treepca.tree_core import ROOT, DataSet, LabeledTree, Record, TreeError, TreePath, intersection


def reference_ols(x, y):
    """Textbook OLS through numpy least squares, tail from scipy's t."""
    x, y = np.asarray(x, float), np.asarray(y, float)
    design = np.column_stack([np.ones_like(x), x])
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - design @ coef
    df = len(x) - 2
    s2 = resid @ resid / df
    se = math.sqrt(s2 / np.sum((x - x.mean()) ** 2))
    return coef[1], 2 * stats.t.sf(abs(coef[1] / se), df)


def toy_with_covariate():
    return DataSet(
        Record(f"t{i}", t, {"age": float(i)}) for i, t in enumerate(toy_trees(), start=1)
    )


def test_variation_curve_toy(toy, toy_int):
    dec = decompose(toy, toy_int, "backward")
    # by hand: r.2.1 costs t3 one node, r.0.0 costs t1 one, r.1.1 costs t1,t3,
    # r.1.0 costs t2,t3, r.2.0 takes r.2 along (3), r.0.1 takes r.0 along (4)
    assert [p.explained for p in variation_curve(toy, dec)] == [19, 18, 17, 15, 13, 10, 6]


def test_variation_curve_random_properties():
    rng = random.Random(8)
    for _ in range(100):
        ds = random_dataset(rng)
        l0 = intersection(ds) if rng.random() < 0.5 else LabeledTree([ROOT])
        curve = [p.explained for p in variation_curve(ds, decompose(ds, l0, "backward"))]
        assert curve[0] == sum(len(t) for t in ds)
        assert curve[-1] == sum(len(t.nodes & l0.nodes) for t in ds)
        assert all(a >= b for a, b in zip(curve, curve[1:]))


def test_curve_rejects_foreign_decomposition(toy, toy_int):
    other = DataSet.from_trees([LabeledTree.from_strings(["r", "r.5"])])
    with pytest.raises(TreeError, match="does not match"):
        variation_curve(toy, decompose(other, LabeledTree([ROOT])))


def test_scale_curve():
    pts = [CurvePoint(0, 19), CurvePoint(1, 18), CurvePoint(2, 6)]
    scaled = scale_curve(pts)
    assert scaled[0] == CurvePoint(0.0, 100.0)
    assert scaled[2].removed == 100.0
    assert scaled[1].explained == pytest.approx(100 * 18 / 19)
    doubled = scale_curve([CurvePoint(2 * p.removed, 2 * p.explained) for p in pts])
    for a, b in zip(doubled, scaled):
        assert (a.removed, a.explained) == pytest.approx((b.removed, b.explained))


def test_projection_sizes_toy(toy, toy_int):
    sizes = projection_sizes(toy, decompose(toy, toy_int, "backward"))
    assert sizes[0] == [6, 6, 7]
    assert sizes[1] == [6, 6, 6]
    assert sizes[-1] == [2, 2, 2]


def test_pvalue_curve_toy():
    ds = toy_with_covariate()
    curve = pvalue_curve(ds, decompose(ds, intersection(ds), "backward"), "age")
    # sizes 6,6,7 against 1,2,3: t = sqrt(3) on one df, so p = 1 - 2*atan(sqrt 3)/pi
    assert curve[0].p_value == pytest.approx(1 / 3, abs=1e-12)
    assert curve[1].p_value == 1.0  # sizes all equal
    with pytest.raises(TreeError, match="no covariate"):
        pvalue_curve(ds, decompose(ds, intersection(ds)), "weight")


def test_ols_small_case():
    res = ols_slope_pvalue([1, 2, 3, 4, 5], [2, 1, 4, 3, 5])
    slope, p = reference_ols([1, 2, 3, 4, 5], [2, 1, 4, 3, 5])
    assert res.slope == pytest.approx(0.8, abs=1e-12)
    assert abs(res.p_value - p) < 1e-8 and abs(res.slope - slope) < 1e-8


def test_ols_edge_cases():
    assert ols_slope_pvalue([1, 2, 3], [4, 4, 4]).p_value == 1.0
    assert ols_slope_pvalue([1, 2, 3], [1, 3, 5]).p_value == 0.0
    with pytest.raises(DegenerateRegressor):
        ols_slope_pvalue([2, 2, 2], [1, 2, 3])
    with pytest.raises(ValueError):
        ols_slope_pvalue([1, 2], [1, 2])


def test_ols_random_against_reference():
    rng = np.random.default_rng(12)
    for _ in range(100):
        n = int(rng.integers(3, 60))
        x = rng.normal(size=n)
        y = 0.3 * x + rng.normal(size=n)
        res = ols_slope_pvalue(x.tolist(), y.tolist())
        slope, p = reference_ols(x, y)
        assert abs(res.slope - slope) < 1e-8
        assert abs(res.p_value - p) < 1e-8
        assert 0.0 <= res.p_value <= 1.0


def test_betainc_against_scipy():
    from scipy.special import betainc as ref

    rng = np.random.default_rng(1)
    for a, b, x in rng.uniform([0.1, 0.1, 0], [50, 50, 1], size=(200, 3)):
        assert betainc(a, b, x) == pytest.approx(ref(a, b, x), abs=1e-12)


def test_set_split_toy(toy, toy_int):
    dec = decompose(toy, toy_int, "backward")
    res = set_split(toy, dec, 5 / 6)
    assert res.set1 == (TreePath.to("r.0.1"),)
    assert len(res.set2) == 5
    assert max(p.x for p in res.points) == 1.0 and max(p.y for p in res.points) == 1.0
    with pytest.raises(ValueError):
        set_split(toy, dec, 1.0)


def test_set_split_complementary():
    rng = random.Random(13)
    done = 0
    while done < 50:
        ds = random_dataset(rng)
        l0 = LabeledTree([ROOT])
        dec = decompose(ds, l0, "backward")
        if dec.n < 2:
            continue
        res = set_split(ds, dec, rng.uniform(0.05, 0.95))
        span1 = frozenset().union(*(p.nodes for p in res.set1))
        span2 = frozenset().union(*(p.nodes for p in res.set2))
        for t in ds:
            assert (l0.nodes | (t.nodes & span1)) | (l0.nodes | (t.nodes & span2)) == t.nodes
        done += 1


def test_set_split_needs_two_components():
    ds = DataSet.from_trees([LabeledTree.from_strings(["r", "r.0"])])
    with pytest.raises(TreeError):
        set_split(ds, decompose(ds, LabeledTree([ROOT])))


def test_radial_layout_small():
    assert [(p.node, p.radius, p.angle) for p in radial_layout(LabeledTree([ROOT]))] == [(ROOT, 0.0, 0.0)]
    pts = radial_layout(LabeledTree.from_strings(["r", "r.0", "r.1"]))
    assert [(p.radius, p.angle) for p in pts[1:]] == [(1.0, 90.0), (1.0, 270.0)]


def test_radial_layout_arcs_partition():
    rng = random.Random(17)
    for _ in range(100):
        t = random_tree(rng, rng.randint(0, 5), rng.randint(1, 4), 0.6)
        pts = {p.node: p for p in radial_layout(t)}
        for v, kids in t.children_map().items():
            p = pts[v]
            assert p.radius == len(v)
            if v:
                lo, hi = pts[v.parent].arc
                assert lo < p.angle < hi
            if kids:
                arcs = [pts[k].arc for k in kids]
                assert arcs[0][0] == pytest.approx(p.arc[0])
                assert arcs[-1][1] == pytest.approx(p.arc[1])
                for (a, b), (c, d) in zip(arcs, arcs[1:]):
                    assert b == pytest.approx(c) and a < b


def test_layout_svg_colours(toy, toy_int):
    dec = decompose(toy, toy_int, "backward")
    svg = layout_svg(radial_layout(toy[2]), node_component_rank(dec))
    assert svg.startswith("<svg") and svg.count("<title>") == len(toy[2])
