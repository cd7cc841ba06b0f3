import numpy as np
import pytest

from vpc_forge.disjunction import (
    BoundChange,
    build_partial_tree,
    disjunction_from_json,
    make_term,
    most_fractional,
    normalize_changes,
    term_polyhedron,
)
from vpc_forge.errors import AllPruned, NoFractional
from vpc_forge.model import IntegerHull, parse_instance, standardize


def test_toy_k_two_leaves(toy_k):
    d = build_partial_tree(toy_k, 2)
    assert len(d) == 2 and d.pruned == 0
    assert [t.bound_changes for t in d.terms] == [(BoundChange(1, "L", 0),), (BoundChange(1, "G", 1),)]
    assert d.tree_log[0]["var"] == 1


def test_toy_k_full_tree(toy_k):
    # the second split of x2 >= 1 on x1 has an empty up branch
    d = build_partial_tree(toy_k, 4)
    assert len(d) == 2 and d.pruned == 1
    assert all(toy_k.is_integral(t.leaf_lp.x) for t in d.terms)


def test_bad_leaf_count(toy_k):
    with pytest.raises(ValueError):
        build_partial_tree(toy_k, 3)


def test_no_fractional():
    inst = standardize(parse_instance('{"name":"i","sense":"min","variables":[{"name":"x","lb":0,"ub":3,"integer":true}],"objective":{"x":1},"rows":[]}'))
    with pytest.raises(NoFractional):
        build_partial_tree(inst, 2)


def test_all_pruned():
    inst = standardize(parse_instance('{"name":"i","sense":"min","variables":[{"name":"x","lb":0,"ub":1,"integer":true}],"objective":{"x":1},"rows":[{"name":"a","coefs":{"x":1},"sense":">=","rhs":2}]}'))
    with pytest.raises(AllPruned):
        build_partial_tree(inst, 2)


def test_terms_cover_integer_points(desk):
    for inst in desk:
        H = IntegerHull(inst)
        pts = H.points if H.points is not None else None
        if pts is None:
            continue
        for L in (2, 8):
            d = build_partial_tree(inst, L)
            for x in pts:
                assert d.covers(x), (inst.name, L, x)


def test_normalize_keeps_tightest():
    ch = normalize_changes([BoundChange(0, "G", 1), BoundChange(0, "G", 2), BoundChange(0, "L", 5), BoundChange(0, "L", 3)])
    assert ch == (BoundChange(0, "G", 2), BoundChange(0, "L", 3))


def test_term_polyhedron_order(example1):
    t = make_term(example1, 0, [BoundChange(0, "L", 0)])
    Q = term_polyhedron(example1, t)
    assert Q.m == example1.q + 1 + example1.n
    assert np.array_equal(Q.A[example1.q], [-1, 0, 0])
    assert np.array_equal(Q.A[-3:], np.eye(3))


def test_from_json_matches_example1(example1):
    d = disjunction_from_json(example1, [[{"var": "x1", "sense": "<=", "bound": 0}], [{"var": "x1", "sense": ">=", "bound": 1}]])
    assert np.allclose(d.terms[0].leaf_lp.x, [0, 0.5, 0.75])
    assert d.terms[0].leaf_lp.obj == pytest.approx(-0.875)


def test_most_fractional_ties():
    assert most_fractional(np.array([0.5, 0.5, 0.2]), [0, 1, 2]) == 0
    assert most_fractional(np.array([1.0, 2.0]), [0, 1]) is None
