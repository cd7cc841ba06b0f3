import json
import math

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from vpc_forge.certify import FarkasCertificate, certify_cut
from vpc_forge.collector import collect
from vpc_forge.disjunction import BoundChange, build_partial_tree, disjunction_from_json, make_term
from vpc_forge.linalg_lp import solve_lp
from vpc_forge.model import IntegerHull, parse_instance, standardize
from vpc_forge.monoidal import (
    MonoidInstance,
    brute_force_monoid,
    monoid_value,
    solve_monoid,
    strengthen_cut,
    strengthening_stats,
    term_lower_bounds,
)
from vpc_forge.prlp import Cut, build_prlp, harvest_cuts


def test_spec_examples():
    z, m = solve_monoid([1.2, 0.1], [1, 1])
    assert z == pytest.approx(-0.2, abs=1e-12) and m.tolist() == [1, -1]
    z, m = solve_monoid([0, 0, 0], [1, 2, 0.5])
    assert z == 0.0 and m.tolist() == [0, 0, 0]
    z, m = solve_monoid([0.5, 0.3], [1, 0])
    assert z == pytest.approx(-0.3) and sum(m) >= 0
    assert monoid_value(m, [0.5, 0.3], [1, 0]) == pytest.approx(-0.3)


def test_exact_mode_examples():
    z, m = solve_monoid([1.2, 0.1], [1, 1], exact=True)
    assert z == pytest.approx(-0.2, abs=1e-12)
    z, m = solve_monoid([0.375, 2.5, 1.0], [0.75, 1.25, 2.0], exact=True)
    bz, _ = brute_force_monoid([0.375, 2.5, 1.0], [0.75, 1.25, 2.0])
    assert z == bz


def test_clamping():
    mi = MonoidInstance.clamped([1e-12, 1.0], [5e-10, 1.0])
    assert mi.s[0] == 0.0 and mi.d[0] == 0.0
    with pytest.raises(ValueError):
        MonoidInstance.clamped([-1.0], [1.0])


dyadic = st.integers(0, 24).map(lambda k: k / 8)


def _inside_box(s, d, B=5):
    """True when some optimal m lies in [-B, B]^T, so the box oracle is exact."""
    if any(0 < x < 3 / B for x in d):
        return False
    zero = [t for t in range(len(s)) if d[t] == 0]
    if zero:
        z = max(-s[t] for t in zero)
        comp = -sum(math.floor((z + s[t]) / d[t]) for t in range(len(s)) if d[t] > 0)
        return comp <= B
    return True


@given(st.lists(st.tuples(dyadic, st.one_of(st.just(0.0), dyadic.filter(lambda x: x > 0))), min_size=1, max_size=4), st.booleans())
def test_oracle_equivalence(pairs, exact):
    s = [p[0] for p in pairs]
    d = [p[1] for p in pairs]
    assume(_inside_box(s, d))
    bz, _ = brute_force_monoid(s, d)
    z, m = solve_monoid(s, d, exact=exact)
    assert abs(z - bz) <= 1e-9
    assert sum(m) >= 0
    assert abs(monoid_value(m, s, d) - z) <= 1e-9
    assert z <= 0


@given(st.lists(st.floats(0, 50), min_size=1, max_size=6), st.lists(st.floats(0.01, 7), min_size=6, max_size=6))
def test_large_values_adaptive_box(s, d):
    d = d[: len(s)]
    z, m = solve_monoid(s, d)
    assert sum(m) >= 0 and z <= 0
    assert monoid_value(m, s, d) == pytest.approx(z, abs=1e-9 * (1 + max(s)))
    # local optimality: moving one unit from t to u never improves
    for t in range(len(s)):
        for u in range(len(s)):
            if t != u:
                mm = m.copy()
                mm[t] -= 1
                mm[u] += 1
                assert monoid_value(mm, s, d) >= z - 1e-9 * (1 + max(s))
    # lower bracket: z* >= -max s
    assert z >= -max(s) - 1e-9


def test_lower_bounds_toy_k(toy_k):
    up = make_term(toy_k, 0, [BoundChange(0, "G", 1)])
    down = make_term(toy_k, 1, [BoundChange(0, "L", 0)])
    tb = term_lower_bounds(toy_k, up)
    assert tb.ell.tolist() == [0.0] and tb.delta.tolist() == [1.0]
    tb = term_lower_bounds(toy_k, down)
    assert tb.ell.tolist() == [-1.0] and tb.delta.tolist() == [1.0]


def test_lower_bounds_unbounded():
    inst = standardize(parse_instance(json.dumps({
        "name": "u", "sense": "min",
        "variables": [{"name": "x", "lb": 0, "ub": None, "integer": True}],
        "objective": {"x": 1}, "rows": []})))
    t = make_term(inst, 0, [BoundChange(0, "L", 2)])
    tb = term_lower_bounds(inst, t)
    assert tb.infinite.tolist() == [True]


SYN = {
    "name": "syn", "sense": "min",
    "variables": [{"name": "x1", "lb": 0, "ub": 2, "integer": True}, {"name": "x2", "lb": 0, "ub": 1, "integer": True}],
    "objective": {"x1": 1, "x2": 1},
    "rows": [{"name": "c", "coefs": {"x1": 1, "x2": -1}, "sense": ">=", "rhs": -1}],
}


def test_synthetic_strengthening():
    """Hand-built certificates with u_hat_1 = (1.2, 0.1) and d = (1, 1)."""
    inst = standardize(parse_instance(json.dumps(SYN)))
    down = make_term(inst, 0, [BoundChange(1, "L", 0)])
    up = make_term(inst, 1, [BoundChange(1, "G", 1)])
    bounds = {t.term_id: term_lower_bounds(inst, t) for t in (down, up)}
    assert bounds[0].delta.tolist() == [1.0] and bounds[1].delta.tolist() == [1.0]
    alpha = np.array([1.2, 0.0])
    q = inst.q
    u_down = np.zeros(q)
    u_up = np.zeros(q)
    u_up[0] = 1.1
    certs = {
        0: FarkasCertificate(0, (), None, u_down, np.array([1.0]), np.array([1.2, 1.0]), 0.0),
        1: FarkasCertificate(1, (), None, u_up, np.array([1.0]), np.array([0.1, 0.1]), -0.1),
    }
    # the certificates really reproduce alpha
    for t, term in ((0, down), (1, up)):
        c = certs[t]
        assert np.allclose(c.u @ inst.lp.A + c.u0 @ term.D + c.u_hat, alpha)
    cut = Cut(alpha, -0.1)
    res = strengthen_cut(cut, certs, bounds, inst)
    assert res.cut.alpha[0] == pytest.approx(1.0)
    # x2 is integer too: s = (1.0, 0.1) gives -0.1
    assert res.cut.alpha[1] == pytest.approx(-0.1) and res.cut.strengthened
    H = IntegerHull(inst)
    assert not H.violated_by(res.cut.alpha, res.cut.beta, 1e-7)


def test_zero_slack_and_missing_terms(example1):
    d = disjunction_from_json(example1, [[{"var": "x1", "sense": "<=", "bound": 0}], [{"var": "x1", "sense": ">=", "bound": 1}]])
    coll = collect(example1, d)
    cut = Cut([-5 / 8, -1 / 4, -1], -7 / 8)
    certs, fails = certify_cut(cut, coll)
    bounds = {t.term_id: term_lower_bounds(example1, t) for t in d.terms}
    res = strengthen_cut(cut, certs, bounds, example1)
    assert np.array_equal(res.cut.alpha, cut.alpha)
    assert not res.cut.strengthened
    res = strengthen_cut(cut, {0: certs[0]}, bounds, example1)
    assert np.array_equal(res.cut.alpha, cut.alpha) and 0 in res.skipped


def test_never_weaker_and_valid_on_desk(desk):
    results = []
    for inst in desk:
        H = IntegerHull(inst)
        root = solve_lp(inst.lp)
        for L in (2, 4, 8):
            disj = build_partial_tree(inst, L)
            coll = collect(inst, disj)
            bounds = {t.term_id: term_lower_bounds(inst, t) for t in disj.terms}
            for cut in harvest_cuts(build_prlp(coll, root.x), 4, inst.lp.objective, inst.integer_vars):
                certs, fails = certify_cut(cut, coll)
                r = strengthen_cut(cut, certs, bounds, inst, fails)
                results.append(r)
                assert np.all(r.cut.alpha <= cut.alpha)
                cont = [j for j in range(inst.n) if j not in inst.integer_vars]
                assert np.array_equal(r.cut.alpha[cont], cut.alpha[cont])
                for k in inst.integer_vars:
                    if all(certs[t].u_hat[k] == 0 for t in certs) and not fails:
                        assert r.cut.alpha[k] == cut.alpha[k]
                assert not H.violated_by(r.cut.alpha, r.cut.beta, 1e-7), inst.name
    st_ = strengthening_stats(results, 5)
    assert 0 <= st_["pct_cuts_strengthened"] <= 100
