import json

import numpy as np
import pytest

from vpc_forge.corpus import generate_desk
from vpc_forge.errors import ZeroGap
from vpc_forge.harness import COLUMNS, gap_closed, run_experiment, run_instance_leaf, verify_cuts
from vpc_forge.model import parse_instance, standardize
from vpc_forge.prlp import Cut


def test_gap_closed_toy_k(toy_k):
    assert gap_closed(toy_k, [Cut([-1, -1], -1)]) == pytest.approx(100.0)
    assert gap_closed(toy_k, []) == 0.0


def test_zero_gap():
    inst = standardize(parse_instance('{"name":"i","sense":"min","variables":[{"name":"x","lb":0,"ub":3,"integer":true}],"objective":{"x":1},"rows":[]}'))
    with pytest.raises(ZeroGap):
        gap_closed(inst, [])


def test_verify_cuts(toy_k):
    v = verify_cuts(toy_k, [Cut([-1, -1], -0.5), Cut([-1, -1], -1)])
    assert [x.valid_pi for x in v] == [False, True]


def test_toy_k_report(toy_k):
    rep = run_experiment([toy_k], (2, 4), strengthen=True)
    assert len(rep.rows) == 2
    labels = [lbl for lbl, _ in rep.summary()]
    assert labels == ["2 leaves", "4 leaves", "Best", "Wins"]
    assert rep.best("toy-k", "V") == pytest.approx(100.0)


def test_empty_report():
    rep = run_experiment([], (2,))
    assert rep.rows == [] and rep.instances == []
    assert "Percent gap closed" in rep.to_text()


def test_error_isolation(toy_k):
    nofrac = standardize(parse_instance('{"name":"flat","sense":"min","variables":[{"name":"x","lb":0,"ub":3,"integer":true}],"objective":{"x":1},"rows":[]}'))
    rep = run_experiment([nofrac, toy_k], (2,))
    errs = {r.instance: r.error for r in rep.rows}
    assert errs["flat"] and errs["toy-k"] is None


def test_pruned_tree_marked():
    # both children of the only fractional variable are infeasible
    doc = {
        "name": "allpruned", "sense": "min",
        "variables": [{"name": "x", "lb": 0, "ub": 1, "integer": True}, {"name": "y", "lb": 0, "ub": 1, "integer": False}],
        "objective": {"y": 1},
        "rows": [{"name": "a", "coefs": {"x": 2}, "sense": "=", "rhs": 1}],
        "reference": {"ip_value": 5},
    }
    rep = run_experiment([standardize(parse_instance(json.dumps(doc)))], (2,))
    assert "AllPruned" in rep.rows[0].error


def test_dominance_and_disjunctive_bound(desk):
    rep = run_experiment(desk[:12], (2, 4, 8), strengthen=True)
    for r in rep.ok_rows():
        assert r.Vp >= r.V - 1e-6 and r.GVp >= r.GV - 1e-6
        assert r.GV >= max(r.G, r.V) - 1e-6
        if r.disj_gap is not None:
            assert r.V <= r.disj_gap + 1e-6
    for i in rep.instances:
        for c in COLUMNS:
            vals = [r.value(c) for r in rep.rows if r.instance == i and r.value(c) is not None]
            assert rep.best(i, c) == max(vals)


def test_strengthen_off_leaves_plus_columns_empty(toy_k):
    rep = run_experiment([toy_k], (2,), strengthen=False)
    assert rep.rows[0].Vp is None and rep.rows[0].GVp is None
    assert ",," in rep.to_csv().splitlines()[1]


def test_report_formats(toy_k, example1):
    rep = run_experiment([toy_k, example1], (2, 4), strengthen=True)
    doc = json.loads(rep.to_json())
    assert doc["columns"] == list(COLUMNS)
    assert [t["row"] for t in doc["table"]] == ["2 leaves", "4 leaves", "Best", "Wins"]
    assert "time_total" not in doc["rows"][0]
    assert "time_total" in json.loads(rep.to_json(timing=True))["rows"][0]
    text = rep.to_text()
    assert "Cut generation time" in text and "Wins" in text


def test_corpus_generator_deterministic():
    a = generate_desk(7, {"knap": 1, "genint": 1})
    b = generate_desk(7, {"knap": 1, "genint": 1})
    assert [np.array_equal(x.lp.A, y.lp.A) for x, y in zip(a, b)] == [True, True]
    assert all(x.reference["ip_value"] != x.reference["lp_value"] for x in a)


def test_run_instance_leaf_artifacts(example1):
    run = run_instance_leaf(example1, 2)
    assert run.vpcs and run.collection is not None and run.strengthened
