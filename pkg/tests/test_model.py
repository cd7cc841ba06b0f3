import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from vpc_forge.corpus import data_path
from vpc_forge.errors import ParseError, TooLarge, UnsupportedFeature
from vpc_forge.linalg_lp import solve_lp
from vpc_forge.model import (
    IntegerHull,
    brute_force_ip,
    load_instance,
    parse_instance,
    serialize_instance,
    standardize,
)

MPS = """NAME          TINY
ROWS
 N  COST
 L  LIM1
 G  LIM2
 E  MYEQN
 L  RNG
COLUMNS
    MARKER                 'MARKER'                 'INTORG'
    X1        COST         1.0   LIM1         1.0
    X1        LIM2         1.0
    MARKER                 'MARKER'                 'INTEND'
    X2        COST         2.0   LIM1         1.0
    X2        MYEQN       -1.0   RNG          1.0
    X3        COST        -1.0   MYEQN        1.0
RHS
    RHS       LIM1         4.0   LIM2         1.0
    RHS       MYEQN        7.0   RNG          3.0
RANGES
    RNG       RNG          2.0
BOUNDS
 UP BND       X1           4.0
 LO BND       X2          -1.0
 UP BND       X2           1.0
 UP BND       X3          10.0
ENDATA
"""


def test_mps_parse():
    inst = parse_instance(MPS, "mps")
    assert inst.name == "TINY"
    assert inst.integer_vars == (0,)
    assert inst.var_names == ("X1", "X2", "X3")
    assert inst.lp.hi[0] == 4 and inst.lp.lo[1] == -1
    # RANGES on an L row gives rhs - |R| <= row <= rhs
    std = standardize(inst)
    assert std.n == 3
    sol = solve_lp(std.lp)
    assert sol.optimal


@pytest.mark.parametrize("bad, exc", [
    ("NAME X\nROWS\n N C\nSOS\nENDATA\n", UnsupportedFeature),
    ("NAME X\nROWS\n N C\nFOO\nENDATA\n", ParseError),
    ("NAME X\nROWS\n N C\nCOLUMNS\n    X1 C abc\nENDATA\n", ParseError),
])
def test_mps_errors(bad, exc):
    with pytest.raises(exc) as e:
        parse_instance(bad, "mps")
    if exc is ParseError:
        assert e.value.line is not None


def test_json_roundtrip():
    inst = load_instance(data_path("example1.json"))
    again = parse_instance(serialize_instance(inst))
    assert np.array_equal(again.lp.A, inst.lp.A)
    assert np.array_equal(again.lp.objective, inst.lp.objective)
    assert again.integer_vars == inst.integer_vars


def test_json_errors():
    with pytest.raises(ParseError):
        parse_instance("{not json")
    doc = json.loads(data_path("toy_k.json").read_text())
    doc["rows"][0]["rhs"] = "three"
    with pytest.raises(ParseError):
        parse_instance(json.dumps(doc))


def test_free_variable_unsupported():
    doc = json.loads(data_path("toy_k.json").read_text())
    doc["variables"][0]["lb"] = None
    doc["variables"][0]["ub"] = None
    with pytest.raises(UnsupportedFeature):
        standardize(parse_instance(json.dumps(doc)))


def test_standardize_shapes(toy_k, example1):
    # toy-k: one raw row plus two finite upper bounds
    assert toy_k.q == 3 and toy_k.n == 2
    assert np.all(toy_k.lp.lo == 0) and np.all(np.isinf(toy_k.lp.hi))
    assert standardize(toy_k) is toy_k
    assert example1.q == 5


def test_brute_force(toy_k, example1):
    opt = brute_force_ip(toy_k)
    assert opt.value == pytest.approx(-1.0)
    assert opt.witness.tolist() == [1.0, 0.0]
    opt = brute_force_ip(example1)
    assert opt.value == pytest.approx(-0.875)
    assert np.allclose(opt.witness, [0, 0.5, 0.75])


def test_reference_matches_brute_force(desk):
    for inst in desk:
        v = inst.reference_std("ip_value")
        assert v == pytest.approx(brute_force_ip(inst).value, abs=1e-7), inst.name


def test_enumeration_cap(desk):
    big = next(i for i in desk if i.n >= 8)
    with pytest.raises(TooLarge):
        IntegerHull(big, enum_cap=16)


@given(st.lists(st.floats(-5, 5, allow_nan=False), min_size=2, max_size=2),
       st.lists(st.floats(-3, 3, allow_nan=False), min_size=2, max_size=2), st.floats(-4, 4))
def test_transform_roundtrip(x, a, b):
    doc = json.loads(data_path("toy_k.json").read_text())
    doc["variables"][0]["lb"] = -2
    doc["variables"][1]["lb"] = None
    doc["variables"][1]["ub"] = 5
    std = standardize(parse_instance(json.dumps(doc)))
    tr = std.transform
    x = np.array(x)
    assert np.allclose(tr.point_to_raw(tr.point_from_raw(x)), x)
    a_s, b_s = tr.cut_from_raw(np.array(a), b)
    # a cut holds at a point in raw space iff it holds in standard space
    assert (np.array(a) @ x - b) == pytest.approx(a_s @ tr.point_from_raw(x) - b_s, abs=1e-9)
    a_r, b_r = tr.cut_to_raw(a_s, b_s)
    assert np.allclose(a_r, a) and math.isclose(b_r, b, abs_tol=1e-9)
