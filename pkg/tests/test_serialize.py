import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mtlab.discrete import DiscreteFunction, DiscreteMMS, random_mms
from mtlab.radial import ProfileTable, profile_table, trumpet_space
from mtlab.rearrange import RadialFunction
from mtlab.serialize import (SerializationError, dumps, function_from_dict, function_to_dict,
                             graph_from_dict, graph_to_dict, loads, profile_from_dict,
                             profile_to_dict, space_from_dict, space_to_dict)


def roundtrip(doc):
    return loads(dumps(doc))


def test_space_roundtrip_exact():
    s = trumpet_space(2, 0.5)
    back = space_from_dict(roundtrip(space_to_dict(s)))
    assert back.n == s.n
    assert np.array_equal(back.grid, s.grid) and np.array_equal(back.warp, s.warp)


def test_profile_roundtrip_with_infinite_total():
    table = profile_table(trumpet_space(2, 0.5), count=50)
    doc = roundtrip(profile_to_dict(table))
    assert doc["totalVolume"] is None
    back = profile_from_dict(doc)
    assert back.total_volume == math.inf
    assert np.array_equal(back.volumes, table.volumes)
    assert np.array_equal(back.perimeters, table.perimeters)


@given(seed=st.integers(0, 10**6), size=st.integers(2, 9))
@settings(max_examples=30, deadline=None)
def test_graph_and_function_roundtrip(seed, size):
    rng = np.random.default_rng(seed)
    g = random_mms(rng, size)
    back = graph_from_dict(roundtrip(graph_to_dict(g)))
    assert np.array_equal(back.measures, g.measures) and np.array_equal(back.edges, g.edges)
    f = DiscreteFunction(g, rng.standard_normal(size))
    fb = function_from_dict(roundtrip(function_to_dict(f)))
    assert np.array_equal(fb.values, f.values)


def test_radial_function_roundtrip():
    u = RadialFunction(trumpet_space(2, 0.5), np.array([0.0, 0.3, 1.1]), np.array([2.0, 1 / 3, 0.0]))
    back = function_from_dict(roundtrip(function_to_dict(u)))
    assert isinstance(back, RadialFunction)
    assert np.array_equal(back.radii, u.radii) and np.array_equal(back.values, u.values)


def test_full_precision_and_non_finite():
    assert json.loads(dumps({"x": 0.1 + 0.2}))["x"] == 0.1 + 0.2
    for bad in (math.nan, math.inf, -math.inf):
        with pytest.raises(SerializationError):
            dumps({"x": [1.0, bad]})


K2 = DiscreteMMS(np.ones(2), np.array([(0, 1, 1.0, 1.0)]))


def test_graph_rejections():
    doc = graph_to_dict(K2)
    doc["vertices"][1]["mu"] = -1.0
    with pytest.raises(SerializationError, match=r"vertices\[1\]\.mu"):
        graph_from_dict(doc)
    doc = graph_to_dict(K2)
    doc["edges"][0]["b"] = 7
    with pytest.raises(SerializationError, match="unknown vertex"):
        graph_from_dict(doc)
    doc = graph_to_dict(K2)
    doc["vertices"][1]["id"] = 0
    with pytest.raises(SerializationError, match="duplicate"):
        graph_from_dict(doc)
    doc = graph_to_dict(K2)
    del doc["edges"][0]["w"]
    with pytest.raises(SerializationError, match="missing field 'w'"):
        graph_from_dict(doc)


def test_profile_rejections():
    doc = profile_to_dict(ProfileTable(np.array([1.0, 2.0]), np.array([1.0, 1.0]), 4.0))
    doc["points"].reverse()
    with pytest.raises(SerializationError):
        profile_from_dict(doc)
    doc["points"][0]["phi"] = "x"
    with pytest.raises(SerializationError, match="finite number"):
        profile_from_dict(doc)


def test_space_rejections():
    doc = space_to_dict(trumpet_space(2, 0.5))
    doc["n"] = 2.5
    with pytest.raises(SerializationError):
        space_from_dict(doc)
    doc = space_to_dict(trumpet_space(2, 0.5))
    doc["warp"][3] = -1.0
    with pytest.raises(SerializationError):
        space_from_dict(doc)


def test_broken_json_reports_position():
    with pytest.raises(SerializationError, match=r"line 2, column \d+"):
        loads('{"a": 1,\n  oops}')
