import json
import math
import pickle

import numpy as np
import pytest
from hypothesis import given, strategies as st

from boseldp.extended import (UNDEFINED, dumps, format_number, from_json_value,
                              is_undefined, parse_number, to_json_value)


def test_undefined_is_singleton_and_falsy():
    assert pickle.loads(pickle.dumps(UNDEFINED)) is UNDEFINED
    assert not UNDEFINED
    assert is_undefined(UNDEFINED) and not is_undefined(math.nan)
    assert repr(UNDEFINED) == "UNDEFINED"


@pytest.mark.parametrize("x,text", [(math.inf, "inf"), (-math.inf, "-inf"), (math.nan, "nan"),
                                    (UNDEFINED, "undefined"), (3, "3"), (True, "true"),
                                    (0.1, "0.10000000000000001")])
def test_format_number(x, text):
    assert format_number(x) == text


@given(st.floats(allow_nan=False))
def test_text_round_trip_exact(x):
    assert parse_number(format_number(x)) == x


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_json_round_trip_exact(x):
    back = from_json_value(json.loads(dumps({"v": x, "w": [x]})))
    assert back["v"] == x and back["w"][0] == x


def test_json_tags_extended_values():
    obj = {"a": math.inf, "b": -math.inf, "c": UNDEFINED, "d": np.array([1.0, math.nan])}
    text = dumps(obj)
    raw = json.loads(text)   # strict JSON, no bare Infinity
    assert raw["a"] == {"extended": "+inf"}
    assert raw["c"] == {"extended": "undefined"}
    back = from_json_value(raw)
    assert back["a"] == math.inf and back["b"] == -math.inf and back["c"] is UNDEFINED
    assert math.isnan(back["d"][1])
    assert "Infinity" not in text and "NaN" not in text


def test_json_floats_use_seventeen_digits():
    assert dumps(0.1, indent=None) == "0.10000000000000001"
    assert dumps(2.0, indent=None) == "2.0"
    assert to_json_value((1, 2.5)) == [1, 2.5]
