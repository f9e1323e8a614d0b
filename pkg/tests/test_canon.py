"""Canonical JSON: the byte-level contract the CLI and server both rely on."""

import json
from pathlib import Path

import numpy as np
import pytest

from smolt.canon import canonical_json, canonical_json_bytes, to_jsonable
from smolt.errors import ValidationError


class TestByteContract:
    def test_sorted_compact_newline(self):
        s = canonical_json({"b": 1, "a": [1, 2]})
        assert s == '{"a":[1,2],"b":1}\n'

    def test_key_order_never_matters(self):
        d1 = {"x": 1, "y": {"b": 2, "a": 3}}
        d2 = {"y": {"a": 3, "b": 2}, "x": 1}
        assert canonical_json_bytes(d1) == canonical_json_bytes(d2)

    def test_floats_round_trip_shortest(self):
        s = canonical_json({"v": 0.1, "w": 1e308, "z": -0.0})
        assert json.loads(s) == {"v": 0.1, "w": 1e308, "z": -0.0}
        assert '"v":0.1,' in s

    def test_unicode_stays_raw(self):
        assert canonical_json({"river": "Tornionjoki ä"}) == \
            '{"river":"Tornionjoki ä"}\n'


class TestConversions:
    def test_numpy_types_become_plain(self):
        out = to_jsonable({
            "arr": np.arange(3, dtype=np.int64),
            "mat": np.eye(2),
            "f": np.float64(2.5),
            "i": np.int32(7),
            "t": (1, 2),
        })
        assert out == {"arr": [0, 1, 2], "mat": [[1.0, 0.0], [0.0, 1.0]],
                       "f": 2.5, "i": 7, "t": [1, 2]}
        assert isinstance(out["i"], int)

    def test_nonstring_keys_stringified(self):
        assert to_jsonable({1: "a", 0.5: "b"}) == {"1": "a", "0.5": "b"}

    def test_bool_and_none_survive(self):
        assert to_jsonable({"a": True, "b": None}) == {"a": True, "b": None}


class TestRejections:
    @pytest.mark.parametrize("bad", [float("nan"), float("inf"),
                                     float("-inf"), np.float64("nan")])
    def test_non_finite_floats_rejected(self, bad):
        with pytest.raises(ValidationError):
            canonical_json({"v": bad})

    def test_non_finite_inside_arrays_rejected(self):
        with pytest.raises(ValidationError):
            canonical_json({"v": np.array([1.0, np.inf])})

    def test_unsupported_types_rejected(self):
        with pytest.raises(ValidationError):
            canonical_json({"p": Path("/tmp")})
        with pytest.raises(ValidationError):
            canonical_json({"s": {1, 2}})
