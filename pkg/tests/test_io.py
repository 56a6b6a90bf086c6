import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from evcs.errors import ParseError
from evcs.experiments import ExperimentReport
from evcs.io import (dumps_json, fmt, load_config, load_fleet_csv, load_profile_csv, load_schedule_csv,
                     parse_config_text, round_floats, write_fleet_csv, write_profile_csv, write_report_csv,
                     write_schedule_csv)
from evcs.model import FleetSpec, LoadProfile


def test_fmt_cells():
    assert fmt(3) == "3" and fmt(np.int64(4)) == "4"
    assert fmt(1 / 3) == "0.333333333"
    assert fmt(True) == "true" and fmt(None) == ""
    assert fmt(float("inf")) == "inf" and fmt(float("nan")) == "nan"


def test_json_is_sorted_and_rounded():
    text = dumps_json({"b": 1 / 3, "a": [np.float64(2.0), np.int32(1)]})
    assert text.endswith("\n")
    assert list(json.loads(text)) == ["a", "b"]
    assert json.loads(text)["b"] == 0.333333333
    assert round_floats(float("inf")) == "inf"


@given(st.lists(st.floats(0, 1e6, allow_nan=False), min_size=1, max_size=40))
def test_profile_round_trip(tmp_path_factory, values):
    path = tmp_path_factory.mktemp("p") / "exo.csv"
    prof = LoadProfile.from_values(values)
    write_profile_csv(path, prof)
    back = load_profile_csv(path)
    np.testing.assert_array_equal(back.values, prof.values)


def test_fleet_and_schedule_round_trip(tmp_path):
    fleet = FleetSpec.from_tuples([(1, 10, 3), (4, 12, 2)], 3.0)
    write_fleet_csv(tmp_path / "f.csv", fleet)
    assert load_fleet_csv(tmp_path / "f.csv") == fleet
    write_schedule_csv(tmp_path / "s.csv", (3, 7))
    assert load_schedule_csv(tmp_path / "s.csv") == (3, 7)


@pytest.mark.parametrize("body,line,needle", [
    ("slot,value\n1,2\n1,3\n", 3, "duplicate slot 1"),
    ("slot,value\n1,2\n3,3\n", 3, "missing slot 2"),
    ("slot,value\n1,abc\n", 2, "not a number"),
    ("slot,value\n1,-4\n", 2, "negative"),
    ("slot,value\n1,2,3\n", 2, "expected 2 fields"),
    ("time,value\n1,2\n", 1, "expected header"),
    ("", 1, "empty file"),
    ("slot,value\n", 1, "no data rows"),
    ("slot,value\nx,2\n", 2, "not an integer"),
])
def test_profile_parse_errors(tmp_path, body, line, needle):
    path = tmp_path / "bad.csv"
    path.write_text(body)
    with pytest.raises(ParseError) as exc:
        load_profile_csv(path)
    assert exc.value.line == line
    assert needle in str(exc.value)
    assert str(exc.value).startswith(f"{path}:{line}:")


def test_fleet_parse_errors(tmp_path):
    path = tmp_path / "f.csv"
    path.write_text("id,arrival,departure,duration\n1,5,3,1\n")
    with pytest.raises(ParseError) as exc:
        load_fleet_csv(path)
    assert exc.value.line == 2
    path.write_text("ev,start\n1,2\n1,3\n")
    with pytest.raises(ParseError):
        load_schedule_csv(path)


def test_missing_file_is_parse_error(tmp_path):
    with pytest.raises(ParseError):
        load_profile_csv(tmp_path / "nope.csv")


def test_config_parsing(tmp_path):
    cfg = parse_config_text("# comment\nmax-rounds = 5\nalpha=0.5  # trailing\n\nalpha = 0.25\n")
    assert cfg == {"max_rounds": "5", "alpha": "0.25"}
    with pytest.raises(ParseError) as exc:
        parse_config_text("alpha 0.5\n", "c.cfg")
    assert exc.value.line == 1
    with pytest.raises(ParseError):
        parse_config_text("= 3\n")
    (tmp_path / "c.cfg").write_text("seed = 4\n")
    assert load_config(tmp_path / "c.cfg") == {"seed": "4"}


def test_report_csv(tmp_path):
    rep = ExperimentReport("x", "n", [1, 2], {"m": [1 / 3, 2.0]})
    write_report_csv(tmp_path / "r.csv", rep)
    assert (tmp_path / "r.csv").read_text() == "n,m\n1,0.333333333\n2,2\n"
