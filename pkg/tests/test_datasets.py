import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from prospect_audit.core import GroupedSample
from prospect_audit.datasets import (
    DatasetSchema,
    load_dataset,
    load_distribution,
    parse_rows,
    save_dataset,
    save_distribution,
)
from prospect_audit.exceptions import IOFailure, ParseError
from prospect_audit.synthetic import lowerbound_adversarial

FIXTURE = "age,score,group,label\n30,0.5,0,1\n41,1.5,0,0\n25,-2,1,1\n60,3.25,1,0\n"


def test_four_row_fixture():
    s = parse_rows(FIXTURE.splitlines(), DatasetSchema())
    assert (s.m0, s.m1) == (2, 2)
    assert s.X.tolist() == [[30, 0.5], [41, 1.5], [25, -2], [60, 3.25]]
    assert s.y.tolist() == [1, 0, 1, 0]


def test_feature_selection_and_true_labels():
    text = "a,b,g,yb,yt\n1,2,0,1,0\n3,4,1,0,0\n"
    s = parse_rows(text.splitlines(), DatasetSchema("g", "yb", ("b",), "yt"))
    assert s.X.tolist() == [[2.0], [4.0]] and s.y_true.tolist() == [0, 0]


def test_bad_group_coordinates():
    bad = FIXTURE.replace("25,-2,1,1", "25,-2,2,1")
    with pytest.raises(ParseError) as err:
        parse_rows(bad.splitlines(), DatasetSchema())
    assert (err.value.row, err.value.column) == (4, "group")


def test_malformed_number_and_missing_column():
    with pytest.raises(ParseError) as err:
        parse_rows("x,group,label\n1,0,1\nabc,1,0\n".splitlines(), DatasetSchema())
    assert (err.value.row, err.value.column) == (3, "x")
    with pytest.raises(ParseError) as err:
        parse_rows("x,label\n1,1\n".splitlines(), DatasetSchema())
    assert err.value.column == "group"
    with pytest.raises(ParseError):
        parse_rows("x,group,label\n1,0\n".splitlines(), DatasetSchema())
    with pytest.raises(ParseError):
        parse_rows([], DatasetSchema())


def test_header_only_is_empty_sample():
    s = parse_rows(["x,group,label"], DatasetSchema())
    assert len(s) == 0 and s.n_features == 1


def test_missing_file(tmp_path):
    with pytest.raises(IOFailure):
        load_dataset(tmp_path / "nope.csv")


@settings(max_examples=25, deadline=None)
@given(
    rows=st.lists(
        st.tuples(st.floats(-1e6, 1e6, allow_nan=False), st.floats(-1, 1), st.integers(0, 1), st.integers(0, 1)),
        min_size=0,
        max_size=20,
    )
)
def test_round_trip(tmp_path_factory, rows):
    path = tmp_path_factory.mktemp("rt") / "s.csv"
    X = np.array([[a, b] for a, b, _, _ in rows], dtype=float).reshape(len(rows), 2)
    s = GroupedSample(X, [g for _, _, g, _ in rows], [y for *_, y in rows])
    save_dataset(s, path)
    back = load_dataset(path)
    assert np.array_equal(back.X, s.X) and np.array_equal(back.group, s.group) and np.array_equal(back.y, s.y)


def test_distribution_round_trip(tmp_path):
    dist = lowerbound_adversarial()
    back = load_distribution(save_distribution(dist, tmp_path / "sub" / "d.csv"))
    assert np.array_equal(back.probs, dist.probs) and back.names == dist.names
