import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from prospect_audit.core import (
    FiniteSupportDistribution,
    GroupedSample,
    LabeledPoint,
    RandomSource,
    as_random_source,
    draw_grouped_sample,
    draw_sample,
)
from prospect_audit.exceptions import DataError, DistributionError, GroupError
from prospect_audit.hypotheses import DecisionStump, LinearThreshold, constant, evaluate


def two_atoms():
    return FiniteSupportDistribution([[0.0], [1.0]], [0, 1], [0, 1], [0.5, 0.5])


def test_single_atom_sample_copies_the_atom():
    dist = FiniteSupportDistribution.from_atoms([(LabeledPoint((3.0, -1.0), 1, 1), 1.0)])
    s = draw_sample(dist, 5, RandomSource(9))
    assert len(s) == 5
    assert np.all(s.X == [3.0, -1.0]) and np.all(s.group == 1) and np.all(s.y == 1)


def test_two_atom_group_fraction_near_half():
    # Hoeffding: P(|freq - 1/2| > 0.05) <= 2 exp(-2 * 1e4 * 0.05^2) ~ 4e-22
    s = draw_sample(two_atoms(), 10_000, RandomSource(1))
    assert abs(s.m0 / len(s) - 0.5) <= 0.05


def test_zero_mass_group_is_allowed_when_sampling():
    dist = FiniteSupportDistribution([[0.0], [1.0]], [0, 1], [0, 0], [1.0, 0.0])
    s = draw_sample(dist, 10, 0)
    assert s.m1 == 0 and s.m0 == 10
    with pytest.raises(GroupError):
        s.require_both_groups()


def test_invalid_distributions_are_rejected():
    with pytest.raises(DistributionError):
        FiniteSupportDistribution([[0.0], [1.0]], [0, 1], [0, 1], [0.5, 0.5 + 1e-9])
    with pytest.raises(DistributionError):
        FiniteSupportDistribution([[0.0], [1.0]], [0, 1], [0, 1], [1.5, -0.5])
    with pytest.raises(DistributionError):
        FiniteSupportDistribution([[np.nan]], [0], [0], [1.0])
    with pytest.raises(DistributionError):
        draw_sample(two_atoms(), 0)
    with pytest.raises(DistributionError):
        draw_sample("not a distribution", 3)


def test_probability_tolerance_is_1e_12():
    FiniteSupportDistribution([[0.0], [1.0]], [0, 1], [0, 1], [0.5, 0.5 + 5e-13])


def test_evaluate_examples():
    assert evaluate(constant(1, 2), [123.0, -4.0]) == 1
    assert evaluate(LinearThreshold([1.0, 0.0], 0.0), [2.0, -5.0]) == 1
    assert evaluate(DecisionStump(1, 0.5, ">="), [9.0, 0.4]) == 0


@settings(max_examples=25, deadline=None)
@given(
    w=st.lists(st.floats(-5, 5), min_size=3, max_size=3),
    b=st.floats(-5, 5),
    x=st.lists(st.floats(-10, 10), min_size=3, max_size=3),
)
def test_evaluation_is_deterministic(w, b, x):
    h = LinearThreshold(w, b)
    first = evaluate(h, x)
    assert all(evaluate(h, x) == first for _ in range(1000))


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**64 - 1), stream=st.integers(0, 2**64 - 1))
def test_sampling_is_reproducible(seed, stream):
    dist = two_atoms()
    a = draw_sample(dist, 50, RandomSource(seed, stream))
    b = draw_sample(dist, 50, RandomSource(seed, stream))
    assert np.array_equal(a.X, b.X) and np.array_equal(a.y, b.y)


def test_streams_do_not_depend_on_evaluation_order():
    src = RandomSource(5)
    forward = [src.child(k).generator().random(4) for k in range(6)]
    backward = [src.child(k).generator().random(4) for k in reversed(range(6))][::-1]
    assert all(np.array_equal(a, b) for a, b in zip(forward, backward))
    assert not np.array_equal(forward[0], forward[1])


@settings(max_examples=30, deadline=None)
@given(groups=st.lists(st.integers(0, 1), min_size=0, max_size=40))
def test_group_partition(groups):
    X = np.arange(len(groups), dtype=float).reshape(-1, 1)
    s = GroupedSample(X, groups, [0] * len(groups))
    s0, s1 = s.group_part(0), s.group_part(1)
    assert s.m0 + s.m1 == len(s)
    assert sorted(s0.X[:, 0].tolist() + s1.X[:, 0].tolist()) == X[:, 0].tolist()
    assert not set(s0.X[:, 0]) & set(s1.X[:, 0])


def test_grouped_draw_sizes_and_order():
    dist = FiniteSupportDistribution([[0.0], [1.0], [2.0]], [0, 1, 1], [0, 1, 0], [0.5, 0.25, 0.25])
    s = draw_grouped_sample(dist, 7, 3, 11)
    assert (s.m0, s.m1) == (7, 3)
    assert list(s.group) == [0] * 7 + [1] * 3


def test_samples_are_read_only():
    s = GroupedSample([[0.0], [1.0]], [0, 1], [1, 0])
    with pytest.raises(ValueError):
        s.X[0, 0] = 5.0


def test_sample_validation():
    with pytest.raises(DataError):
        GroupedSample([[0.0], [1.0]], [0, 2], [1, 0])
    with pytest.raises(DataError):
        GroupedSample([[0.0], [1.0]], [0, 1], [1])
    with pytest.raises(DataError):
        GroupedSample([[math.inf]], [0], [1])


def test_random_source_coercion():
    assert as_random_source(None) == RandomSource(0)
    assert as_random_source(4) == RandomSource(4)
    assert RandomSource(1, 3).stream == (3,)
    with pytest.raises(TypeError):
        as_random_source("seed")
    with pytest.raises(ValueError):
        RandomSource(-1)


def test_from_points_round_trip():
    pts = [LabeledPoint((1.0, 2.0), 0, 1), LabeledPoint((3.0, 4.0), 1, 0)]
    s = GroupedSample.from_points(pts)
    assert s.points() == pts
    assert len(GroupedSample.from_points([], n_features=2)) == 0
