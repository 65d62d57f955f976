import math
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from prospect_audit.dims import (
    FiniteConceptClass,
    FiniteDomain,
    extend_with_point,
    format_concept_class,
    group_traces,
    group_vc_dimensions,
    is_product_extensible,
    is_sp_shattered,
    load_concept_class,
    max_vc_witnesses,
    parse_concept_class,
    powerset_class,
    product_class,
    random_class,
    restrict_to_group,
    sauer_count,
    sauer_exp_bound,
    sp_dimension,
    sp_growth,
    sp_growth_sauer,
    sp_growth_table,
    sp_shatter_check,
    sp_shatter_target,
    vc_dimension,
)
from prospect_audit.exceptions import DomainError, ParseError, SizeError

DATA = Path(__file__).parent / "data"
DOM_21 = FiniteDomain(("a", "b", "c"), (0, 0, 1))


def as_sets(cls):
    return [frozenset(cls.domain.members(c)) for c in cls.concepts]


def groups_of(cls):
    return dict(zip(cls.domain.ids, cls.domain.groups))


def test_trivial_classes():
    empty = FiniteConceptClass(DOM_21, (0,))
    assert group_traces(empty, {"a", "b"}, {"c"}).pairs == ((0, 0),)
    assert sp_dimension(empty).value == 0.0
    assert vc_dimension(empty) == 0
    full = powerset_class(DOM_21)
    assert group_traces(full, {"a", "b"}, {"c"}).count == 8
    assert sp_dimension(full).value == 3.0 and vc_dimension(full) == 3


def test_shatter_targets():
    assert sp_shatter_target(2, 1) == 5
    assert sp_shatter_target(1, 1) == 2


def test_two_point_class_is_sp_shattered():
    dom = FiniteDomain(("x", "y"), (0, 1))
    cls = FiniteConceptClass.from_sets(dom, [set(), {"x", "y"}])
    assert group_traces(cls, {"x"}, {"y"}).count == 2
    assert is_sp_shattered(cls, {"x"}, {"y"})


def test_full_powerset_is_not_sp_shattered():
    check = sp_shatter_check(powerset_class(DOM_21), {"a", "b"}, {"c"})
    assert (check.shattered, check.count, check.target, check.reason) == (False, 8, 5, "count-mismatch")


def test_handcrafted_linear_class():
    cls = load_concept_class(DATA / "linear_2_1.txt")
    assert group_traces(cls, {"a", "b"}, {"c"}).count == 5
    assert is_sp_shattered(cls, {"a", "b"}, {"c"})
    dim = sp_dimension(cls)
    assert dim.value == math.log2(5) and dim.count == 5
    assert dim.witness == cls.domain.full


def test_degenerate_groups_give_reason_code():
    cls = powerset_class(DOM_21)
    assert sp_shatter_check(cls, {"a", "b"}, set()).reason == "empty-group"
    with pytest.raises(DomainError):
        sp_shatter_check(cls, set(), set())
    with pytest.raises(DomainError):
        group_traces(cls, {"c"}, set())


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000), n=st.integers(2, 7), k=st.integers(1, 25))
def test_traces_and_dimensions_match_oracle(seed, n, k):
    cls = random_class(n, k, seed)
    sets = as_sets(cls)
    groups = groups_of(cls)
    ids = cls.domain.ids
    s0 = [p for p in ids if groups[p] == 0]
    s1 = [p for p in ids if groups[p] == 1]
    assert group_traces(cls, s0, s1).count == len(oracles.group_trace_pairs(sets, s0, s1))
    assert vc_dimension(cls) == oracles.vc_dimension(ids, sets)
    assert sp_dimension(cls).value == pytest.approx(oracles.sp_dimension(ids, groups, sets), abs=1e-12)


def test_random_class_on_six_points_matches_oracle():
    cls = random_class(6, 20, 4)
    sets = as_sets(cls)
    groups = groups_of(cls)
    for S in oracles.subsets(cls.domain.ids):
        S0 = [p for p in S if groups[p] == 0]
        S1 = [p for p in S if groups[p] == 1]
        assert group_traces(cls, S0, S1).count == len(oracles.group_trace_pairs(sets, S0, S1))


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000), n=st.integers(2, 7), k=st.integers(1, 12), extra=st.integers(1, 6))
def test_adding_concepts_is_monotone(seed, n, k, extra):
    cls = random_class(n, k, seed)
    more = cls.with_concepts(random_class(n, extra, seed + 1).concepts)
    assert sp_dimension(more).value >= sp_dimension(cls).value
    assert vc_dimension(more) >= vc_dimension(cls)
    for (a, b, g), (_, _, h) in zip(sp_growth_table(cls), sp_growth_table(more)):
        assert h >= g


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000), n=st.integers(2, 7), k=st.integers(1, 20))
def test_growth_below_sauer_product(seed, n, k):
    cls = random_class(n, k, seed)
    v0, v1 = group_vc_dimensions(cls)
    for m0, m1, g in sp_growth_table(cls):
        assert g <= sp_growth_sauer(m0, m1, v0, v1)
        assert g <= sp_growth_sauer(m0, m1, v0, v1, exp_form=True) + 1e-9


def test_growth_trivial_cases():
    full = powerset_class(DOM_21)
    assert sp_growth(full, 0, 0) == 1
    assert sp_growth(full, 2, 1) == 8 and sp_growth(full, 1, 1) == 4
    with pytest.raises(DomainError):
        sp_growth(full, 3, 0)
    with pytest.raises(SizeError):
        sp_growth(full, 1, 1, budget=1)


def test_sauer_helpers():
    assert sauer_count(5, 2) == 1 + 5 + 10
    assert sauer_count(3, 5) == 8
    assert sauer_exp_bound(10, 2) == pytest.approx((math.e * 5) ** 2)
    assert sauer_exp_bound(2, 3) == 4.0 and sauer_exp_bound(7, 0) == 1.0


def test_cap_and_random_mode():
    dom = FiniteDomain(tuple(f"p{k}" for k in range(17)), tuple(k % 2 for k in range(17)))
    cls = FiniteConceptClass(dom, (0, 1, 2, 3))
    with pytest.raises(SizeError):
        sp_dimension(cls)
    with pytest.raises(SizeError):
        vc_dimension(cls)
    low = sp_dimension(cls, mode="random", samples=64, rng=1)
    assert not low.exact and low.value == 2.0


def test_product_extensible_witnesses_span_groups():
    dom = FiniteDomain(("a", "b", "c", "d"), (0, 0, 1, 1))
    cls = product_class(dom, [set(), {"a"}], [set(), {"c"}, {"c", "d"}])
    assert is_product_extensible(cls)
    d = vc_dimension(cls)
    for w in max_vc_witnesses(cls):
        assert w & dom.group_mask(0) and w & dom.group_mask(1), d


def test_non_product_classes_are_detected():
    dom = FiniteDomain(("a", "b", "c"), (0, 0, 1))
    assert not is_product_extensible(FiniteConceptClass.from_sets(dom, [set(), {"a", "c"}]))
    # product, but the group-1 factor has VC dimension 0
    assert not is_product_extensible(product_class(dom, [set(), {"a"}], [set()]))


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000), n=st.integers(2, 6), k=st.integers(1, 16), g=st.integers(0, 1))
def test_extension_adds_one_to_vc(seed, n, k, g):
    cls = random_class(n, k, seed)
    d = vc_dimension(cls)
    assert vc_dimension(extend_with_point(cls, g)) == d + 1
    for w in max_vc_witnesses(cls):
        if not (w & cls.domain.group_mask(0) and w & cls.domain.group_mask(1)):
            assert d < vc_dimension(extend_with_point(cls, 1 - g))


def test_restrict_to_group():
    cls = powerset_class(DOM_21)
    r0 = restrict_to_group(cls, 0)
    assert r0.domain.ids == ("a", "b") and len(r0) == 4


def test_text_format_round_trip():
    cls = random_class(5, 8, 2)
    back = parse_concept_class(format_concept_class(cls))
    assert back.domain == cls.domain and back.concepts == cls.concepts


def test_parse_errors_carry_rows():
    with pytest.raises(ParseError) as err:
        parse_concept_class("domain: a:0 b:1\na\nzz\n")
    assert err.value.row == 3
    with pytest.raises(ParseError):
        parse_concept_class("a b\n")
    with pytest.raises(ParseError):
        parse_concept_class("domain: a:2\n-\n")
    with pytest.raises(ParseError):
        parse_concept_class("domain: a:0\n")
