import math

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from prospect_audit.bounds import (
    BoundQuery,
    concentration_bound,
    discrepancy_tail,
    discrepancy_trials,
    evaluate,
    falsify_bound,
    harmonic_min_check,
    mc_stderr,
    random_tabular_class,
    strong_finite_bound,
    weak_finite_bound,
    weak_finite_trials,
    weak_sp_lower_bound,
    weak_sp_upper_bound,
)
from prospect_audit.exceptions import QueryError
from prospect_audit.hypotheses import LinearThreshold
from prospect_audit.synthetic import random_atoms, two_gaussian_grid

Q = BoundQuery
STRONG_CROSSOVER = 0.7530891649796748  # root of eps^2 = 2 ln(1/eps)


def test_weak_finite_value():
    # 1800 ln 16000 = 17424.59...
    assert weak_finite_bound(Q(epsilon=0.1, delta=0.05, class_size=100)) == 17425


def test_weak_finite_doubling():
    step = 1800 * math.log(2)
    for size in (1, 7, 100, 1234):
        a = weak_finite_bound(Q(epsilon=0.1, delta=0.05, class_size=size))
        b = weak_finite_bound(Q(epsilon=0.1, delta=0.05, class_size=2 * size))
        assert math.floor(step) <= b - a <= math.ceil(step)


def test_weak_finite_domain():
    with pytest.raises(QueryError):
        weak_finite_bound(Q(epsilon=0.1, delta=8 / math.e, class_size=1))
    with pytest.raises(QueryError):
        weak_finite_bound(Q(epsilon=0.1, delta=0.05))


def test_weak_sp_upper_value():
    # 12800 * 6 ln(3200 e) with mpmath: 54.4254..., ceil -> 696646
    raw = 12800 * max(mpmath.log(40), 6 * mpmath.log(3200 * mpmath.e))
    assert weak_sp_upper_bound(Q(epsilon=0.1, delta=0.05, sp_dim=3, alpha=0.5)) == int(mpmath.ceil(raw)) == 696646


def test_weak_sp_upper_degenerate_and_alpha():
    v = evaluate("weak-sp-upper", Q(epsilon=0.1, delta=0.05, sp_dim=0, alpha=0.5))
    assert v.raw == pytest.approx(12800 * math.log(40))
    base = weak_sp_upper_bound(Q(epsilon=0.1, delta=0.05, sp_dim=3, alpha=0.5))
    for a in (0.1, 0.3, 0.49, 0.51, 0.7):
        assert weak_sp_upper_bound(Q(epsilon=0.1, delta=0.05, sp_dim=3, alpha=a)) >= base
    with pytest.raises(QueryError):
        weak_sp_upper_bound(Q(epsilon=0.1, delta=0.05, sp_dim=3, alpha=1.0))


def test_weak_sp_lower():
    assert weak_sp_lower_bound(Q(epsilon=0.1, sp_dim=3.2)) == 1
    v = evaluate("weak-sp-lower", Q(epsilon=1.0, sp_dim=3.2))
    assert v.value == 0 and v.vacuous
    assert weak_sp_lower_bound(Q(epsilon=0.01, sp_dim=6.4)) == 2 * weak_sp_lower_bound(Q(epsilon=0.02, sp_dim=6.4))


def test_strong_finite():
    assert strong_finite_bound(Q(epsilon=0.1, delta=0.05, class_size=100)) == 761
    v = evaluate("strong-finite", Q(epsilon=0.99, delta=0.05, class_size=100))
    lg = math.log(2000)
    assert v.raw == pytest.approx(lg / math.log(1 / 0.99**2))
    assert lg / math.log(1 / 0.99**2) > lg / 0.99**2
    vac = evaluate("strong-finite", Q(epsilon=0.99, delta=0.99, class_size=1))
    assert vac.value == 0 and vac.vacuous
    with pytest.raises(QueryError):
        strong_finite_bound(Q(epsilon=1.0, delta=0.05, class_size=100))


def test_strong_finite_increases_past_the_crossover():
    lo = evaluate("strong-finite", Q(epsilon=0.8, delta=0.05, class_size=100)).raw
    hi = evaluate("strong-finite", Q(epsilon=0.95, delta=0.05, class_size=100)).raw
    assert hi > lo


def test_unknown_bound():
    with pytest.raises(QueryError):
        evaluate("strong-sp", Q())


@settings(max_examples=60, deadline=None)
@given(
    e1=st.floats(0.01, 0.9),
    e2=st.floats(0.01, 0.9),
    d1=st.floats(0.01, 0.9),
    d2=st.floats(0.01, 0.9),
    s1=st.integers(1, 10_000),
    s2=st.integers(1, 10_000),
)
def test_sample_size_bounds_are_monotone(e1, e2, d1, d2, s1, s2):
    (e1, e2), (d1, d2), (s1, s2) = sorted((e1, e2)), sorted((d1, d2)), sorted((s1, s2))
    for fn in (weak_finite_bound, strong_finite_bound):
        # the strong-finite max switches to its increasing term above eps ~ 0.753
        if fn is weak_finite_bound or e2 <= STRONG_CROSSOVER:
            assert fn(Q(epsilon=e1, delta=d1, class_size=s1)) >= fn(Q(epsilon=e2, delta=d1, class_size=s1))
        assert fn(Q(epsilon=e1, delta=d1, class_size=s1)) >= fn(Q(epsilon=e1, delta=d2, class_size=s1))
        assert fn(Q(epsilon=e1, delta=d1, class_size=s1)) <= fn(Q(epsilon=e1, delta=d1, class_size=s2))
    sp1, sp2 = s1 / 1000, s2 / 1000
    up = weak_sp_upper_bound
    assert up(Q(epsilon=e1, delta=d1, sp_dim=sp1, alpha=0.5)) >= up(Q(epsilon=e2, delta=d1, sp_dim=sp1, alpha=0.5))
    assert up(Q(epsilon=e1, delta=d1, sp_dim=sp1, alpha=0.5)) <= up(Q(epsilon=e1, delta=d1, sp_dim=sp2, alpha=0.5))
    lo = weak_sp_lower_bound
    assert lo(Q(epsilon=e1, sp_dim=sp1)) >= lo(Q(epsilon=e2, sp_dim=sp1))
    assert lo(Q(epsilon=e1, sp_dim=sp1)) <= lo(Q(epsilon=e1, sp_dim=sp2))


def test_bounds_are_pure():
    q = Q(epsilon=0.07, delta=0.02, class_size=33, sp_dim=2.5, alpha=0.3)
    for b in ("weak-finite", "weak-sp-upper", "weak-sp-lower", "strong-finite"):
        assert evaluate(b, q) == evaluate(b, q)


def test_discrepancy_tail_values():
    assert discrepancy_tail(100, 400, 0.1) == pytest.approx(math.exp(-1.6), rel=1e-15)
    assert discrepancy_tail(100, 400, 0.1) == pytest.approx(0.2019, abs=5e-5)
    assert discrepancy_tail(37, 91, 0.0) == 1.0
    assert discrepancy_tail(250, 250, 0.1) == pytest.approx(math.exp(-250 * 0.01), rel=1e-14)


@settings(max_examples=100, deadline=None)
@given(m0=st.integers(1, 10**6), m1=st.integers(1, 10**6), eps=st.floats(0, 1))
def test_tail_vs_min_group_and_harmonic_check(m0, m1, eps):
    assert harmonic_min_check(m0, m1)
    assert discrepancy_tail(m0, m1, eps) >= math.exp(-2 * min(m0, m1) * eps**2) * (1 - 1e-12)


def test_harmonic_examples():
    assert harmonic_min_check(1, 1000) and harmonic_min_check(17, 17)


def mp_concentration(n, m0, m1, u, t):
    mpmath.mp.dps = 60
    a = 1 - mpmath.exp(-2 * mpmath.mpf(u) ** 2 * m0 * m1 / (n * (m0 + m1)))
    b = 1 - mpmath.exp(-n * mpmath.mpf(t) ** 2)
    return a**n * b**2


@pytest.mark.parametrize(
    "args",
    [(50, 500, 500, 0.05, 0.1), (50, 500, 500, 0.5, 0.5), (10, 100, 300, 0.2, 0.3), (1, 5, 5, 0.01, 0.01), (200, 10**5, 10**5, 0.1, 0.2)],
)
def test_concentration_bound_precision(args):
    got = concentration_bound(*args)
    ref = float(mp_concentration(*args))
    assert got == pytest.approx(ref, rel=1e-12)


def test_concentration_default_grid_is_tiny():
    assert concentration_bound(50, 500, 500, 0.05, 0.1) == pytest.approx(6.5457e-82, rel=1e-4)
    assert concentration_bound(5, 10, 10, 0.0, 0.1) == 0.0


def test_mc_stderr():
    assert mc_stderr(0.5, 100) == 0.05
    assert mc_stderr(1.5, 100) == 0.0


def test_discrepancy_trials_reproducible_and_bounded():
    truth = two_gaussian_grid(points_per_axis=5)
    h = LinearThreshold([1.0, 0.0], 0.0)
    a = discrepancy_trials(truth, h, 200, 200, 0.1, 5000, 1)
    assert a == discrepancy_trials(truth, h, 200, 200, 0.1, 5000, 1)
    tail = math.exp(-2)
    assert a / 5000 <= tail + 3 * mc_stderr(tail, 5000)


def test_falsify_discrepancy_cell():
    rep = falsify_bound("discrepancy", [Q(m0=200, m1=200, epsilon=0.1)], 2000, rng=2)
    (cell,) = rep.cells
    assert cell.reference == pytest.approx(2 * math.exp(-2))
    assert not rep.flagged
    assert cell.to_row()["trials"] == 2000


def test_falsify_weak_finite_small():
    q = Q(epsilon=0.3, delta=0.2, class_size=10)
    rep = falsify_bound("weak-finite", [q], 200, rng=3)
    (cell,) = rep.cells
    assert cell.extra["m"] == weak_finite_bound(q)
    assert not rep.flagged


def test_weak_finite_trials_missing_group_counts_as_failure():
    dist = random_atoms(6, rng=1)
    hyps = random_tabular_class(dist, 4, 2)
    assert weak_finite_trials(dist, hyps, 1, 0.1, 20, 0) == 20


def test_falsify_argument_checks():
    with pytest.raises(QueryError):
        falsify_bound("strong-finite", [Q()], 10)
    with pytest.raises(QueryError):
        falsify_bound("discrepancy", [Q(m0=10, m1=10, epsilon=0.1)], 0)
    with pytest.raises(QueryError):
        falsify_bound("discrepancy", [Q(m0=10, epsilon=0.1)], 10)
