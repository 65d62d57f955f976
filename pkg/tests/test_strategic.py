import numpy as np
import pytest
from sklearn.linear_model import LogisticRegression

from prospect_audit.core import GroupedSample, RandomSource
from prospect_audit.exceptions import SpecError
from prospect_audit.hypotheses import DecisionStump, LinearThreshold, StumpForest, TinyMLP, constant
from prospect_audit.strategic import (
    FamilySpec,
    LogisticBlackBox,
    ParamDist,
    StrategicClass,
    sample_class,
    train_blackbox_logreg,
)


@pytest.mark.parametrize(
    "kind, cls",
    [
        ("linear-threshold", LinearThreshold),
        ("decision-stump", DecisionStump),
        ("stump-forest-majority", StumpForest),
        ("tiny-mlp", TinyMLP),
    ],
)
def test_sampled_family_kinds(kind, cls):
    hyps = sample_class(StrategicClass.sampled(FamilySpec(kind, 3), 6), RandomSource(2))
    assert len(hyps) == 6 and all(isinstance(h, cls) for h in hyps)
    assert [h.id for h in hyps] == [f"{kind}-{k}" for k in range(6)]


def test_sampled_class_is_prefix_stable():
    fam = FamilySpec("linear-threshold", 2, params={"weight": ("gaussian", 0, 2), "bias": [-3, 3]})
    small = sample_class(StrategicClass.sampled(fam, 5), 7)
    large = sample_class(StrategicClass.sampled(fam, 50), 7)
    for a, b in zip(small, large):
        assert np.array_equal(a.weights, b.weights) and a.bias == b.bias


def test_parameter_law_is_respected():
    fam = FamilySpec("decision-stump", 1, params={"threshold": [2.0, 3.0]})
    hyps = sample_class(StrategicClass.sampled(fam, 200), 0)
    thresholds = np.array([h.threshold for h in hyps])
    assert thresholds.min() >= 2.0 and thresholds.max() <= 3.0


def test_family_validation():
    with pytest.raises(SpecError):
        FamilySpec("svm", 2)
    with pytest.raises(SpecError):
        FamilySpec("stump-forest-majority", 2, forest_size=4)
    with pytest.raises(SpecError):
        ParamDist("uniform", 1.0, 0.0)
    with pytest.raises(SpecError):
        ParamDist.parse([1.0])


def test_explicit_class():
    hyps = [constant(0), constant(1)]
    assert sample_class(StrategicClass.explicit(hyps)) == hyps
    assert sample_class(hyps) == hyps
    with pytest.raises(SpecError):
        StrategicClass.explicit([])
    with pytest.raises(SpecError):
        StrategicClass.explicit([constant(0), constant(0)])
    with pytest.raises(SpecError):
        sample_class("linear-threshold")


def test_logreg_matches_sklearn():
    # both minimise mean logloss + l2/2 |w|^2 with an unpenalised intercept
    gen = np.random.default_rng(3)
    X = gen.normal(size=(300, 3))
    y = (X @ [1.0, -2.0, 0.5] + 0.3 + gen.normal(size=300) > 0).astype(int)
    l2 = 0.05
    ours = LogisticBlackBox(l2=l2, steps=4000, lr=0.5).fit(X, y)
    ref = LogisticRegression(C=1.0 / (l2 * len(y)), tol=1e-10, max_iter=10_000).fit(X, y)
    assert np.allclose(ours.coef_, ref.coef_[0], atol=1e-4)
    assert abs(ours.intercept_ - ref.intercept_[0]) < 1e-4


def test_blackbox_hypothesis_agrees_with_estimator():
    gen = np.random.default_rng(4)
    X = gen.normal(size=(100, 2))
    y = (X[:, 0] > 0).astype(np.int8)
    s = GroupedSample(X, (X[:, 1] > 0).astype(np.int8), y)
    h = train_blackbox_logreg(s, l2=0.01)
    model = LogisticBlackBox(l2=0.01).fit(X, y)
    assert np.array_equal(h.predict(X), model.predict(X))
    assert (h.predict(X) == y).mean() > 0.9


def test_zero_mlp_predicts_the_bias_side_constant():
    fam = FamilySpec("tiny-mlp", 2, mlp_widths=(3,), params={"weight": [0, 0], "bias": [0, 0]})
    hyps = sample_class(StrategicClass.sampled(fam, 4), 1)
    X = np.random.default_rng(0).normal(size=(20, 2))
    # every pre-activation is 0, so the output is 0 and 1[0 >= 0] = 1
    assert all(h.predict(X).tolist() == [1] * 20 for h in hyps)


def test_logreg_separable_two_points():
    s = GroupedSample([[-1.0], [1.0]], [0, 1], [0, 1])
    h = train_blackbox_logreg(s, l2=0.0, steps=500)
    assert h.predict(s.X).tolist() == [0, 1]


def test_logreg_constant_labels():
    s = GroupedSample([[-1.0], [0.5], [2.0]], [0, 1, 0], [0, 0, 0])
    assert train_blackbox_logreg(s).predict(s.X).tolist() == [0, 0, 0]


def test_logreg_heavy_ridge():
    gen = np.random.default_rng(2)
    X = gen.normal(size=(50, 2))
    y = np.array([1] * 35 + [0] * 15)
    model = LogisticBlackBox(l2=1e6, steps=500).fit(X, y)
    assert np.abs(model.coef_).max() < 1e-3
    assert model.predict(X).tolist() == [1] * 50


def test_explicit_and_sampled_classes_audit_alike():
    from prospect_audit.epo import epo_audit

    gen = np.random.default_rng(5)
    s = GroupedSample(gen.normal(size=(80, 2)), gen.integers(0, 2, 80), gen.integers(0, 2, 80))
    spec = StrategicClass.sampled(FamilySpec("decision-stump", 2), 25)
    a = epo_audit(spec, s, rng=9)
    b = epo_audit(StrategicClass.explicit(sample_class(spec, 9)), s)
    assert a.to_dict() == b.to_dict()


def test_ids_and_streams():
    fam = FamilySpec("linear-threshold", 2)
    a = sample_class(StrategicClass.sampled(fam, 3), RandomSource(1))
    direct = [fam.draw(RandomSource(1).child(k).generator(), f"linear-threshold-{k}") for k in range(3)]
    assert all(np.array_equal(x.weights, y.weights) for x, y in zip(a, direct))
