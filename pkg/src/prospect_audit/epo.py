"""Empirical Property Optimisation: exact ERM over a materialised strategic class."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .core import COMPARE_TOL, FiniteSupportDistribution, GroupedSample, as_random_source
from .exceptions import SpecError
from .hypotheses import Hypothesis, predict_matrix
from .properties import (
    _as_prop,
    blackbox_empirical_property,
    blackbox_true_sp,
    property_terms,
    sp_from_predictions,
    true_sp_from_predictions,
)
from .strategic import StrategicClass, sample_class
from .validation import check_grouped


@dataclass(frozen=True)
class TableRow:
    index: int
    id: str
    empirical_mu: float
    risk: float


@dataclass(frozen=True)
class EpoResult:
    best: str
    best_index: int
    best_risk: float
    estimate: float
    reference: float
    prospect_ids: tuple
    epsilon: float
    table: tuple = field(repr=False)

    def to_dict(self):
        return {
            "best": self.best,
            "best_index": self.best_index,
            "best_risk": self.best_risk,
            "estimate": self.estimate,
            "reference": self.reference,
            "epsilon": self.epsilon,
            "prospect_ids": list(self.prospect_ids),
            "table": [
                {"index": r.index, "id": r.id, "empirical_mu": r.empirical_mu, "risk": r.risk}
                for r in self.table
            ],
        }


def _check_epsilon(epsilon, closed_top=True):
    ok = 0 < epsilon <= 1 if closed_top else 0 < epsilon < 1
    if not ok:
        raise SpecError(f"epsilon must lie in (0, 1], got {epsilon}")
    return float(epsilon)


def audit_predictions(pred, group, labels, ids, epsilon) -> EpoResult:
    """Statistical-parity EPO on a precomputed ``(n, m)`` prediction matrix."""
    epsilon = _check_epsilon(epsilon)
    pred = np.atleast_2d(pred)
    if pred.shape[0] == 0:
        raise SpecError("the strategic class is empty")
    mu = np.atleast_1d(sp_from_predictions(pred, group))
    ref = sp_from_predictions(labels, group)
    return _assemble(ids, mu, np.abs(mu - ref), ref, epsilon)


def _assemble(ids, mu, risk, ref, epsilon):
    risk = np.asarray(risk)
    # rationally equal risks can differ in the last bit; ties go to the lowest index
    best = int(np.flatnonzero(risk <= risk.min() + COMPARE_TOL)[0])
    gap = np.abs(np.asarray(mu) - ref)
    prospect = tuple(ids[k] for k in range(len(ids)) if gap[k] <= epsilon + COMPARE_TOL)
    table = tuple(TableRow(k, ids[k], float(mu[k]), float(risk[k])) for k in range(len(ids)))
    return EpoResult(
        best=ids[best],
        best_index=best,
        best_risk=float(risk[best]),
        estimate=float(mu[best]),
        reference=float(ref),
        prospect_ids=prospect,
        epsilon=epsilon,
        table=table,
    )


def epo_audit(strategic, sample: GroupedSample, prop=None, epsilon=0.1, rng=None, hypotheses=None) -> EpoResult:
    """Run the EPO oracle on ``sample``.

    Every hypothesis of the materialised class is scored by its empirical
    audit risk; the best is the first minimiser in class order. The
    empirical prospect class holds the hypotheses whose empirical property is
    within ``epsilon`` of the black box's empirical property.

    ``hypotheses`` may pass an already materialised class, skipping
    :func:`sample_class`.
    """
    prop = _as_prop(prop)
    epsilon = _check_epsilon(epsilon)
    if hypotheses is None:
        hypotheses = sample_class(strategic, as_random_source(rng))
    if not hypotheses:
        raise SpecError("the strategic class is empty")
    ids = [h.id for h in hypotheses]
    if prop.kind == "statistical-parity":
        sample.require_both_groups()
        return audit_predictions(predict_matrix(hypotheses, sample.X), sample.group, sample.y, ids, epsilon)
    terms = [property_terms(prop, h, sample) for h in hypotheses]
    mu = np.array([t[0] for t in terms])
    risk = np.array([t[2] for t in terms])
    ref = blackbox_empirical_property(prop, sample)
    return _assemble(ids, mu, risk, ref, epsilon)


def closest_to_blackbox(true_sps, blackbox_sp) -> int:
    """Index of the class member whose true SP is closest to the black box's."""
    gaps = np.abs(np.asarray(true_sps) - blackbox_sp)
    return int(np.flatnonzero(gaps <= gaps.min() + COMPARE_TOL)[0])


def true_sps(hypotheses, truth: FiniteSupportDistribution) -> np.ndarray:
    truth.require_both_groups()
    P = predict_matrix(hypotheses, truth.X)
    return np.array([true_sp_from_predictions(p, truth) for p in P])


def true_audit_risk(best_index, sps, blackbox_sp):
    """Excess audit risk of the chosen member and the class optimum.

    ``OPT = min_f |SP(f) - SP*|``; the returned risk is
    ``|SP(best) - SP*| - OPT``, which is zero exactly when the chosen member
    matches the black box as well as any member can.
    """
    gaps = np.abs(np.asarray(sps) - blackbox_sp)
    opt = float(gaps.min())
    return float(gaps[best_index] - opt), opt


def strong_audit_check(
    result: EpoResult, truth: FiniteSupportDistribution, hypotheses, epsilon, slack=1.0, blackbox_sp=None
):
    """Count correctness and completeness violations of an empirical prospect class.

    The reference member ``f*`` minimises ``|SP(f) - SP(black box)|`` under
    ``truth``; ``blackbox_sp`` overrides the black box's SP, which otherwise
    comes from the labels in ``truth``. Correctness violations are prospect members with
    ``|SP(f) - SP(f*)| > epsilon * slack``; completeness violations are
    excluded members with ``|SP(f) - SP(f*)| <= epsilon / slack``.
    """
    if slack < 1:
        raise SpecError("slack must be at least 1")
    sps = true_sps(hypotheses, truth)
    target = blackbox_true_sp(truth) if blackbox_sp is None else float(blackbox_sp)
    star = sps[closest_to_blackbox(sps, target)]
    inside = set(result.prospect_ids)
    correctness = completeness = 0
    for h, sp in zip(hypotheses, sps):
        gap = abs(sp - star)
        if h.id in inside:
            correctness += gap > epsilon * slack + COMPARE_TOL
        else:
            completeness += gap <= epsilon / slack + COMPARE_TOL
    return int(correctness), int(completeness)


class EPOAuditor(BaseEstimator):
    """Estimator wrapper around :func:`epo_audit`.

    ``fit(X, y, groups)`` takes black-box labels ``y`` and protected-group
    tags; after fitting, ``best_`` is the prospective model, ``estimate_`` its
    empirical property and ``prospect_ids_`` the empirical prospect class.
    ``predict`` delegates to ``best_``.
    """

    def __init__(self, strategic_class=None, property="sp", epsilon=0.1, random_state=0):
        self.strategic_class = strategic_class
        self.property = property
        self.epsilon = epsilon
        self.random_state = random_state

    def fit(self, X, y, groups, y_true=None):
        X, y, groups = check_grouped(X, y, groups)
        return self.fit_sample(GroupedSample(X, groups, y, y_true))

    def fit_sample(self, sample: GroupedSample):
        if self.strategic_class is None:
            raise SpecError("EPOAuditor needs a strategic_class")
        spec = self.strategic_class
        if not isinstance(spec, StrategicClass):
            spec = StrategicClass.explicit(spec)
        prop = _as_prop(self.property)
        hyps = sample_class(spec, as_random_source(self.random_state))
        self.hypotheses_ = hyps
        self.result_ = epo_audit(spec, sample, prop, self.epsilon, hypotheses=hyps)
        self.best_ = hyps[self.result_.best_index]
        self.estimate_ = self.result_.estimate
        self.best_risk_ = self.result_.best_risk
        self.prospect_ids_ = list(self.result_.prospect_ids)
        self.n_features_in_ = sample.n_features
        return self

    def predict(self, X):
        check_is_fitted(self, "best_")
        return self.best_.predict(X)

    def prospect_models(self) -> list[Hypothesis]:
        check_is_fitted(self, "best_")
        keep = set(self.prospect_ids_)
        return [h for h in self.hypotheses_ if h.id in keep]
