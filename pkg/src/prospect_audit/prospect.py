"""Prospect ratio: the fraction of a sampled strategic class that matches the black box."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .bounds import concentration_bound, mc_stderr
from .core import COMPARE_TOL, FiniteSupportDistribution, GroupedSample, as_random_source, draw_grouped_sample
from .epo import closest_to_blackbox, true_sps
from .exceptions import SpecError
from .hypotheses import predict_matrix
from .properties import blackbox_empirical_sp, blackbox_true_sp, sp_from_predictions
from .strategic import StrategicClass, sample_class
from .validation import check_grouped

CENTERS = ("blackbox", "oracle")


@dataclass(frozen=True)
class RatioEstimate:
    n: int
    m0: int
    m1: int
    epsilon: float
    r_hat: float
    indicators: np.ndarray = field(repr=False)
    center: float = 0.0
    ids: tuple = field(default=(), repr=False)

    @property
    def count(self) -> int:
        return int(self.indicators.sum())


def _indicators(sps, center, epsilon):
    return (np.abs(np.asarray(sps) - center) <= epsilon + COMPARE_TOL).astype(np.int8)


def _estimate(sps, center, epsilon, m0, m1, ids):
    ind = _indicators(sps, center, epsilon)
    n = len(ind)
    return RatioEstimate(n, m0, m1, float(epsilon), int(ind.sum()) / n, ind, float(center), tuple(ids))


def _check_eps(epsilon):
    if epsilon < 0:
        raise SpecError("epsilon must be non-negative")


def estimate_ratio(hypotheses, s: GroupedSample, epsilon, center=None) -> RatioEstimate:
    """Empirical prospect ratio of ``hypotheses`` on ``s``.

    Indicator ``k`` is ``1[|SP_S(f_k) - c| <= epsilon]``. The centre ``c``
    defaults to the black box's empirical SP on ``s``; pass a number to use a
    known reference value instead.
    """
    if not hypotheses:
        raise SpecError("need at least one hypothesis")
    _check_eps(epsilon)
    s.require_both_groups()
    sps = np.atleast_1d(sp_from_predictions(predict_matrix(hypotheses, s.X), s.group))
    c = blackbox_empirical_sp(s) if center is None else float(center)
    return _estimate(sps, c, epsilon, s.m0, s.m1, [h.id for h in hypotheses])


def estimate_ratio_split(hypotheses, s: GroupedSample, epsilon, center=None) -> RatioEstimate:
    """Like :func:`estimate_ratio`, but hypothesis ``k`` only sees the ``k``-th block.

    Each group is cut, in row order, into ``n`` equal blocks of
    ``m_g // n`` rows (leftover rows are dropped), so the indicators are
    computed on disjoint data. The default centre still uses the whole
    sample.
    """
    if not hypotheses:
        raise SpecError("need at least one hypothesis")
    _check_eps(epsilon)
    s.require_both_groups()
    n = len(hypotheses)
    rows = [np.flatnonzero(s.group == g) for g in (0, 1)]
    size = [len(r) // n for r in rows]
    if min(size) == 0:
        raise SpecError(f"split mode needs at least n={n} rows per group")
    sps = []
    for k, h in enumerate(hypotheses):
        idx = np.concatenate([r[k * b : (k + 1) * b] for r, b in zip(rows, size)])
        sps.append(sp_from_predictions(h.predict(s.X[idx]), s.group[idx]))
    c = blackbox_empirical_sp(s) if center is None else float(center)
    return _estimate(sps, c, epsilon, size[0], size[1], [h.id for h in hypotheses])


def _true_ratio_from_sps(sps, blackbox_sp, epsilon):
    star = sps[closest_to_blackbox(sps, blackbox_sp)]
    return float(np.count_nonzero(np.abs(sps - star) <= epsilon + COMPARE_TOL)) / len(sps)


def true_ratio(hypotheses, truth: FiniteSupportDistribution, blackbox_sp=None, epsilon=0.1) -> float:
    """Fraction of ``hypotheses`` whose true SP is within ``epsilon`` of ``SP(f*)``.

    ``f*`` is the first member closest in true SP to ``blackbox_sp``
    (default: the SP of the labels in ``truth``). Negative ``epsilon`` gives 0.
    """
    if not hypotheses:
        raise SpecError("need at least one hypothesis")
    sps = true_sps(hypotheses, truth)
    target = blackbox_true_sp(truth) if blackbox_sp is None else float(blackbox_sp)
    return _true_ratio_from_sps(sps, target, epsilon)


@dataclass(frozen=True)
class ConcentrationTrial:
    n: int
    m0: int
    m1: int
    epsilon: float
    upsilon: float
    tau: float
    trials: int
    covered: int
    coverage: float
    bound: float
    stderr: float
    split_per_hypothesis: bool = False
    center: str = "blackbox"
    rows: tuple = field(default=(), repr=False)

    @property
    def passes(self) -> bool:
        return self.coverage >= self.bound - 3 * self.stderr

    def to_dict(self):
        return {
            k: getattr(self, k)
            for k in (
                "n", "m0", "m1", "epsilon", "upsilon", "tau", "trials", "covered",
                "coverage", "bound", "stderr", "split_per_hypothesis", "center",
            )
        } | {"passes": self.passes}


CSV_FIELDS = ("trial", "r_hat", "lower", "upper", "in_interval")


def run_concentration_experiment(
    n,
    m0,
    m1,
    epsilon,
    upsilon,
    tau,
    trials,
    truth: FiniteSupportDistribution,
    class_spec: StrategicClass,
    rng=None,
    split_per_hypothesis=False,
    center="blackbox",
) -> ConcentrationTrial:
    """Monte Carlo coverage of ``[r(eps - u) - tau, r(eps + u) + tau]`` by ``r_hat``.

    Trial ``t`` draws a fresh class of ``n`` hypotheses from stream
    ``(t, 0)`` and a grouped sample from stream ``(t, 1)``. ``r(.)`` is the
    true ratio of that class. ``center="blackbox"`` anchors the empirical
    indicator at the black box's empirical SP; ``"oracle"`` uses the exact
    ``SP(f*)``.
    """
    if int(trials) < 100:
        raise SpecError("a concentration experiment needs at least 100 trials")
    if center not in CENTERS:
        raise SpecError(f"center must be one of {CENTERS}")
    if not isinstance(class_spec, StrategicClass):
        class_spec = StrategicClass.explicit(class_spec)
    if len(class_spec) != n:
        raise SpecError(f"class has {len(class_spec)} hypotheses but n={n}")
    truth.require_both_groups()
    src = as_random_source(rng)
    star_sp = blackbox_true_sp(truth)
    estimator = estimate_ratio_split if split_per_hypothesis else estimate_ratio
    rows, covered = [], 0
    for t in range(int(trials)):
        cell = src.child(t)
        hyps = sample_class(class_spec, cell.child(0))
        s = draw_grouped_sample(truth, m0, m1, cell.child(1))
        sps = true_sps(hyps, truth)
        f_star = sps[closest_to_blackbox(sps, star_sp)]
        est = estimator(hyps, s, epsilon, None if center == "blackbox" else f_star)
        lower = _true_ratio_from_sps(sps, star_sp, epsilon - upsilon) - tau
        upper = _true_ratio_from_sps(sps, star_sp, epsilon + upsilon) + tau
        inside = lower <= est.r_hat <= upper
        covered += inside
        rows.append((t, est.r_hat, lower, upper, int(inside)))
    bound = concentration_bound(n, m0, m1, upsilon, tau)
    return ConcentrationTrial(
        n, m0, m1, epsilon, upsilon, tau, int(trials), covered, covered / int(trials),
        bound, mc_stderr(bound, int(trials)), bool(split_per_hypothesis), center, tuple(rows),
    )


class ProspectRatioEstimator(BaseEstimator):
    """Estimator wrapper around :func:`estimate_ratio`.

    After ``fit(X, y, groups)``: ``ratio_`` is the empirical prospect ratio,
    ``indicators_`` the per-hypothesis membership bits and ``hypotheses_``
    the materialised class.
    """

    def __init__(self, strategic_class=None, epsilon=0.1, center=None, split_per_hypothesis=False, random_state=0):
        self.strategic_class = strategic_class
        self.epsilon = epsilon
        self.center = center
        self.split_per_hypothesis = split_per_hypothesis
        self.random_state = random_state

    def fit(self, X, y, groups):
        X, y, groups = check_grouped(X, y, groups)
        return self.fit_sample(GroupedSample(X, groups, y))

    def fit_sample(self, s: GroupedSample):
        if self.strategic_class is None:
            raise SpecError("ProspectRatioEstimator needs a strategic_class")
        hyps = sample_class(self.strategic_class, as_random_source(self.random_state))
        fn = estimate_ratio_split if self.split_per_hypothesis else estimate_ratio
        self.estimate_ = fn(hyps, s, self.epsilon, self.center)
        self.hypotheses_ = hyps
        self.ratio_ = self.estimate_.r_hat
        self.indicators_ = self.estimate_.indicators
        self.n_features_in_ = s.n_features
        return self

    def prospect_ids(self):
        check_is_fitted(self, "estimate_")
        return [h.id for h, b in zip(self.hypotheses_, self.indicators_) if b]
