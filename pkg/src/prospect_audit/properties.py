"""Audited properties and their auditing losses.

Statistical parity is the primary property. Expected risk, learning
stability and robust risk share the same interface: an empirical property
value for a hypothesis, the matching value for the black box (read off the
sample labels), and an empirical audit risk that the EPO oracle minimises.

Label conventions: ``sample.y`` holds the black-box labels ``y*``;
``sample.y_true`` holds ground truth ``y`` (it falls back to ``y*``).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .core import FiniteSupportDistribution, GroupedSample, LabeledPoint
from .exceptions import GroupError, SpecError
from .hypotheses import DecisionStump, Hypothesis, LinearThreshold
from .validation import check_features

PROPERTY_KINDS = ("statistical-parity", "expected-risk", "learning-stability", "robust-risk")
ALIASES = {
    "sp": "statistical-parity",
    "risk": "expected-risk",
    "stability": "learning-stability",
    "robust": "robust-risk",
}


@dataclass(frozen=True, eq=False)
class PerturbationSet:
    """``l-inf-ball`` of a given radius, or a finite list of additive offsets."""

    kind: str
    radius: float = 0.0
    offsets: np.ndarray | None = None

    def __post_init__(self):
        if self.kind == "l-inf-ball":
            if not (np.isfinite(self.radius) and self.radius >= 0):
                raise SpecError("ball radius must be finite and non-negative")
            object.__setattr__(self, "radius", float(self.radius))
        elif self.kind == "finite-offset-list":
            if self.offsets is None:
                raise SpecError("a finite offset list needs offsets")
            offsets = check_features(self.offsets)
            if not (offsets == 0).all(axis=1).any():
                raise SpecError("the offset list must contain the zero offset")
            offsets.flags.writeable = False
            object.__setattr__(self, "offsets", offsets)
        else:
            raise SpecError(f"unknown perturbation kind {self.kind!r}")

    @classmethod
    def ball(cls, radius):
        return cls("l-inf-ball", radius=radius)

    @classmethod
    def finite(cls, offsets):
        return cls("finite-offset-list", offsets=offsets)


@dataclass(frozen=True, eq=False)
class PropertySpec:
    kind: str = "statistical-parity"
    perturbation: PerturbationSet | None = None
    shift: GroupedSample | None = None

    def __post_init__(self):
        kind = ALIASES.get(self.kind, self.kind)
        if kind not in PROPERTY_KINDS:
            raise SpecError(f"unknown property {self.kind!r}; expected one of {PROPERTY_KINDS}")
        object.__setattr__(self, "kind", kind)
        if kind == "robust-risk" and self.perturbation is None:
            raise SpecError("robust risk needs a PerturbationSet")
        if kind == "learning-stability" and self.shift is None:
            raise SpecError("learning stability needs a shift sample")
        if kind not in ("robust-risk",) and self.perturbation is not None:
            raise SpecError(f"{kind} takes no perturbation set")
        if kind != "learning-stability" and self.shift is not None:
            raise SpecError(f"{kind} takes no shift sample")


SP = PropertySpec()


def _as_prop(prop):
    if prop is None:
        return SP
    if isinstance(prop, str):
        return PropertySpec(prop)
    return prop


# statistical parity


def sp_from_predictions(pred, group) -> np.ndarray | float:
    """``|rate_0 - rate_1|`` of positive predictions, row-wise.

    ``pred`` is a 0/1 vector or an ``(n, m)`` matrix over the sample rows;
    ``group`` is the 0/1 group tag per row. Rates come from integer counts.
    """
    pred = np.asarray(pred)
    group = np.asarray(group)
    m1 = int(np.count_nonzero(group))
    m0 = int(group.size - m1)
    if m0 == 0 or m1 == 0:
        raise GroupError(f"statistical parity needs both groups non-empty (m0={m0}, m1={m1})")
    in1 = group.astype(bool)
    pos1 = np.count_nonzero(pred[..., in1] == 1, axis=-1)
    pos0 = np.count_nonzero(pred[..., ~in1] == 1, axis=-1)
    out = np.abs(pos0 / m0 - pos1 / m1)
    return float(out) if np.ndim(out) == 0 else out


def empirical_sp(h: Hypothesis, s: GroupedSample) -> float:
    s.require_both_groups()
    return sp_from_predictions(h.predict(s.X), s.group)


def blackbox_empirical_sp(s: GroupedSample) -> float:
    s.require_both_groups()
    return sp_from_predictions(s.y, s.group)


def true_sp_from_predictions(pred_on_atoms, dist: FiniteSupportDistribution) -> float:
    dist.require_both_groups()
    return abs(dist.positive_rate(0, pred_on_atoms) - dist.positive_rate(1, pred_on_atoms))


def true_sp(h: Hypothesis, dist: FiniteSupportDistribution) -> float:
    """Exact statistical parity of ``h`` under ``dist``."""
    dist.require_both_groups()
    return true_sp_from_predictions(h.predict(dist.X), dist)


def blackbox_true_sp(dist: FiniteSupportDistribution) -> float:
    """Exact statistical parity of the labels carried by ``dist``."""
    return true_sp_from_predictions(dist.y, dist)


# robust-risk support


def _reachable(h: Hypothesis, X, pset: PerturbationSet):
    """Per row: can some ``z`` in ``U(x)`` be labelled 1, and can some be labelled 0."""
    if pset.kind == "finite-offset-list":
        if pset.offsets.shape[1] != X.shape[1]:
            raise SpecError("offset dimension does not match the feature dimension")
        preds = np.stack([h.predict(X + delta) for delta in pset.offsets])
        return (preds == 1).any(axis=0), (preds == 0).any(axis=0)
    r = pset.radius
    if isinstance(h, LinearThreshold):
        score = h.decision_function(X)
        slack = r * np.abs(h.weights).sum()
        return score + slack >= 0, score - slack < 0
    if isinstance(h, DecisionStump):
        col = X[:, h.feature]
        hi_reach = col + r >= h.threshold
        lo_reach = col - r < h.threshold
        return (hi_reach, lo_reach) if h.direction == ">=" else (lo_reach, hi_reach)
    raise SpecError(
        f"an exact l-inf-ball supremum is only available for linear thresholds and stumps, "
        f"not {h.kind}; use a finite offset list"
    )


def _robust_terms(h, X, target, bb_err, pset):
    """Worst-case error indicator and worst-case audit loss per row."""
    can1, can0 = _reachable(h, X, pset)
    err_can_be_1 = np.where(target == 1, can0, can1)
    err_can_be_0 = np.where(target == 1, can1, can0)
    loss = np.where(bb_err == 1, err_can_be_0, err_can_be_1)
    return err_can_be_1.astype(np.int8), loss.astype(np.int8)


# pair losses


def _point(p):
    if isinstance(p, LabeledPoint):
        return np.asarray(p.x, dtype=float), p.group
    return np.asarray(p, dtype=float), None


def audit_loss(prop, h: Hypothesis, paired) -> float:
    """One row of the loss table, evaluated on a single paired input.

    * statistical parity: ``(x, x')`` with ``x`` from group 0 and ``x'`` from
      group 1; loss ``|1[h(x)=1] - 1[h(x')=1]|``;
    * expected risk: ``(x, y, y*)``; loss ``|1[h(x)!=y] - 1[y*!=y]|``;
    * robust risk: ``(x, y, y*)``; loss ``sup_z |1[h(z)!=y] - 1[y*!=y]|``;
    * learning stability: ``((x, y, y*), (x~, y~, y~*))``; loss
      ``|(1[h(x)!=y] - 1[h(x~)!=y~]) - (1[y*!=y] - 1[y~*!=y~])|``.
    """
    if isinstance(prop, str) and ALIASES.get(prop, prop) == "learning-stability":
        kind = "learning-stability"
    else:
        prop = _as_prop(prop)
        kind = prop.kind
    try:
        if kind == "statistical-parity":
            (x0, g0), (x1, g1) = (_point(p) for p in paired)
            if (g0, g1) not in ((None, None), (0, 1)):
                raise SpecError("statistical-parity pairs are (group-0 point, group-1 point)")
            return float(abs(h(x0) - h(x1)))
        if kind in ("expected-risk", "robust-risk"):
            x, y, y_star = paired
            x = np.asarray(x, dtype=float).reshape(1, -1)
            bb_err = int(y_star != y)
            if kind == "expected-risk":
                return float(abs(int(h(x[0]) != y) - bb_err))
            _, loss = _robust_terms(h, x, np.array([y]), np.array([bb_err]), prop.perturbation)
            return float(loss[0])
        (x, y, y_star), (xs, ys, ys_star) = paired
        own = int(h(x) != y) - int(h(xs) != ys)
        ref = int(y_star != y) - int(ys_star != ys)
        return float(abs(own - ref))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, SpecError):
            raise
        raise SpecError(f"paired input does not match property {kind}: {exc}") from exc


# sample-level quantities


def _stability_pair(s: GroupedSample, shift: GroupedSample):
    k = min(len(s), len(shift))
    if len(s) != len(shift):
        warnings.warn(
            f"learning-stability pairing truncates samples of sizes {len(s)} and {len(shift)} to {k}",
            stacklevel=3,
        )
    if k == 0:
        raise SpecError("learning stability needs non-empty source and shift samples")
    return s.head(k), shift.head(k)


def _check_sample(prop, s):
    if prop.kind == "statistical-parity":
        s.require_both_groups()
    elif len(s) == 0:
        raise SpecError(f"{prop.kind} needs a non-empty sample")


def property_terms(prop, h: Hypothesis, s: GroupedSample):
    """``(mu_hat(h), mu_hat_blackbox, empirical audit risk)`` on ``s``."""
    prop = _as_prop(prop)
    _check_sample(prop, s)
    if prop.kind == "statistical-parity":
        mu = empirical_sp(h, s)
        ref = blackbox_empirical_sp(s)
        return mu, ref, abs(mu - ref)
    if prop.kind == "learning-stability":
        src, sh = _stability_pair(s, prop.shift)
        e_src = (h.predict(src.X) != src.targets).astype(np.int64)
        e_sh = (h.predict(sh.X) != sh.targets).astype(np.int64)
        b_src = (src.y != src.targets).astype(np.int64)
        b_sh = (sh.y != sh.targets).astype(np.int64)
        k = len(src)
        mu = abs(e_src.sum() - e_sh.sum()) / k
        ref = abs(b_src.sum() - b_sh.sum()) / k
        risk = np.abs((e_src - e_sh) - (b_src - b_sh)).sum() / k
        return float(mu), float(ref), float(risk)
    target = s.targets
    bb_err = (s.y != target).astype(np.int8)
    if prop.kind == "expected-risk":
        err = (h.predict(s.X) != target).astype(np.int8)
        loss = np.abs(err - bb_err)
    else:
        err, loss = _robust_terms(h, s.X, target, bb_err, prop.perturbation)
    m = len(s)
    return (
        int(np.count_nonzero(err)) / m,
        int(np.count_nonzero(bb_err)) / m,
        int(np.count_nonzero(loss)) / m,
    )


def empirical_property(prop, h: Hypothesis, s: GroupedSample) -> float:
    return property_terms(prop, h, s)[0]


def blackbox_empirical_property(prop, s: GroupedSample) -> float:
    """The black box's own empirical property, computed from the labels."""
    prop = _as_prop(prop)
    _check_sample(prop, s)
    if prop.kind == "statistical-parity":
        return blackbox_empirical_sp(s)
    if prop.kind == "learning-stability":
        src, sh = _stability_pair(s, prop.shift)
        b_src = np.count_nonzero(src.y != src.targets)
        b_sh = np.count_nonzero(sh.y != sh.targets)
        return abs(int(b_src) - int(b_sh)) / len(src)
    return int(np.count_nonzero(s.y != s.targets)) / len(s)


def empirical_audit_risk(prop, h: Hypothesis, s: GroupedSample) -> float:
    """Empirical audit risk of ``h`` on ``s``.

    For statistical parity this is ``|SP_S(h) - SP_S(black box)|``, the
    objective of the EPO oracle; otherwise it is the mean audit loss over
    points (or aligned index pairs for learning stability).
    """
    return property_terms(prop, h, s)[2]


def sp_pair_mean(h: Hypothesis, s: GroupedSample) -> float:
    """Signed mean of ``1[h(x)=1] - 1[h(x')=1]`` over all ``m0 * m1`` cross-group pairs.

    Equals ``rate_0 - rate_1``, so its absolute value is ``empirical_sp``.
    """
    s.require_both_groups()
    pred = h.predict(s.X).astype(np.int64)
    p0 = pred[s.group == 0]
    p1 = pred[s.group == 1]
    return int(np.subtract.outer(p0, p1).sum()) / (len(p0) * len(p1))
