"""Black-box auditing of group fairness with prospect classes."""

__version__ = "0.1.0"

from .core import (
    FiniteSupportDistribution,
    GroupedSample,
    LabeledPoint,
    RandomSource,
    draw_grouped_sample,
    draw_sample,
)
from .epo import EPOAuditor, EpoResult, epo_audit, strong_audit_check
from .exceptions import AuditError
from .hypotheses import DecisionStump, LinearThreshold, StumpForest, Tabular, TinyMLP, constant, evaluate
from .properties import (
    PerturbationSet,
    PropertySpec,
    audit_loss,
    blackbox_empirical_sp,
    empirical_audit_risk,
    empirical_sp,
    true_sp,
)
from .prospect import ProspectRatioEstimator, estimate_ratio, run_concentration_experiment, true_ratio
from .strategic import FamilySpec, LogisticBlackBox, StrategicClass, sample_class, train_blackbox_logreg

__all__ = [
    "AuditError",
    "DecisionStump",
    "EPOAuditor",
    "EpoResult",
    "FamilySpec",
    "FiniteSupportDistribution",
    "GroupedSample",
    "LabeledPoint",
    "LinearThreshold",
    "LogisticBlackBox",
    "PerturbationSet",
    "PropertySpec",
    "ProspectRatioEstimator",
    "RandomSource",
    "StrategicClass",
    "StumpForest",
    "Tabular",
    "TinyMLP",
    "audit_loss",
    "blackbox_empirical_sp",
    "constant",
    "draw_grouped_sample",
    "draw_sample",
    "empirical_audit_risk",
    "empirical_sp",
    "epo_audit",
    "estimate_ratio",
    "evaluate",
    "run_concentration_experiment",
    "sample_class",
    "strong_audit_check",
    "train_blackbox_logreg",
    "true_ratio",
    "true_sp",
]
