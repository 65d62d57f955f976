"""Strategic classes: explicit hypothesis lists or i.i.d. draws from a family.

Also hosts the logistic-regression black box used to label synthetic and
tabular data before an audit.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

from .core import GroupedSample, as_random_source
from .exceptions import DataError, SpecError
from .hypotheses import DecisionStump, Hypothesis, LinearThreshold, StumpForest, TinyMLP
from .validation import check_binary, check_features

FAMILY_KINDS = ("linear-threshold", "decision-stump", "stump-forest-majority", "tiny-mlp")
DEFAULT_FOREST_SIZE = 15
DEFAULT_MLP_WIDTHS = (4,)


@dataclass(frozen=True)
class ParamDist:
    """Sampling law for one parameter group: ``uniform(a, b)`` or ``gaussian(mean, std)``."""

    law: str = "uniform"
    a: float = -1.0
    b: float = 1.0

    def __post_init__(self):
        if self.law not in ("uniform", "gaussian"):
            raise SpecError(f"unknown parameter law {self.law!r}")
        if not (np.isfinite(self.a) and np.isfinite(self.b)):
            raise SpecError("parameter ranges must be finite")
        if self.law == "uniform" and self.a > self.b:
            raise SpecError("uniform range needs low <= high")
        if self.law == "gaussian" and self.b < 0:
            raise SpecError("gaussian std must be non-negative")

    def draw(self, gen, size):
        if self.law == "uniform":
            return gen.uniform(self.a, self.b, size=size)
        return gen.normal(self.a, self.b, size=size)

    @classmethod
    def parse(cls, value) -> "ParamDist":
        """Accept a ParamDist, a ``(law, a, b)`` triple, a ``[a, b]`` pair or a mapping."""
        if isinstance(value, ParamDist):
            return value
        if isinstance(value, dict):
            return cls(value.get("law", "uniform"), float(value["a"]), float(value["b"]))
        value = list(value)
        if len(value) == 2:
            return cls("uniform", float(value[0]), float(value[1]))
        if len(value) == 3:
            return cls(str(value[0]), float(value[1]), float(value[2]))
        raise SpecError(f"cannot read a parameter distribution from {value!r}")


@dataclass(frozen=True)
class FamilySpec:
    """Parametric family plus the measure over its parameters.

    ``params`` maps parameter groups to :class:`ParamDist`. Recognised groups
    are ``weight`` and ``bias`` (linear, mlp) and ``threshold`` (stumps);
    missing groups default to ``uniform(-1, 1)``. Stump features and
    directions are drawn uniformly.
    """

    kind: str
    dimension: int
    forest_size: int = DEFAULT_FOREST_SIZE
    mlp_widths: tuple = DEFAULT_MLP_WIDTHS
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in FAMILY_KINDS:
            raise SpecError(f"unknown family kind {self.kind!r}; expected one of {FAMILY_KINDS}")
        if int(self.dimension) < 1:
            raise SpecError("family dimension must be at least 1")
        if int(self.forest_size) < 1 or int(self.forest_size) % 2 == 0:
            raise SpecError("forest size must be odd so the majority vote is defined")
        widths = tuple(int(w) for w in self.mlp_widths)
        if any(w < 1 for w in widths):
            raise SpecError("mlp widths must be at least 1")
        object.__setattr__(self, "dimension", int(self.dimension))
        object.__setattr__(self, "forest_size", int(self.forest_size))
        object.__setattr__(self, "mlp_widths", widths)
        object.__setattr__(self, "params", {k: ParamDist.parse(v) for k, v in dict(self.params).items()})

    def dist(self, name) -> ParamDist:
        return self.params.get(name, ParamDist())

    def _stump(self, gen, ident):
        feature = int(gen.integers(self.dimension))
        threshold = float(self.dist("threshold").draw(gen, None))
        direction = ">=" if gen.integers(2) == 0 else "<"
        return DecisionStump(feature, threshold, direction, ident)

    def draw(self, gen, ident) -> Hypothesis:
        if self.kind == "linear-threshold":
            w = self.dist("weight").draw(gen, self.dimension)
            b = float(self.dist("bias").draw(gen, None))
            return LinearThreshold(w, b, ident)
        if self.kind == "decision-stump":
            return self._stump(gen, ident)
        if self.kind == "stump-forest-majority":
            stumps = tuple(self._stump(gen, f"{ident}/{j}") for j in range(self.forest_size))
            return StumpForest(stumps, ident)
        sizes = (self.dimension,) + self.mlp_widths + (1,)
        layers = []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            W = self.dist("weight").draw(gen, (fan_out, fan_in))
            b = self.dist("bias").draw(gen, fan_out)
            layers.append((W, b))
        return TinyMLP(tuple(layers), ident)


@dataclass(frozen=True, eq=False)
class StrategicClass:
    """Either an explicit list of hypotheses or ``n`` draws from a family."""

    mode: str
    hypotheses: tuple = ()
    family: FamilySpec | None = None
    n: int = 0

    def __post_init__(self):
        if self.mode == "explicit":
            hyps = tuple(self.hypotheses)
            if not hyps:
                raise SpecError("an explicit strategic class needs at least one hypothesis")
            ids = [h.id for h in hyps]
            if len(set(ids)) != len(ids):
                raise SpecError("hypothesis ids in an explicit class must be unique")
            object.__setattr__(self, "hypotheses", hyps)
        elif self.mode == "sampled":
            if not isinstance(self.family, FamilySpec):
                raise SpecError("a sampled strategic class needs a FamilySpec")
            if int(self.n) < 1:
                raise SpecError("a sampled strategic class needs n >= 1")
            object.__setattr__(self, "n", int(self.n))
        else:
            raise SpecError(f"unknown strategic class mode {self.mode!r}")

    @classmethod
    def explicit(cls, hypotheses: Sequence[Hypothesis]) -> "StrategicClass":
        return cls("explicit", hypotheses=tuple(hypotheses))

    @classmethod
    def sampled(cls, family: FamilySpec, n: int) -> "StrategicClass":
        return cls("sampled", family=family, n=n)

    def __len__(self):
        return len(self.hypotheses) if self.mode == "explicit" else self.n


def sample_class(spec, rng=None) -> list[Hypothesis]:
    """Materialise a strategic class.

    Hypothesis ``k`` of a sampled class is drawn from stream ``rng.child(k)``,
    so the list does not depend on how the draws are scheduled.
    """
    if isinstance(spec, (list, tuple)):
        spec = StrategicClass.explicit(spec)
    if not isinstance(spec, StrategicClass):
        raise SpecError(f"expected a StrategicClass, got {type(spec).__name__}")
    if spec.mode == "explicit":
        return list(spec.hypotheses)
    src = as_random_source(rng)
    kind = spec.family.kind
    return [spec.family.draw(src.child(k).generator(), f"{kind}-{k}") for k in range(spec.n)]


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


class LogisticBlackBox(ClassifierMixin, BaseEstimator):
    """Full-batch logistic regression with an L2 penalty on the weights.

    Minimises ``mean(logloss) + l2/2 * ||w||^2`` from a zero start. The
    penalty is applied as a proximal step, which keeps the iteration stable
    for any ``l2``; the intercept is not penalised.
    """

    def __init__(self, l2=0.0, steps=500, lr=0.5):
        self.l2 = l2
        self.steps = steps
        self.lr = lr

    def fit(self, X, y):
        if self.l2 < 0 or self.lr <= 0 or self.steps < 0:
            raise SpecError("need l2 >= 0, lr > 0 and steps >= 0")
        X = check_features(X)
        y = check_binary(y).astype(float)
        if len(y) != len(X):
            raise DataError("X and y lengths differ")
        m, d = X.shape
        w = np.zeros(d)
        b = 0.0
        shrink = 1.0 + self.lr * self.l2
        for _ in range(int(self.steps)):
            r = _sigmoid(X @ w + b) - y
            w = (w - self.lr * (X.T @ r) / m) / shrink
            b -= self.lr * r.mean()
        self.coef_ = w
        self.intercept_ = b
        self.classes_ = np.array([0, 1])
        self.n_features_in_ = d
        return self

    def decision_function(self, X):
        check_is_fitted(self, "coef_")
        X = check_features(X, n_features=self.n_features_in_)
        return X @ self.coef_ + self.intercept_

    def predict_proba(self, X):
        p = _sigmoid(self.decision_function(X))
        return np.column_stack([1 - p, p])

    def predict(self, X):
        return (self.decision_function(X) >= 0).astype(np.int8)

    def to_hypothesis(self, id="blackbox-logreg") -> LinearThreshold:
        check_is_fitted(self, "coef_")
        return LinearThreshold(self.coef_, self.intercept_, id)


def train_blackbox_logreg(data: GroupedSample, l2=0.0, steps=500, lr=0.5) -> LinearThreshold:
    """Fit the logistic black box on ``data`` and return its 0.5-threshold rule."""
    if len(data) == 0:
        raise DataError("cannot train on an empty sample")
    model = LogisticBlackBox(l2=l2, steps=steps, lr=lr).fit(data.X, data.y)
    return model.to_hypothesis()
