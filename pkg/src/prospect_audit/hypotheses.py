"""Binary predictors that make up strategic classes.

Every hypothesis exposes a vectorised ``predict(X)`` returning an int8 array
of 0/1 values, and is callable on a single feature vector. Hypotheses are
immutable; ``to_dict``/``hypothesis_from_dict`` round-trip them through JSON.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DomainError, SpecError
from .validation import check_features

KINDS = ("linear-threshold", "decision-stump", "stump-forest-majority", "tiny-mlp", "tabular")


def _frozen(values, ndim=None):
    arr = np.array(values, dtype=float)
    if ndim is not None and arr.ndim != ndim:
        raise SpecError(f"expected a {ndim}-D parameter array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise SpecError("hypothesis parameters must be finite")
    arr.flags.writeable = False
    return arr


class Hypothesis:
    kind = None
    id: str

    def predict(self, X) -> np.ndarray:
        X = check_features(X, allow_empty=True)
        if len(X) == 0:
            return np.empty(0, dtype=np.int8)
        return self._predict(X).astype(np.int8)

    def __call__(self, x) -> int:
        return int(self.predict(np.asarray(x, dtype=float).reshape(1, -1))[0])

    def _predict(self, X):
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class LinearThreshold(Hypothesis):
    """``1[w . x + b >= 0]``."""

    weights: np.ndarray
    bias: float = 0.0
    id: str = "linear-threshold"
    kind = "linear-threshold"

    def __post_init__(self):
        object.__setattr__(self, "weights", _frozen(self.weights, ndim=1))
        object.__setattr__(self, "bias", float(self.bias))

    def decision_function(self, X):
        X = check_features(X, n_features=len(self.weights), allow_empty=True)
        return X @ self.weights + self.bias

    def _predict(self, X):
        return self.decision_function(X) >= 0

    def to_dict(self):
        return {"kind": self.kind, "id": self.id, "weights": self.weights.tolist(), "bias": self.bias}


def constant(value: int, n_features: int = 1, id=None) -> LinearThreshold:
    """The constant-``value`` predictor, as a degenerate linear threshold."""
    if value not in (0, 1):
        raise SpecError("constant hypotheses predict 0 or 1")
    return LinearThreshold(np.zeros(n_features), 0.0 if value else -1.0, id or f"constant-{value}")


@dataclass(frozen=True, eq=False)
class DecisionStump(Hypothesis):
    """Threshold on one feature: ``1[x[feature] >= threshold]`` or its ``<`` twin."""

    feature: int
    threshold: float
    direction: str = ">="
    id: str = "decision-stump"
    kind = "decision-stump"

    def __post_init__(self):
        if self.direction not in (">=", "<"):
            raise SpecError("stump direction must be '>=' or '<'")
        if int(self.feature) < 0:
            raise SpecError("stump feature index must be non-negative")
        if not np.isfinite(self.threshold):
            raise SpecError("stump threshold must be finite")
        object.__setattr__(self, "feature", int(self.feature))
        object.__setattr__(self, "threshold", float(self.threshold))

    def _predict(self, X):
        if self.feature >= X.shape[1]:
            raise DomainError(f"stump reads feature {self.feature} of a {X.shape[1]}-feature input")
        col = X[:, self.feature]
        return col >= self.threshold if self.direction == ">=" else col < self.threshold

    def to_dict(self):
        return {
            "kind": self.kind,
            "id": self.id,
            "feature": self.feature,
            "threshold": self.threshold,
            "direction": self.direction,
        }


@dataclass(frozen=True, eq=False)
class StumpForest(Hypothesis):
    """Unweighted majority vote over an odd number of stumps."""

    stumps: tuple
    id: str = "stump-forest-majority"
    kind = "stump-forest-majority"

    def __post_init__(self):
        stumps = tuple(self.stumps)
        if not stumps or len(stumps) % 2 == 0:
            raise SpecError("a stump forest needs an odd number of stumps")
        if not all(isinstance(s, DecisionStump) for s in stumps):
            raise SpecError("forest members must be decision stumps")
        object.__setattr__(self, "stumps", stumps)

    def _predict(self, X):
        votes = sum(s._predict(X).astype(np.int64) for s in self.stumps)
        return 2 * votes > len(self.stumps)

    def to_dict(self):
        return {"kind": self.kind, "id": self.id, "stumps": [s.to_dict() for s in self.stumps]}


@dataclass(frozen=True, eq=False)
class TinyMLP(Hypothesis):
    """ReLU network with a single output unit, thresholded at zero.

    ``layers`` is a sequence of ``(W, b)`` pairs; ``W`` has shape
    ``(fan_out, fan_in)`` and the last layer must have one output.
    """

    layers: tuple
    id: str = "tiny-mlp"
    kind = "tiny-mlp"

    def __post_init__(self):
        layers = []
        for W, b in self.layers:
            W = _frozen(W, ndim=2)
            b = _frozen(b, ndim=1)
            if b.shape[0] != W.shape[0]:
                raise SpecError("bias length must match layer fan-out")
            if layers and layers[-1][0].shape[0] != W.shape[1]:
                raise SpecError("consecutive layer shapes do not chain")
            layers.append((W, b))
        if not layers or layers[-1][0].shape[0] != 1:
            raise SpecError("the output layer must have exactly one unit")
        object.__setattr__(self, "layers", tuple(layers))

    @property
    def n_features(self):
        return self.layers[0][0].shape[1]

    def decision_function(self, X):
        h = check_features(X, n_features=self.n_features, allow_empty=True)
        for i, (W, b) in enumerate(self.layers):
            h = h @ W.T + b
            if i < len(self.layers) - 1:
                h = np.maximum(h, 0.0)
        return h[:, 0]

    def _predict(self, X):
        return self.decision_function(X) >= 0

    def to_dict(self):
        return {
            "kind": self.kind,
            "id": self.id,
            "layers": [{"W": W.tolist(), "b": b.tolist()} for W, b in self.layers],
        }


def _row_keys(X):
    X = np.ascontiguousarray(X, dtype=float) + 0.0  # folds -0.0 into 0.0
    return X.view(np.dtype((np.void, X.dtype.itemsize * X.shape[1]))).ravel()


@dataclass(frozen=True, eq=False)
class Tabular(Hypothesis):
    """Explicit finite map from feature vectors to labels.

    Inputs missing from the table raise :class:`DomainError`.
    """

    keys: np.ndarray
    values: np.ndarray
    id: str = "tabular"
    kind = "tabular"

    def __post_init__(self):
        keys = check_features(self.keys)
        values = np.asarray(self.values).reshape(-1)
        if len(values) != len(keys) or not np.isin(values, (0, 1)).all():
            raise SpecError("tabular values must be one 0/1 label per key")
        codes = _row_keys(keys)
        order = np.argsort(codes, kind="stable")
        if len(np.unique(codes)) != len(codes):
            raise SpecError("tabular keys must be distinct")
        object.__setattr__(self, "keys", _frozen(keys, ndim=2))
        object.__setattr__(self, "values", values.astype(np.int8))
        object.__setattr__(self, "_codes", codes[order])
        object.__setattr__(self, "_sorted_values", values.astype(np.int8)[order])

    def _predict(self, X):
        if X.shape[1] != self.keys.shape[1]:
            raise DomainError(f"tabular hypothesis expects {self.keys.shape[1]} features")
        codes = _row_keys(X)
        pos = np.searchsorted(self._codes, codes)
        pos = np.minimum(pos, len(self._codes) - 1)
        hit = self._codes[pos] == codes
        if not hit.all():
            miss = X[np.flatnonzero(~hit)[0]]
            raise DomainError(f"input {miss.tolist()} is not in the table of {self.id!r}")
        return self._sorted_values[pos]

    def to_dict(self):
        return {"kind": self.kind, "id": self.id, "keys": self.keys.tolist(), "values": self.values.tolist()}


def evaluate(h: Hypothesis, x) -> int:
    """Evaluate ``h`` on one feature vector."""
    return h(x)


def predict_matrix(hypotheses, X) -> np.ndarray:
    """Stack predictions into an ``(n_hypotheses, n_points)`` int8 matrix."""
    X = check_features(X, allow_empty=True)
    if not hypotheses:
        return np.empty((0, len(X)), dtype=np.int8)
    return np.vstack([h.predict(X) for h in hypotheses])


def hypothesis_from_dict(d: dict) -> Hypothesis:
    kind = d.get("kind")
    ident = d.get("id", kind)
    try:
        if kind == "linear-threshold":
            return LinearThreshold(d["weights"], d.get("bias", 0.0), ident)
        if kind == "decision-stump":
            return DecisionStump(d["feature"], d["threshold"], d.get("direction", ">="), ident)
        if kind == "stump-forest-majority":
            return StumpForest(tuple(hypothesis_from_dict(s) for s in d["stumps"]), ident)
        if kind == "tiny-mlp":
            return TinyMLP(tuple((layer["W"], layer["b"]) for layer in d["layers"]), ident)
        if kind == "tabular":
            return Tabular(d["keys"], d["values"], ident)
    except KeyError as exc:
        raise SpecError(f"{kind} hypothesis is missing field {exc.args[0]!r}") from exc
    raise SpecError(f"unknown hypothesis kind {kind!r}; expected one of {KINDS}")
