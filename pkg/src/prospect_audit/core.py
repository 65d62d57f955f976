"""Shared domain types: grouped samples, finite distributions, random streams."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .exceptions import DataError, DistributionError, GroupError
from .validation import check_binary, check_features


@dataclass(frozen=True)
class RandomSource:
    """Counter-based random stream addressed by ``(seed, stream)``.

    The stream id is a path of non-negative integers. ``child(k)`` appends
    ``k``, so independent work items (hypothesis ``k``, trial ``t``) get
    disjoint streams whose draws do not depend on evaluation order. Draws come
    from a Philox generator keyed through :class:`numpy.random.SeedSequence`.
    """

    seed: int
    stream: tuple = ()

    def __post_init__(self):
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        stream = self.stream
        if isinstance(stream, (int, np.integer)):
            stream = (int(stream),)
        stream = tuple(int(s) for s in stream)
        if any(not 0 <= s < 2**64 for s in stream):
            raise ValueError("stream ids must be 64-bit unsigned integers")
        object.__setattr__(self, "seed", int(self.seed))
        object.__setattr__(self, "stream", stream)

    def child(self, index: int) -> "RandomSource":
        return RandomSource(self.seed, self.stream + (int(index),))

    def generator(self) -> np.random.Generator:
        """A fresh generator positioned at the start of this stream."""
        ss = np.random.SeedSequence(self.seed, spawn_key=self.stream)
        return np.random.Generator(np.random.Philox(ss))


def as_random_source(rng) -> RandomSource:
    """Coerce ``None``, an int seed or a :class:`RandomSource`."""
    if isinstance(rng, RandomSource):
        return rng
    if rng is None:
        return RandomSource(0)
    if isinstance(rng, (int, np.integer)):
        return RandomSource(int(rng))
    raise TypeError(f"cannot build a RandomSource from {type(rng).__name__}")


class LabeledPoint(NamedTuple):
    x: tuple
    group: int
    label: int


@dataclass(frozen=True, eq=False)
class GroupedSample:
    """Labelled points split into two protected groups.

    ``y`` holds the labels produced by the audited black box. ``y_true`` holds
    ground-truth labels when they are known (expected-risk style properties);
    when absent the black-box labels stand in for them. ``atom_index`` records
    which atom of a :class:`FiniteSupportDistribution` produced each row.
    """

    X: np.ndarray
    group: np.ndarray
    y: np.ndarray
    y_true: np.ndarray | None = None
    atom_index: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        X = check_features(self.X, allow_empty=True)
        group = check_binary(self.group, "groups")
        y = check_binary(self.y, "labels")
        if not (len(X) == len(group) == len(y)):
            raise DataError("X, group and y must have the same length")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "group", group)
        object.__setattr__(self, "y", y)
        if self.y_true is not None:
            y_true = check_binary(self.y_true, "true labels")
            if len(y_true) != len(y):
                raise DataError("y_true must have the same length as y")
            object.__setattr__(self, "y_true", y_true)
        if self.atom_index is not None:
            object.__setattr__(self, "atom_index", np.asarray(self.atom_index, dtype=np.int64))
        for arr in (self.X, self.group, self.y, self.y_true, self.atom_index):
            if arr is not None:
                arr.flags.writeable = False

    @classmethod
    def from_points(cls, points: Sequence[LabeledPoint], n_features=None) -> "GroupedSample":
        if not points:
            if n_features is None:
                raise DataError("n_features is required for an empty sample")
            return cls(np.empty((0, n_features)), np.empty(0, np.int8), np.empty(0, np.int8))
        X = np.array([list(p.x) for p in points], dtype=float)
        return cls(X, [p.group for p in points], [p.label for p in points])

    def __len__(self):
        return len(self.y)

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    @property
    def m0(self) -> int:
        return int(len(self.group) - np.count_nonzero(self.group))

    @property
    def m1(self) -> int:
        return int(np.count_nonzero(self.group))

    @property
    def targets(self) -> np.ndarray:
        """Ground-truth labels, falling back to the black-box labels."""
        return self.y if self.y_true is None else self.y_true

    def points(self) -> list[LabeledPoint]:
        return [LabeledPoint(tuple(x), int(g), int(l)) for x, g, l in zip(self.X, self.group, self.y)]

    def take(self, index) -> "GroupedSample":
        index = np.asarray(index, dtype=np.int64)
        return GroupedSample(
            self.X[index],
            self.group[index],
            self.y[index],
            None if self.y_true is None else self.y_true[index],
            None if self.atom_index is None else self.atom_index[index],
        )

    def head(self, k: int) -> "GroupedSample":
        return self.take(np.arange(min(k, len(self))))

    def group_part(self, g: int) -> "GroupedSample":
        """The sub-sample ``S0`` (``g=0``) or ``S1`` (``g=1``)."""
        return self.take(np.flatnonzero(self.group == g))

    def with_labels(self, y) -> "GroupedSample":
        return GroupedSample(self.X, self.group, y, self.y_true, self.atom_index)

    def require_both_groups(self):
        if self.m0 == 0 or self.m1 == 0:
            raise GroupError(f"statistical parity needs both groups non-empty (m0={self.m0}, m1={self.m1})")


PROB_TOL = 1e-12
COMPARE_TOL = 1e-12  # slack for float rounding in ``|a - b| <= eps`` tests


@dataclass(frozen=True, eq=False)
class FiniteSupportDistribution:
    """Joint distribution over labelled points with finitely many atoms.

    Label noise of a randomised black box is expressed by listing the same
    feature vector twice with different labels.
    """

    X: np.ndarray
    group: np.ndarray
    y: np.ndarray
    probs: np.ndarray
    names: tuple = ()

    def __post_init__(self):
        try:
            X = check_features(self.X)
            group = check_binary(self.group, "groups")
            y = check_binary(self.y, "labels")
        except DataError as exc:
            raise DistributionError(str(exc)) from exc
        probs = np.asarray(self.probs, dtype=float).reshape(-1)
        if not (len(X) == len(group) == len(y) == len(probs)):
            raise DistributionError("atom arrays must have equal lengths")
        if not np.all(np.isfinite(probs)) or probs.min() < 0 or probs.max() > 1:
            raise DistributionError("atom probabilities must lie in [0, 1]")
        total = math.fsum(probs.tolist())
        if abs(total - 1.0) > PROB_TOL:
            raise DistributionError(f"atom probabilities sum to {total!r}, not 1")
        for name, arr in (("X", X), ("group", group), ("y", y), ("probs", probs)):
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "names", tuple(self.names))

    @classmethod
    def from_atoms(cls, atoms: Sequence[tuple[LabeledPoint, float]]) -> "FiniteSupportDistribution":
        if not atoms:
            raise DistributionError("a distribution needs at least one atom")
        X = np.array([list(p.x) for p, _ in atoms], dtype=float)
        return cls(X, [p.group for p, _ in atoms], [p.label for p, _ in atoms], [w for _, w in atoms])

    def __len__(self):
        return len(self.probs)

    def group_mass(self, g: int) -> float:
        return math.fsum(self.probs[self.group == g].tolist())

    def require_both_groups(self):
        for g in (0, 1):
            if self.group_mass(g) <= 0:
                raise GroupError(f"group {g} has zero probability mass")

    def conditional(self, g: int) -> np.ndarray:
        """Atom probabilities conditioned on group ``g`` (zero outside it)."""
        mass = self.group_mass(g)
        if mass <= 0:
            raise GroupError(f"group {g} has zero probability mass")
        return np.where(self.group == g, self.probs, 0.0) / mass

    def positive_rate(self, g: int, predictions=None) -> float:
        """``P[pred = 1 | group g]``; ``predictions`` default to the atom labels."""
        pred = self.y if predictions is None else np.asarray(predictions)
        mask = self.group == g
        return math.fsum(self.probs[mask & (pred == 1)].tolist()) / self.group_mass(g)

    def sample_from_atoms(self, index) -> GroupedSample:
        index = np.asarray(index, dtype=np.int64)
        return GroupedSample(self.X[index], self.group[index], self.y[index], atom_index=index)


def _check_distribution(dist):
    if not isinstance(dist, FiniteSupportDistribution):
        raise DistributionError(f"expected a FiniteSupportDistribution, got {type(dist).__name__}")


def draw_sample(dist: FiniteSupportDistribution, m: int, rng=None) -> GroupedSample:
    """Draw ``m`` i.i.d. points from ``dist``."""
    _check_distribution(dist)
    if m < 1:
        raise DistributionError("sample size must be at least 1")
    gen = as_random_source(rng).generator()
    index = gen.choice(len(dist), size=int(m), p=dist.probs)
    return dist.sample_from_atoms(index)


def draw_grouped_sample(dist: FiniteSupportDistribution, m0: int, m1: int, rng=None) -> GroupedSample:
    """Draw exactly ``m0`` group-0 and ``m1`` group-1 points.

    Each group is sampled i.i.d. from its conditional distribution; group 0
    rows come first.
    """
    _check_distribution(dist)
    if m0 < 0 or m1 < 0:
        raise DistributionError("group sizes must be non-negative")
    src = as_random_source(rng)
    parts = []
    for g, m in ((0, m0), (1, m1)):
        if m:
            parts.append(src.child(g).generator().choice(len(dist), size=int(m), p=dist.conditional(g)))
    index = np.concatenate(parts) if parts else np.empty(0, dtype=np.int64)
    return dist.sample_from_atoms(index)
