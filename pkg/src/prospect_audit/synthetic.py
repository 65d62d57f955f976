"""Synthetic finite-support distributions for experiments and bound checks."""

from __future__ import annotations

import math

import numpy as np

from .core import PROB_TOL, FiniteSupportDistribution, as_random_source
from .exceptions import SpecError

SYNTH_KINDS = ("two-gaussian-grid", "lowerbound-adversarial", "tabular-manual", "random-atoms")


class ConstructionError(RuntimeError):
    """Masses of a built-in construction failed to normalise (a bug, not bad input)."""


def _finish(X, group, y, probs, names=()):
    total = math.fsum(np.asarray(probs, dtype=float).tolist())
    if abs(total - 1.0) > PROB_TOL:
        raise ConstructionError(f"construction masses sum to {total!r}")
    return FiniteSupportDistribution(X, group, y, probs, names)


def two_gaussian_grid(
    points_per_axis=7,
    dimension=2,
    low=-2.0,
    high=2.0,
    mean0=None,
    mean1=None,
    std=1.0,
    alpha=0.5,
    label_weights=None,
    label_bias=0.0,
    label_noise=0.0,
):
    """Both groups on one regular grid, weighted by discretised Gaussians.

    Group ``g`` has total mass ``1 - alpha`` (g=0) or ``alpha`` (g=1), spread
    over the grid in proportion to an isotropic Gaussian density around
    ``mean_g``. Labels follow ``1[label_weights . x + label_bias >= 0]``;
    ``label_noise`` moves that fraction of every atom's mass onto a copy with
    the flipped label.
    """
    if points_per_axis < 1 or dimension < 1:
        raise SpecError("grid needs at least one point per axis and one dimension")
    if not 0 < alpha < 1 or std <= 0 or not 0 <= label_noise <= 0.5 or low > high:
        raise SpecError("need 0 < alpha < 1, std > 0, 0 <= label_noise <= 0.5 and low <= high")
    mean0 = np.full(dimension, -0.5) if mean0 is None else np.asarray(mean0, dtype=float)
    mean1 = np.full(dimension, 0.5) if mean1 is None else np.asarray(mean1, dtype=float)
    w = np.ones(dimension) if label_weights is None else np.asarray(label_weights, dtype=float)
    if mean0.shape != (dimension,) or mean1.shape != (dimension,) or w.shape != (dimension,):
        raise SpecError("means and label weights must match the dimension")
    axis = np.linspace(low, high, points_per_axis)
    grid = np.stack(np.meshgrid(*([axis] * dimension), indexing="ij"), axis=-1).reshape(-1, dimension)
    labels = (grid @ w + label_bias >= 0).astype(np.int8)
    X, group, y, probs = [], [], [], []
    for g, mean, mass in ((0, mean0, 1 - alpha), (1, mean1, alpha)):
        dens = np.exp(-0.5 * ((grid - mean) ** 2).sum(axis=1) / std**2)
        dens = dens / math.fsum(dens.tolist()) * mass
        for flip, share in ((0, 1 - label_noise), (1, label_noise)):
            if share == 0:
                continue
            X.append(grid)
            group.append(np.full(len(grid), g))
            y.append(labels ^ flip)
            probs.append(dens * share)
    probs = np.concatenate(probs)
    probs[-1] += 1.0 - math.fsum(probs.tolist())  # absorb rounding
    return _finish(np.vstack(X), np.concatenate(group), np.concatenate(y), probs)


def lowerbound_adversarial(d=5, epsilon=0.01, concept=()):
    """Adversarial distribution on ``x_0, ..., x_d`` plus a complement atom ``x_1'``.

    Masses: ``(1 - 8 eps)/2`` on ``x_0``, 0 on ``x_1``, ``8 eps/(d - 1)`` on
    each of ``x_2..x_d``. These sum to ``(1 + 8 eps)/2``; the remaining
    ``(1 - 8 eps)/2`` sits on ``x_1'``, a group-1 atom labelled 0 that only
    restores normalisation. ``x_0`` is in group 0, ``x_1`` in group 1, and
    ``x_i`` for ``i >= 2`` in group ``i % 2``. Labels follow the concept
    ``{x_0, x_1} | concept`` where ``concept`` lists indices in ``2..d``.
    The single feature is the atom index (``d + 1`` for ``x_1'``).
    """
    d = int(d)
    if d < 2:
        raise SpecError("the adversarial construction needs d >= 2")
    if not 0 < epsilon < 1 / 8:
        raise SpecError("the adversarial construction needs 0 < epsilon < 1/8")
    concept = set(int(i) for i in concept)
    if not concept <= set(range(2, d + 1)):
        raise SpecError("concept indices must lie in 2..d")
    probs = [(1 - 8 * epsilon) / 2, 0.0] + [8 * epsilon / (d - 1)] * (d - 1)
    probs.append(1.0 - math.fsum(probs))
    X = np.arange(d + 2, dtype=float).reshape(-1, 1)
    group = [0, 1] + [i % 2 for i in range(2, d + 1)] + [1]
    y = [1, 1] + [int(i in concept) for i in range(2, d + 1)] + [0]
    names = tuple(f"x{i}" for i in range(d + 1)) + ("x1'",)
    return _finish(X, group, y, probs, names)


def tabular_manual(atoms):
    """Atoms given as mappings ``{x, group, label, p}``."""
    if not atoms:
        raise SpecError("tabular-manual needs at least one atom")
    try:
        X = [list(np.atleast_1d(np.asarray(a["x"], dtype=float))) for a in atoms]
        group = [int(a["group"]) for a in atoms]
        y = [int(a["label"]) for a in atoms]
        probs = [float(a["p"]) for a in atoms]
    except (KeyError, TypeError) as exc:
        raise SpecError(f"tabular-manual atoms need x, group, label and p: {exc}") from exc
    return FiniteSupportDistribution(X, group, y, probs)


def random_atoms(n_atoms=20, positive_rate=0.5, rng=None):
    """``n_atoms`` atoms split evenly between the groups with Dirichlet masses.

    Atom ``k`` has the single feature ``k``, so tabular hypotheses over the
    atoms are well defined. Labels are Bernoulli(``positive_rate``).
    """
    n_atoms = int(n_atoms)
    if n_atoms < 2:
        raise SpecError("random-atoms needs at least two atoms")
    gen = as_random_source(rng).generator()
    probs = gen.dirichlet(np.ones(n_atoms))
    probs[-1] = 1.0 - math.fsum(probs[:-1].tolist())
    group = np.arange(n_atoms) % 2
    y = (gen.random(n_atoms) < positive_rate).astype(np.int8)
    X = np.arange(n_atoms, dtype=float).reshape(-1, 1)
    return _finish(X, group, y, probs)


def make_synthetic(kind, params=None, rng=None) -> FiniteSupportDistribution:
    """Build a named synthetic distribution.

    ``two-gaussian-grid``, ``lowerbound-adversarial`` and ``tabular-manual``
    are deterministic; ``random-atoms`` draws from ``rng``.
    """
    params = dict(params or {})
    try:
        if kind == "two-gaussian-grid":
            return two_gaussian_grid(**params)
        if kind == "lowerbound-adversarial":
            return lowerbound_adversarial(**params)
        if kind == "tabular-manual":
            return tabular_manual(params.get("atoms", ()))
        if kind == "random-atoms":
            return random_atoms(rng=rng, **params)
    except TypeError as exc:
        raise SpecError(f"bad parameters for {kind}: {exc}") from exc
    raise SpecError(f"unknown synthetic kind {kind!r}; expected one of {SYNTH_KINDS}")
