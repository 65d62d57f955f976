"""Input validation helpers shared by the estimators and the functional API."""

import numpy as np
from sklearn.utils.validation import check_array, check_consistent_length

from .exceptions import DataError, GroupError


def check_features(X, n_features=None, allow_empty=False):
    """Return ``X`` as a 2-D float array with finite entries.

    A 1-D input is read as a single feature vector.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if X.ndim != 2:
        raise DataError(f"expected a 2-D feature array, got shape {X.shape}")
    if X.shape[1] < 1:
        raise DataError("feature vectors need at least one entry")
    if X.shape[0] == 0:
        if not allow_empty:
            raise DataError("empty feature array")
    else:
        try:
            X = check_array(X, dtype=float, ensure_all_finite=True)
        except ValueError as exc:
            raise DataError(str(exc)) from exc
    if n_features is not None and X.shape[1] != n_features:
        raise DataError(f"expected {n_features} features, got {X.shape[1]}")
    return X


def check_binary(values, name="labels"):
    """Return ``values`` as an int8 vector, rejecting anything outside {0, 1}."""
    arr = np.asarray(values)
    if arr.ndim != 1:
        arr = arr.reshape(-1)
    if arr.size and not np.isin(arr, (0, 1)).all():
        bad = arr[~np.isin(arr, (0, 1))][0]
        raise DataError(f"{name} must be 0 or 1, found {bad!r}")
    return arr.astype(np.int8)


def check_grouped(X, y, groups, allow_empty=False):
    """Validate the ``(X, y, groups)`` triple used by the estimators."""
    X = check_features(X, allow_empty=allow_empty)
    y = check_binary(y, "labels")
    groups = check_binary(groups, "groups")
    try:
        check_consistent_length(X, y, groups)
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    return X, y, groups


def require_both_groups(groups):
    """Raise :class:`GroupError` unless both group tags occur."""
    m1 = int(np.count_nonzero(groups))
    m0 = int(len(groups) - m1)
    if m0 == 0 or m1 == 0:
        raise GroupError(f"statistical parity needs both groups non-empty (m0={m0}, m1={m1})")
    return m0, m1
