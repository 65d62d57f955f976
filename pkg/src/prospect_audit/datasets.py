"""CSV ingestion and export of grouped samples and finite distributions."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import FiniteSupportDistribution, GroupedSample
from .exceptions import IOFailure, ParseError


@dataclass(frozen=True)
class DatasetSchema:
    """Column roles. ``features=None`` means every other column, in file order."""

    group_col: str = "group"
    label_col: str = "label"
    features: tuple | None = None
    true_label_col: str | None = None

    def resolve(self, header) -> tuple:
        roles = [self.group_col, self.label_col] + ([self.true_label_col] if self.true_label_col else [])
        for col in roles + list(self.features or ()):
            if col not in header:
                raise ParseError(f"missing column {col!r}", row=1, column=col)
        if len(set(header)) != len(header):
            raise ParseError("duplicate column names in header", row=1)
        if self.features is not None:
            feats = tuple(self.features)
        else:
            feats = tuple(c for c in header if c not in roles)
        if not feats:
            raise ParseError("no feature columns", row=1)
        return feats


def _binary(cell, row, col):
    s = cell.strip()
    if s not in ("0", "1"):
        raise ParseError(f"expected 0 or 1, found {cell!r}", row=row, column=col)
    return int(s)


def _real(cell, row, col):
    try:
        v = float(cell.strip())
    except ValueError:
        raise ParseError(f"malformed number {cell!r}", row=row, column=col) from None
    if not math.isfinite(v):
        raise ParseError(f"non-finite number {cell!r}", row=row, column=col)
    return v


def parse_rows(lines, schema: DatasetSchema) -> GroupedSample:
    """Parse CSV text lines (header first) into a sample, keeping row order.

    Numbers use a dot decimal separator regardless of locale. Row numbers
    in errors count the header as row 1.
    """
    reader = csv.reader(lines)
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise ParseError("file is empty; a header row is required") from None
    feats = schema.resolve(header)
    pos = {c: k for k, c in enumerate(header)}
    X, g, y, t = [], [], [], []
    for row, cells in enumerate(reader, start=2):
        if not cells:
            continue
        if len(cells) != len(header):
            raise ParseError(f"expected {len(header)} cells, found {len(cells)}", row=row)
        X.append([_real(cells[pos[c]], row, c) for c in feats])
        g.append(_binary(cells[pos[schema.group_col]], row, schema.group_col))
        y.append(_binary(cells[pos[schema.label_col]], row, schema.label_col))
        if schema.true_label_col:
            t.append(_binary(cells[pos[schema.true_label_col]], row, schema.true_label_col))
    X = np.array(X, dtype=float).reshape(len(X), len(feats))
    return GroupedSample(X, np.array(g, dtype=np.int8), np.array(y, dtype=np.int8), t if schema.true_label_col else None)


def load_dataset(path, schema: DatasetSchema | None = None) -> GroupedSample:
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            return parse_rows(fh, schema or DatasetSchema())
    except OSError as exc:
        raise IOFailure(f"cannot read dataset: {exc.strerror}", path) from exc


def feature_names(sample: GroupedSample, schema: DatasetSchema | None = None) -> tuple:
    if schema is not None and schema.features is not None:
        return tuple(schema.features)
    return tuple(f"x{k}" for k in range(sample.n_features))


def _open_for_write(path):
    path = Path(path)
    try:
        if path.parent and not path.parent.exists():
            path.parent.mkdir(parents=True)
        return path.open("w", newline="", encoding="utf-8")
    except OSError as exc:
        raise IOFailure(f"cannot write: {exc.strerror}", path) from exc


def save_dataset(sample: GroupedSample, path, schema: DatasetSchema | None = None) -> Path:
    """Write ``sample`` as CSV; floats use ``repr`` so a reload is exact."""
    schema = schema or DatasetSchema()
    feats = feature_names(sample, schema)
    header = list(feats) + [schema.group_col, schema.label_col]
    if schema.true_label_col and sample.y_true is not None:
        header.append(schema.true_label_col)
    with _open_for_write(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for k in range(len(sample)):
            row = [repr(float(v)) for v in sample.X[k]] + [int(sample.group[k]), int(sample.y[k])]
            if len(header) > len(feats) + 2:
                row.append(int(sample.y_true[k]))
            w.writerow(row)
    return Path(path)


def write_distribution(dist: FiniteSupportDistribution, fh) -> None:
    """Atoms as CSV rows ``x0..x{d-1}, group, label, p, name``."""
    d = dist.X.shape[1]
    w = csv.writer(fh, lineterminator="\n")
    w.writerow([f"x{k}" for k in range(d)] + ["group", "label", "p", "name"])
    for k in range(len(dist)):
        name = dist.names[k] if dist.names else ""
        w.writerow(
            [repr(float(v)) for v in dist.X[k]]
            + [int(dist.group[k]), int(dist.y[k]), repr(float(dist.probs[k])), name]
        )


def save_distribution(dist: FiniteSupportDistribution, path) -> Path:
    with _open_for_write(path) as fh:
        write_distribution(dist, fh)
    return Path(path)


def load_distribution(path) -> FiniteSupportDistribution:
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise IOFailure(f"cannot read distribution: {exc.strerror}", path) from exc
    if not rows:
        raise ParseError("file is empty; a header row is required")
    header = rows[0]
    for col in ("group", "label", "p"):
        if col not in header:
            raise ParseError(f"missing column {col!r}", row=1, column=col)
    feats = [c for c in header if c.startswith("x")]
    pos = {c: k for k, c in enumerate(header)}
    X, g, y, p, names = [], [], [], [], []
    for row, cells in enumerate(rows[1:], start=2):
        if not cells:
            continue
        X.append([_real(cells[pos[c]], row, c) for c in feats])
        g.append(_binary(cells[pos["group"]], row, "group"))
        y.append(_binary(cells[pos["label"]], row, "label"))
        p.append(_real(cells[pos["p"]], row, "p"))
        names.append(cells[pos["name"]] if "name" in pos else "")
    return FiniteSupportDistribution(X, g, y, p, tuple(names) if any(names) else ())
