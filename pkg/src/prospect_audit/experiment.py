"""Experiment configuration, the budget-sweep runner and report files."""

from __future__ import annotations

import csv
import json
import logging
import math
import sys
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import __version__
from .core import FiniteSupportDistribution, GroupedSample, RandomSource, draw_sample
from .datasets import DatasetSchema, load_dataset
from .epo import epo_audit, true_sps
from .exceptions import ConfigError, IOFailure, ReportVersionError, SpecError
from .hypotheses import hypothesis_from_dict, predict_matrix
from .properties import ALIASES, blackbox_true_sp, sp_from_predictions
from .prospect import estimate_ratio, true_ratio
from .strategic import FamilySpec, LogisticBlackBox, StrategicClass, sample_class
from .synthetic import make_synthetic

log = logging.getLogger(__name__)

SCHEMA_VERSION = "1.0"
THRESHOLD = 0.005


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to rerun a budget sweep.

    ``strategic`` is a family mapping (``kind``, optional ``forest_size``,
    ``mlp_widths``, ``params``) or ``{"explicit": path}`` naming a JSON list
    of hypotheses. ``blackbox`` optionally retrains the labels with the
    logistic black box (``{"train": "logreg", "l2": ..., "train_size": ...}``).
    """

    mode: str = "synthetic"
    property: str = "statistical-parity"
    budgets: tuple = (125, 250, 500, 1000)
    epsilon: float = 0.1
    n: int = 50
    seeds: tuple = tuple(range(20))
    trials: int = 1000
    threshold: float = THRESHOLD
    output_dir: str = "results"
    timing: bool = True
    synthetic: dict = field(default_factory=lambda: {"kind": "two-gaussian-grid", "params": {}})
    dataset: dict = field(default_factory=dict)
    strategic: dict = field(default_factory=lambda: {"kind": "linear-threshold"})
    blackbox: dict = field(default_factory=lambda: {"train": "labels"})

    def __post_init__(self):
        prop = ALIASES.get(self.property, self.property)
        if prop != "statistical-parity":
            raise ConfigError("experiments audit statistical parity only")
        if self.mode not in ("synthetic", "dataset"):
            raise ConfigError("mode must be 'synthetic' or 'dataset'")
        budgets = tuple(int(b) for b in self.budgets)
        if not budgets or any(b < 2 for b in budgets):
            raise ConfigError("budgets must be a non-empty list of sizes >= 2")
        if any(a >= b for a, b in zip(budgets, budgets[1:])):
            raise ConfigError("budgets must be strictly increasing")
        seeds = (self.seeds,) if isinstance(self.seeds, int) else tuple(int(s) for s in self.seeds)
        if not seeds or len(set(seeds)) != len(seeds):
            raise ConfigError("seeds must be a non-empty list of distinct integers")
        if not 0 < self.epsilon <= 1:
            raise ConfigError("epsilon must lie in (0, 1]")
        if int(self.n) < 1 or int(self.trials) < 1:
            raise ConfigError("n and trials must be positive")
        if self.mode == "dataset" and "path" not in self.dataset:
            raise ConfigError("dataset mode needs dataset.path")
        object.__setattr__(self, "property", prop)
        object.__setattr__(self, "budgets", budgets)
        object.__setattr__(self, "seeds", seeds)
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "trials", int(self.trials))

    def to_dict(self):
        return json.loads(json.dumps(asdict(self)))

    def override(self, **changes) -> "ExperimentConfig":
        changes = {k: v for k, v in changes.items() if v is not None}
        try:
            return replace(self, **changes)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc


def config_from_mapping(data: dict) -> ExperimentConfig:
    known = set(ExperimentConfig.__dataclass_fields__)
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    data = dict(data)
    if isinstance(data.get("seeds"), int):
        data["seeds"] = tuple(range(data["seeds"]))
    try:
        return ExperimentConfig(**data)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc


def load_config(path) -> ExperimentConfig:
    """Read a TOML experiment file. An integer ``seeds`` means ``range(seeds)``."""
    path = Path(path)
    try:
        with path.open("rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise IOFailure(f"cannot read config: {exc.strerror}", path) from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"bad config file {path}: {exc}") from exc
    return config_from_mapping(data)


# sources


def load_explicit_class(path) -> list:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise IOFailure(f"cannot read class file: {exc.strerror}", path) from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"class file {path} is not valid JSON: {exc}") from exc
    if isinstance(data, dict):
        data = data.get("hypotheses", [])
    return [hypothesis_from_dict(d) for d in data]


def build_strategic(spec: dict, dimension: int, n: int) -> StrategicClass:
    spec = dict(spec)
    if "explicit" in spec:
        return StrategicClass.explicit(load_explicit_class(spec["explicit"]))
    try:
        family = FamilySpec(
            spec.get("kind", "linear-threshold"),
            spec.get("dimension", dimension),
            spec.get("forest_size", 15),
            tuple(spec.get("mlp_widths", (4,))),
            spec.get("params", {}),
        )
    except SpecError as exc:
        raise ConfigError(str(exc)) from exc
    return StrategicClass.sampled(family, spec.get("n", n))


def _relabel_with_logreg(X, train_X, train_y, bb):
    model = LogisticBlackBox(bb.get("l2", 0.0), bb.get("steps", 500), bb.get("lr", 0.5))
    model.fit(train_X, train_y)
    return model.predict(X)


@dataclass(frozen=True)
class Source:
    """Either a finite distribution (synthetic) or a fixed dataset."""

    truth: FiniteSupportDistribution | None = None
    data: GroupedSample | None = None

    @property
    def n_features(self):
        return (self.truth.X if self.truth is not None else self.data.X).shape[1]


def resolve_source(cfg: ExperimentConfig) -> Source:
    bb = dict(cfg.blackbox)
    train = bb.get("train", "labels")
    if train not in ("labels", "logreg"):
        raise ConfigError("blackbox.train must be 'labels' or 'logreg'")
    if cfg.mode == "synthetic":
        spec = dict(cfg.synthetic)
        truth = make_synthetic(spec.get("kind", "two-gaussian-grid"), spec.get("params", {}), RandomSource(0, (1,)))
        if train == "logreg":
            s = draw_sample(truth, int(bb.get("train_size", 2000)), RandomSource(0, (2,)))
            y = _relabel_with_logreg(truth.X, s.X, s.y, bb)
            truth = FiniteSupportDistribution(truth.X, truth.group, y, truth.probs, truth.names)
        return Source(truth=truth)
    ds = dict(cfg.dataset)
    feats = ds.get("features")
    schema = DatasetSchema(ds.get("group_col", "group"), ds.get("label_col", "label"), tuple(feats) if feats else None)
    data = load_dataset(ds["path"], schema)
    if cfg.budgets[-1] > len(data):
        raise ConfigError(f"budget {cfg.budgets[-1]} exceeds the {len(data)} rows available")
    if train == "logreg":
        data = data.with_labels(_relabel_with_logreg(data.X, data.X, data.y, bb))
    return Source(data=data)


# runner


@dataclass
class AuditReport:
    metadata: dict
    records: list
    prospect_tables: dict
    curves: dict

    def to_dict(self):
        return {
            "schema_version": SCHEMA_VERSION,
            "metadata": self.metadata,
            "records": self.records,
            "prospect_tables": self.prospect_tables,
            "curves": self.curves,
        }


def _reference(cfg, source, hyps):
    """Per-hypothesis reference SP, the black-box reference and the true ratio."""
    if source.truth is not None:
        sps = true_sps(hyps, source.truth)
        star = blackbox_true_sp(source.truth)
        ratio = true_ratio(hyps, source.truth, star, cfg.epsilon)
    else:
        d = source.data
        sps = np.atleast_1d(sp_from_predictions(predict_matrix(hyps, d.X), d.group))
        star = sp_from_predictions(d.y, d.group)
        ratio = estimate_ratio(hyps, d, cfg.epsilon).r_hat
    return sps, star, ratio


def _nested_draw(cfg, source, rng):
    top = cfg.budgets[-1]
    if source.truth is not None:
        return draw_sample(source.truth, top, rng)
    order = rng.generator().permutation(len(source.data))
    return source.data.take(order[:top])


def run_experiment(cfg: ExperimentConfig, source: Source | None = None) -> AuditReport:
    """Audit at every (budget, seed) cell.

    Per seed, the strategic class comes from stream ``(seed, 0)`` and one
    draw of the largest budget from stream ``(seed, 1)``; smaller budgets
    audit prefixes of that draw. Estimation error compares the chosen
    model's empirical SP with its reference SP (exact under the synthetic
    truth, full-data SP in dataset mode). Timing covers the audit and ratio
    calls only.
    """
    source = source or resolve_source(cfg)
    spec = build_strategic(cfg.strategic, source.n_features, cfg.n)
    records, tables = [], {}
    for seed in cfg.seeds:
        src = RandomSource(seed)
        hyps = sample_class(spec, src.child(0))
        ref_sps, star, ref_ratio = _reference(cfg, source, hyps)
        pool = _nested_draw(cfg, source, src.child(1))
        for budget in cfg.budgets:
            s = pool.head(budget)
            start = time.perf_counter_ns()
            res = epo_audit(spec, s, cfg.property, cfg.epsilon, hypotheses=hyps)
            ratio = estimate_ratio(hyps, s, cfg.epsilon)
            elapsed = (time.perf_counter_ns() - start) / 1e6
            k = res.best_index
            rec = {
                "budget": budget,
                "seed": seed,
                "best": res.best,
                "sp_estimate": res.estimate,
                "reference_sp": float(ref_sps[k]),
                "estimation_error": abs(res.estimate - float(ref_sps[k])),
                "blackbox_sp_hat": res.reference,
                "blackbox_sp_reference": float(star),
                "audit_error": abs(res.estimate - float(star)),
                "r_hat": ratio.r_hat,
                "reference_ratio": ref_ratio,
                "ratio_error": abs(ratio.r_hat - ref_ratio),
                "prospect_size": len(res.prospect_ids),
                "wall_time_ms": elapsed if cfg.timing else None,
                "per_sample_ms": elapsed / budget if cfg.timing else None,
            }
            records.append(rec)
        tables[str(seed)] = list(res.prospect_ids)
    metadata = {
        "config": cfg.to_dict(),
        "versions": {"prospect_audit": __version__, "numpy": np.__version__, "python": sys.version.split()[0]},
        "seeds": list(cfg.seeds),
        "reference": "synthetic-truth" if source.truth is not None else "full-dataset",
    }
    return AuditReport(metadata, records, tables, summarize(records, cfg))


def summarize(records, cfg) -> dict:
    """Mean and standard deviation per budget for the error curves."""
    curves = {}
    for name in ("estimation_error", "audit_error", "ratio_error", "r_hat"):
        rows = []
        for b in cfg.budgets:
            vals = np.array([r[name] for r in records if r["budget"] == b], dtype=float)
            rows.append({"budget": b, "mean": float(vals.mean()), "std": float(vals.std()), "count": len(vals)})
        curves[name] = rows
    return curves


def convergence_check(report: AuditReport, factor=2.5) -> dict:
    """Compare the largest-budget mean error with a ``C/sqrt(m)`` fit at the smallest budget."""
    rows = report.curves["estimation_error"]
    first, last = rows[0], rows[-1]
    predicted = first["mean"] * math.sqrt(first["budget"] / last["budget"])
    return {
        "first_budget": first["budget"],
        "last_budget": last["budget"],
        "first_mean": first["mean"],
        "last_mean": last["mean"],
        "predicted": predicted,
        "ok": last["mean"] <= factor * predicted,
    }


# report files


RECORD_CSV_FIELDS = (
    "budget", "seed", "best", "sp_estimate", "reference_sp", "estimation_error",
    "blackbox_sp_hat", "blackbox_sp_reference", "audit_error", "r_hat",
    "reference_ratio", "ratio_error", "prospect_size",
)


def _fmt(v):
    return repr(v) if isinstance(v, float) else str(v)


def _write_csv(path, header, rows):
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([_fmt(v) for v in row])
    except OSError as exc:
        raise IOFailure(f"cannot write: {exc.strerror}", path) from exc
    return Path(path)


def emit_report(report: AuditReport, out_dir) -> dict:
    """Write ``report.json``, ``records.csv`` and one CSV per figure panel.

    CSVs carry no timing columns, so they are byte-identical across reruns of
    the same config; ``report.json`` is too when timing is disabled.
    """
    out = Path(out_dir)
    if not out.exists():
        try:
            out.mkdir(parents=True)
        except OSError as exc:
            raise IOFailure(f"cannot create output directory: {exc.strerror}", out) from exc
        log.info("created output directory %s", out)
    paths = {}
    body = json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"
    try:
        (out / "report.json").write_text(body, encoding="utf-8")
    except OSError as exc:
        raise IOFailure(f"cannot write: {exc.strerror}", out / "report.json") from exc
    paths["report"] = out / "report.json"
    paths["records"] = _write_csv(
        out / "records.csv", RECORD_CSV_FIELDS, ([r[k] for k in RECORD_CSV_FIELDS] for r in report.records)
    )
    threshold = report.metadata["config"]["threshold"]
    for name in ("estimation_error", "ratio_error"):
        rows = report.curves[name]
        paths[name] = _write_csv(
            out / f"{name}.csv",
            ("budget", "mean", "std", "count", "threshold"),
            ((r["budget"], r["mean"], r["std"], r["count"], threshold) for r in rows),
        )
    return paths


def read_report(path) -> dict:
    """Load a report, rejecting schema major versions other than ours."""
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise IOFailure(f"cannot read report: {exc.strerror}", path) from exc
    except json.JSONDecodeError as exc:
        raise ReportVersionError(f"report {path} is not valid JSON: {exc}") from exc
    version = str(data.get("schema_version", ""))
    if version.split(".")[0] != SCHEMA_VERSION.split(".")[0]:
        raise ReportVersionError(f"unsupported report schema version {version!r}")
    return data
