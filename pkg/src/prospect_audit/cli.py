"""Command-line interface.

Exit codes: 0 success, 2 validation error, 3 IO error, 4 size-cap error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

from .bounds import (
    BOUND_IDS,
    BoundQuery,
    concentration_bound,
    discrepancy_tail,
    evaluate,
    falsify_bound,
)
from .core import RandomSource
from .datasets import DatasetSchema, load_dataset, save_distribution, write_distribution
from .dims import (
    DEFAULT_CAP,
    load_concept_class,
    max_vc_witnesses,
    sp_dimension,
    sp_growth_table,
    sp_shatter_check,
    vc_dimension,
)
from .epo import epo_audit
from .exceptions import AuditError, IOFailure, QueryError
from .experiment import (
    ExperimentConfig,
    build_strategic,
    convergence_check,
    emit_report,
    load_config,
    run_experiment,
)
from .properties import PropertySpec
from .prospect import CSV_FIELDS, estimate_ratio, estimate_ratio_split, run_concentration_experiment
from .strategic import FamilySpec, StrategicClass, sample_class
from .synthetic import SYNTH_KINDS, make_synthetic

EXIT_OK, EXIT_VALIDATION, EXIT_IO, EXIT_SIZE = 0, 2, 3, 4
ALL_BOUNDS = BOUND_IDS + ("discrepancy", "concentration")


def _csv_list(text, cast=str):
    return [cast(t) for t in text.split(",") if t.strip()] if text else None


def _add_data_args(p):
    p.add_argument("--data", required=True, help="CSV file with a header row")
    p.add_argument("--group-col", default="group")
    p.add_argument("--label-col", default="label", help="black-box label column")
    p.add_argument("--true-label-col", default=None, help="ground-truth labels (expected-risk)")
    p.add_argument("--features", default=None, help="comma-separated feature columns (default: all others)")
    p.add_argument("--strategic", default="linear-threshold", help="family kind or a JSON file of hypotheses")
    p.add_argument("--n", type=int, default=50, help="hypotheses drawn from the family")
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)


def _strategic_spec(value):
    if value.endswith(".json") or Path(value).is_file():
        return {"explicit": value}
    return {"kind": value}


def _load(args):
    schema = DatasetSchema(args.group_col, args.label_col, _csv_list(args.features), args.true_label_col)
    s = load_dataset(args.data, schema)
    spec = build_strategic(_strategic_spec(args.strategic), s.n_features, args.n)
    return s, spec, sample_class(spec, RandomSource(args.seed))


def _emit(text, out):
    if out:
        try:
            Path(out).write_text(text, encoding="utf-8")
        except OSError as exc:
            raise IOFailure(f"cannot write: {exc.strerror}", out) from exc
    else:
        sys.stdout.write(text)


def cmd_audit(args):
    s, spec, hyps = _load(args)
    res = epo_audit(spec, s, PropertySpec(args.property), args.epsilon, hypotheses=hyps)
    out = res.to_dict()
    if not args.table:
        out.pop("table")
    out.update(property=PropertySpec(args.property).kind, m0=s.m0, m1=s.m1)
    _emit(json.dumps(out, indent=2) + "\n", args.out)


def cmd_ratio(args):
    s, _, hyps = _load(args)
    fn = estimate_ratio_split if args.split_per_hypothesis else estimate_ratio
    est = fn(hyps, s, args.epsilon, args.center)
    out = {
        "n": est.n,
        "m0": est.m0,
        "m1": est.m1,
        "epsilon": est.epsilon,
        "center": est.center,
        "r_hat": est.r_hat,
        "prospect_ids": [i for i, b in zip(est.ids, est.indicators) if b],
    }
    _emit(json.dumps(out, indent=2) + "\n", args.out)


def cmd_sp_dim(args):
    cls = load_concept_class(args.concepts)
    dom = cls.domain
    sp = sp_dimension(cls, cap=args.cap, mode=args.mode, samples=args.samples, rng=args.seed)
    s0 = dom.mask(_csv_list(args.s0)) if args.s0 else sp.s0
    s1 = dom.mask(_csv_list(args.s1)) if args.s1 else sp.s1
    rows = [
        ("points", len(dom)),
        ("concepts", len(cls)),
        ("trace_count", sp.count),
        ("sp_dimension", repr(sp.value)),
        ("sp_dimension_exact", int(sp.exact)),
        ("sp_witness_s0", " ".join(dom.members(sp.s0))),
        ("sp_witness_s1", " ".join(dom.members(sp.s1))),
    ]
    if s0 or s1:
        chk = sp_shatter_check(cls, s0, s1)
        rows += [
            ("shatter_s0", " ".join(dom.members(s0))),
            ("shatter_s1", " ".join(dom.members(s1))),
            ("shatter_count", chk.count),
            ("shatter_target", chk.target),
            ("sp_shattered", int(chk.shattered)),
            ("shatter_reason", chk.reason),
        ]
    if len(dom) <= args.cap:
        rows += [("vc_dimension", vc_dimension(cls, args.cap))]
        rows += [("vc_witness", " ".join(dom.members(max_vc_witnesses(cls, args.cap)[0])))]
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(("metric", "value"))
    w.writerows(rows)
    if args.growth:
        sys.stdout.write("\n")
        w.writerow(("m0", "m1", "sp_growth"))
        w.writerows(sp_growth_table(cls))


_QUERY_FIELDS = ("epsilon", "delta", "class_size", "sp_dim", "alpha", "m0", "m1", "n", "upsilon", "tau")
_INT_FIELDS = ("class_size", "m0", "m1", "n")


def _query(values):
    kw = {}
    for k in _QUERY_FIELDS:
        v = values.get(k)
        if v is None or v == "":
            continue
        try:
            kw[k] = int(v) if k in _INT_FIELDS else float(v)
        except ValueError:
            raise QueryError(f"bad value {v!r} for {k}") from None
    return BoundQuery(**kw)


def _bound_row(bound_id, q):
    if bound_id == "discrepancy":
        q.require("m0", "m1", "epsilon")
        v = discrepancy_tail(q.m0, q.m1, q.epsilon)
        return {"bound": bound_id, "value": repr(v), "raw": repr(v), "vacuous": 0}
    if bound_id == "concentration":
        q.require("n", "m0", "m1", "upsilon", "tau")
        v = concentration_bound(q.n, q.m0, q.m1, q.upsilon, q.tau)
        return {"bound": bound_id, "value": repr(v), "raw": repr(v), "vacuous": int(v <= 0)}
    r = evaluate(bound_id, q)
    return {"bound": bound_id, "value": r.value, "raw": repr(r.raw), "vacuous": int(r.vacuous)}


def cmd_bounds(args):
    if args.grid:
        try:
            with open(args.grid, newline="", encoding="utf-8") as fh:
                grid = [_query(row) for row in csv.DictReader(fh)]
        except OSError as exc:
            raise IOFailure(f"cannot read grid: {exc.strerror}", args.grid) from exc
    else:
        grid = [_query(vars(args))]
    if args.falsify:
        rep = falsify_bound(args.bound, grid, args.falsify, RandomSource(args.seed))
        rows = [c.to_row() for c in rep.cells]
    else:
        rows = [dict(q.to_dict(), **_bound_row(args.bound, q)) for q in grid]
    header = list(dict.fromkeys(k for r in rows for k in r))
    if args.out:
        fh = open(args.out, "w", newline="", encoding="utf-8")
    else:
        fh = sys.stdout
    try:
        w = csv.DictWriter(fh, header, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    finally:
        if fh is not sys.stdout:
            fh.close()


def cmd_concentration(args):
    truth = make_synthetic(args.synth, json.loads(args.synth_params) if args.synth_params else {})
    family = FamilySpec(args.family, truth.X.shape[1])
    res = run_concentration_experiment(
        args.n, args.m0, args.m1, args.epsilon, args.upsilon, args.tau, args.trials,
        truth, StrategicClass.sampled(family, args.n), RandomSource(args.seed),
        split_per_hypothesis=args.split_per_hypothesis, center=args.center,
    )
    if args.out:
        with open(args.out, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_FIELDS)
            w.writerows((t, repr(r), repr(lo), repr(hi), ok) for t, r, lo, hi, ok in res.rows)
    sys.stdout.write(json.dumps(res.to_dict(), indent=2) + "\n")


def cmd_experiment(args):
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    strategic = _strategic_spec(args.strategic) if args.strategic else None
    cfg = cfg.override(
        seeds=(args.seed,) if args.seed is not None else None,
        budgets=tuple(_csv_list(args.budget, int)) if args.budget else None,
        epsilon=args.epsilon,
        property=args.property,
        strategic=strategic,
        output_dir=args.out,
        timing=False if args.no_timing else None,
    )
    report = run_experiment(cfg)
    paths = emit_report(report, cfg.output_dir)
    summary = {"convergence": convergence_check(report), "files": {k: str(v) for k, v in paths.items()}}
    sys.stdout.write(json.dumps(summary, indent=2) + "\n")


def _param(text):
    key, sep, value = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError("expected key=value")
    try:
        return key, json.loads(value)
    except json.JSONDecodeError:
        return key, value


def cmd_synth(args):
    params = dict(args.param or [])
    dist = make_synthetic(args.kind, params, RandomSource(args.seed))
    if args.kind == "lowerbound-adversarial":
        print("note: atom x1' is a normalising complement, not one of the construction's points", file=sys.stderr)
    if args.out:
        save_distribution(dist, args.out)
    else:
        write_distribution(dist, sys.stdout)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="prospect-audit", description="Black-box group-fairness auditing tools.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("audit", help="run the EPO oracle on a dataset")
    _add_data_args(p)
    p.add_argument("--property", default="sp", help="sp or risk")
    p.add_argument("--table", action="store_true", help="include the per-hypothesis table")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("ratio", help="estimate the prospect ratio on a dataset")
    _add_data_args(p)
    p.add_argument("--center", type=float, default=None, help="known reference SP (default: labels)")
    p.add_argument("--split-per-hypothesis", action="store_true")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_ratio)

    p = sub.add_parser("sp-dim", help="SP and VC dimension of a concept-class file")
    p.add_argument("concepts", help="concept-class text file")
    p.add_argument("--cap", type=int, default=DEFAULT_CAP)
    p.add_argument("--mode", choices=("exact", "random"), default="exact")
    p.add_argument("--samples", type=int, default=4096)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--s0", default=None, help="comma-separated group-0 ids to test for SP-shattering")
    p.add_argument("--s1", default=None, help="comma-separated group-1 ids to test for SP-shattering")
    p.add_argument("--growth", action="store_true", help="append the sp_growth table")
    p.set_defaults(func=cmd_sp_dim)

    p = sub.add_parser("bounds", help="evaluate or falsify a bound")
    p.add_argument("--bound", required=True, choices=ALL_BOUNDS)
    for name in _QUERY_FIELDS:
        p.add_argument("--" + name.replace("_", "-"), dest=name, default=None)
    p.add_argument("--grid", default=None, help="CSV of queries, one per row")
    p.add_argument("--falsify", type=int, default=0, metavar="TRIALS", help="Monte Carlo trials per query")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("concentration", help="Monte Carlo coverage of the prospect-ratio interval")
    p.add_argument("--n", type=int, default=50)
    p.add_argument("--m0", type=int, default=500)
    p.add_argument("--m1", type=int, default=500)
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--upsilon", type=float, default=0.05)
    p.add_argument("--tau", type=float, default=0.1)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--synth", default="two-gaussian-grid", choices=SYNTH_KINDS)
    p.add_argument("--synth-params", default=None, help="JSON object of generator parameters")
    p.add_argument("--family", default="linear-threshold")
    p.add_argument("--center", choices=("blackbox", "oracle"), default="blackbox")
    p.add_argument("--split-per-hypothesis", action="store_true")
    p.add_argument("--out", default=None, help="per-trial CSV")
    p.set_defaults(func=cmd_concentration)

    p = sub.add_parser("experiment", help="budget sweep from a TOML config")
    p.add_argument("--config", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--budget", default=None, help="comma-separated budgets")
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--property", default=None)
    p.add_argument("--strategic", default=None)
    p.add_argument("--out", default=None, help="output directory")
    p.add_argument("--no-timing", action="store_true", help="omit wall-clock fields")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("synth", help="write a synthetic distribution as CSV")
    p.add_argument("--kind", required=True, choices=SYNTH_KINDS)
    p.add_argument("--param", action="append", type=_param, help="key=value (JSON values allowed)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        args.func(args)
    except AuditError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
