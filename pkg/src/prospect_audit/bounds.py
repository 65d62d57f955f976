"""Closed-form sample-complexity and tail bounds, and Monte Carlo checks of them.

All logarithms are natural. Sample-size evaluators return an ``int``; the
``evaluate`` entry point also reports the unrounded value and whether the
bound is vacuous (raw value below 1, clamped to 0).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace

import numpy as np

from .core import as_random_source, draw_sample
from .exceptions import QueryError

BOUND_IDS = ("weak-finite", "weak-sp-upper", "weak-sp-lower", "strong-finite")
FALSIFIABLE = ("weak-finite", "discrepancy", "concentration")
FLOOR_TOL = 1e-9  # keeps floor(3.2 / 3.2) at 1 despite rounding


@dataclass(frozen=True)
class BoundQuery:
    epsilon: float | None = None
    delta: float | None = None
    class_size: int | None = None
    sp_dim: float | None = None
    alpha: float | None = None
    m0: int | None = None
    m1: int | None = None
    n: int | None = None
    upsilon: float | None = None
    tau: float | None = None

    def require(self, *names):
        missing = [k for k in names if getattr(self, k) is None]
        if missing:
            raise QueryError(f"bound query is missing {', '.join(missing)}")

    def to_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self) if getattr(self, f.name) is not None}


@dataclass(frozen=True)
class BoundValue:
    bound: str
    value: int
    raw: float
    vacuous: bool


def _open_unit(name, v):
    if not 0 < v < 1:
        raise QueryError(f"{name} must lie in (0, 1), got {v}")


def _count(name, v, low=1):
    if int(v) != v or v < low:
        raise QueryError(f"{name} must be an integer >= {low}, got {v}")
    return int(v)


def _clamp(bound, raw, rounder=math.ceil):
    if raw < 1:
        return BoundValue(bound, 0, raw, True)
    return BoundValue(bound, int(rounder(raw)), raw, False)


def _weak_finite(q):
    q.require("epsilon", "delta", "class_size")
    _open_unit("epsilon", q.epsilon)
    _open_unit("delta", q.delta)
    size = _count("class_size", q.class_size)
    return _clamp("weak-finite", 18 / q.epsilon**2 * math.log(8 * size / q.delta))


def _weak_sp_upper(q):
    q.require("epsilon", "delta", "sp_dim", "alpha")
    _open_unit("epsilon", q.epsilon)
    _open_unit("delta", q.delta)
    _open_unit("alpha", q.alpha)
    if q.sp_dim < 0:
        raise QueryError("sp_dim must be non-negative")
    eps2 = q.epsilon**2
    inner = max(math.log(2 / q.delta), 2 * q.sp_dim * math.log(32 * math.e / eps2))
    return _clamp("weak-sp-upper", 32 / (q.alpha * (1 - q.alpha) * eps2) * inner)


def _weak_sp_lower(q):
    q.require("epsilon", "sp_dim")
    if not 0 < q.epsilon <= 1:
        raise QueryError(f"epsilon must lie in (0, 1], got {q.epsilon}")
    if q.sp_dim < 0:
        raise QueryError("sp_dim must be non-negative")
    raw = q.sp_dim / (32 * q.epsilon)
    return _clamp("weak-sp-lower", raw, lambda r: math.floor(r + FLOOR_TOL))


def _strong_finite(q):
    q.require("epsilon", "delta", "class_size")
    _open_unit("epsilon", q.epsilon)
    _open_unit("delta", q.delta)
    size = _count("class_size", q.class_size)
    lg = math.log(size / q.delta)
    raw = max(lg / q.epsilon**2, lg / math.log(1 / q.epsilon**2))
    return _clamp("strong-finite", raw)


_EVALUATORS = {
    "weak-finite": _weak_finite,
    "weak-sp-upper": _weak_sp_upper,
    "weak-sp-lower": _weak_sp_lower,
    "strong-finite": _strong_finite,
}


def evaluate(bound: str, q: BoundQuery) -> BoundValue:
    try:
        fn = _EVALUATORS[bound]
    except KeyError:
        raise QueryError(f"unknown bound {bound!r}; expected one of {BOUND_IDS}") from None
    return fn(q)


def weak_finite_bound(q: BoundQuery) -> int:
    """``ceil((18/eps^2) ln(8|F|/delta))``."""
    return _weak_finite(q).value


def weak_sp_upper_bound(q: BoundQuery) -> int:
    """``ceil(32/(alpha(1-alpha)eps^2) * max(ln(2/delta), 2 SP ln(32e/eps^2)))``."""
    return _weak_sp_upper(q).value


def weak_sp_lower_bound(q: BoundQuery) -> int:
    """``floor(SP/(32 eps))``, the explicit constant behind the Omega(SP/eps) rate."""
    return _weak_sp_lower(q).value


def strong_finite_bound(q: BoundQuery) -> int:
    """``ceil(max(ln(|F|/delta)/eps^2, ln(|F|/delta)/ln(1/eps^2)))``."""
    return _strong_finite(q).value


def _pair(m0, m1):
    return _count("m0", m0), _count("m1", m1)


def discrepancy_tail(m0: int, m1: int, epsilon: float) -> float:
    """``exp(-2 m0 m1 eps^2 / (m0 + m1))``."""
    m0, m1 = _pair(m0, m1)
    if epsilon < 0:
        raise QueryError("epsilon must be non-negative")
    return math.exp(-2 * m0 * m1 * epsilon**2 / (m0 + m1))


def harmonic_min_check(m0: int, m1: int) -> bool:
    """``min(m0, m1) <= 2 m0 m1 / (m0 + m1)``, checked in exact integers."""
    m0, m1 = _pair(m0, m1)
    ok = min(m0, m1) * (m0 + m1) <= 2 * m0 * m1
    assert ok, (m0, m1)
    return ok


def _one_minus_exp(x):
    return -math.expm1(-x)


def concentration_bound(n: int, m0: int, m1: int, upsilon: float, tau: float) -> float:
    """``(1 - exp(-2 u^2 m0 m1/(n(m0+m1))))^n (1 - exp(-n tau^2))^2``.

    Evaluated through ``expm1``/``log`` so tiny factors keep full relative
    precision. Zero ``upsilon`` or ``tau`` gives 0.
    """
    n = _count("n", n)
    m0, m1 = _pair(m0, m1)
    if upsilon < 0 or tau < 0:
        raise QueryError("upsilon and tau must be non-negative")
    a = _one_minus_exp(2 * upsilon**2 * m0 * m1 / (n * (m0 + m1)))
    b = _one_minus_exp(n * tau**2)
    if a == 0 or b == 0:
        return 0.0
    return math.exp(n * math.log(a) + 2 * math.log(b))


def mc_stderr(p: float, trials: int) -> float:
    """Binomial standard error of a frequency whose true rate is ``p``."""
    p = min(max(p, 0.0), 1.0)
    return math.sqrt(p * (1 - p) / trials)


# Monte Carlo falsification


@dataclass(frozen=True)
class FalsifyCell:
    query: BoundQuery
    trials: int
    frequency: float
    reference: float
    stderr: float
    flagged: bool
    extra: dict = field(default_factory=dict)

    def to_row(self):
        row = self.query.to_dict()
        row.update(
            trials=self.trials,
            frequency=self.frequency,
            reference=self.reference,
            stderr=self.stderr,
            flagged=int(self.flagged),
        )
        row.update(self.extra)
        return row


@dataclass(frozen=True)
class FalsifyReport:
    bound: str
    cells: tuple

    @property
    def flagged(self):
        return [c for c in self.cells if c.flagged]


def _cell(query, trials, failures, reference, extra=None) -> FalsifyCell:
    freq = failures / trials
    se = mc_stderr(reference, trials)
    return FalsifyCell(query, trials, freq, reference, se, freq > reference + 3 * se, extra or {})


def discrepancy_trials(truth, hypothesis, m0, m1, epsilon, trials, rng=None):
    """Number of trials with ``|SP_S(h) - SP(h)| > epsilon`` on grouped draws.

    Each trial draws ``m0`` group-0 and ``m1`` group-1 atoms. Predictions on
    drawn rows are read from ``h``'s predictions on the atoms, which is the
    same thing as evaluating ``h`` on the rows.
    """
    from .properties import true_sp_from_predictions

    src = as_random_source(rng)
    on_atoms = hypothesis.predict(truth.X)
    mu = true_sp_from_predictions(on_atoms, truth)
    rates = []
    for g, m in ((0, m0), (1, m1)):
        idx = src.child(g).generator().choice(len(truth), size=(trials, m), p=truth.conditional(g))
        rates.append(np.count_nonzero(on_atoms[idx] == 1, axis=1) / m)
    gap = np.abs(np.abs(rates[0] - rates[1]) - mu)
    return int(np.count_nonzero(gap > epsilon))


def weak_finite_trials(truth, hypotheses, m, epsilon, trials, rng=None):
    """Number of trials whose EPO pick has excess true audit risk above ``epsilon``.

    Each trial draws ``m`` i.i.d. points, runs the EPO oracle on SP and
    measures ``|SP(best) - SP*| - OPT`` exactly over the atoms, with
    ``OPT = min_f |SP(f) - SP*|``. A draw missing a group counts as a failure.
    """
    from .epo import audit_predictions, true_audit_risk, true_sps
    from .exceptions import GroupError
    from .hypotheses import predict_matrix
    from .properties import blackbox_true_sp

    src = as_random_source(rng)
    P = predict_matrix(hypotheses, truth.X)
    sps = true_sps(hypotheses, truth)
    star = blackbox_true_sp(truth)
    ids = [h.id for h in hypotheses]
    failures = 0
    for t in range(trials):
        s = draw_sample(truth, m, src.child(t))
        try:
            res = audit_predictions(P[:, s.atom_index], s.group, s.y, ids, min(1.0, epsilon))
        except GroupError:
            failures += 1
            continue
        excess, _ = true_audit_risk(res.best_index, sps, star)
        failures += excess > epsilon
    return failures


def _default_truth(kind):
    from .synthetic import make_synthetic

    return make_synthetic(kind)


def falsify_bound(bound_id, grid, trials, rng=None, truth=None, hypothesis=None, class_spec=None) -> FalsifyReport:
    """Check a bound's guarded event by simulation at every grid point.

    ``discrepancy`` cells need ``m0, m1, epsilon`` and compare the frequency
    of ``|SP_S(h) - SP(h)| > eps`` with ``2 exp(-2 m0 m1 eps^2/(m0+m1))``.
    ``weak-finite`` cells need ``epsilon, delta, class_size`` and audit at the
    prescribed sample size, comparing the failure rate with ``delta``.
    ``concentration`` cells need ``n, m0, m1, epsilon, upsilon, tau`` and
    compare the miss rate with one minus the theorem's coverage bound.
    A cell is flagged when its frequency exceeds the reference by more than
    three binomial standard errors.
    """
    if bound_id not in FALSIFIABLE:
        raise QueryError(f"falsify_bound supports {FALSIFIABLE}, got {bound_id!r}")
    if int(trials) < 1:
        raise QueryError("trials must be at least 1")
    trials = int(trials)
    src = as_random_source(rng)
    cells = []
    for c, q in enumerate(grid):
        cell_rng = src.child(c)
        if bound_id == "discrepancy":
            q.require("m0", "m1", "epsilon")
            dist = truth if truth is not None else _default_truth("two-gaussian-grid")
            h = hypothesis
            if h is None:
                from .hypotheses import LinearThreshold

                h = LinearThreshold(np.eye(dist.X.shape[1])[0], 0.0, "first-axis")
            fails = discrepancy_trials(dist, h, q.m0, q.m1, q.epsilon, trials, cell_rng)
            ref = min(1.0, 2 * discrepancy_tail(q.m0, q.m1, q.epsilon))
            cells.append(_cell(q, trials, fails, ref))
        elif bound_id == "weak-finite":
            from .synthetic import random_atoms

            m = weak_finite_bound(q)
            dist = truth if truth is not None else random_atoms(20, rng=cell_rng.child(0))
            hyps = _random_tabular_class(dist, q.class_size, cell_rng.child(1)) if class_spec is None else class_spec
            fails = weak_finite_trials(dist, hyps, m, q.epsilon, trials, cell_rng.child(2))
            cells.append(_cell(q, trials, fails, q.delta, {"m": m}))
        else:
            from .prospect import run_concentration_experiment
            from .strategic import FamilySpec, StrategicClass

            q.require("n", "m0", "m1", "epsilon", "upsilon", "tau")
            dist = truth if truth is not None else _default_truth("two-gaussian-grid")
            spec = class_spec or StrategicClass.sampled(FamilySpec("linear-threshold", dist.X.shape[1]), q.n)
            if isinstance(spec, StrategicClass) and spec.mode == "sampled" and spec.n != q.n:
                spec = replace(spec, n=q.n)
            res = run_concentration_experiment(
                q.n, q.m0, q.m1, q.epsilon, q.upsilon, q.tau, trials, dist, spec, cell_rng
            )
            miss = trials - res.covered
            cells.append(_cell(q, trials, miss, 1.0 - res.bound, {"coverage": res.coverage, "bound": res.bound}))
    return FalsifyReport(bound_id, tuple(cells))


def _random_tabular_class(dist, size, rng):
    from .hypotheses import Tabular

    gen = as_random_source(rng).generator()
    size = _count("class_size", size)
    labels = gen.integers(0, 2, size=(size, len(dist)))
    return [Tabular(dist.X, labels[k], f"tabular-{k}") for k in range(size)]


def random_tabular_class(dist, size, rng=None):
    """``size`` tabular hypotheses with uniformly random labels on the atoms of ``dist``."""
    return _random_tabular_class(dist, size, rng)
