"""Group traces, SP-shattering, SP dimension and VC dimension of finite concept classes.

Concepts are bitsets over the points of a :class:`FiniteDomain` (bit ``i``
is point ``i``). Exhaustive searches are capped at ``DEFAULT_CAP`` points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path

import numpy as np

from .core import as_random_source
from .exceptions import DomainError, IOFailure, ParseError, SizeError, SpecError

DEFAULT_CAP = 16
GROWTH_BUDGET = 1 << 20
_CHUNK_CELLS = 1 << 22


@dataclass(frozen=True)
class FiniteDomain:
    ids: tuple
    groups: tuple

    def __post_init__(self):
        ids = tuple(str(i) for i in self.ids)
        groups = tuple(int(g) for g in self.groups)
        if len(ids) != len(groups):
            raise DomainError("each domain point needs exactly one group tag")
        if len(set(ids)) != len(ids):
            raise DomainError("domain point ids must be unique")
        if any(g not in (0, 1) for g in groups):
            raise DomainError("group tags must be 0 or 1")
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "groups", groups)
        object.__setattr__(self, "_index", {p: k for k, p in enumerate(ids)})

    def __len__(self):
        return len(self.ids)

    @property
    def full(self) -> int:
        return (1 << len(self.ids)) - 1

    def group_mask(self, g: int) -> int:
        return sum(1 << k for k, t in enumerate(self.groups) if t == g)

    def mask(self, members) -> int:
        """Bitset of a collection of ids (an int is taken as a bitset already)."""
        if isinstance(members, (int, np.integer)):
            m = int(members)
            if m < 0 or m > self.full:
                raise DomainError(f"bitset {m} has bits outside the domain")
            return m
        out = 0
        for p in members:
            try:
                out |= 1 << self._index[str(p)]
            except KeyError:
                raise DomainError(f"unknown domain point {p!r}") from None
        return out

    def members(self, mask: int) -> list:
        return [p for k, p in enumerate(self.ids) if mask >> k & 1]


@dataclass(frozen=True, eq=False)
class FiniteConceptClass:
    """Deduplicated concepts over a finite domain, first occurrence kept."""

    domain: FiniteDomain
    concepts: tuple

    def __post_init__(self):
        seen, out = set(), []
        for c in self.concepts:
            c = self.domain.mask(c)
            if c not in seen:
                seen.add(c)
                out.append(c)
        if not out:
            raise SpecError("a concept class needs at least one concept")
        object.__setattr__(self, "concepts", tuple(out))

    @classmethod
    def from_sets(cls, domain: FiniteDomain, sets) -> "FiniteConceptClass":
        return cls(domain, tuple(domain.mask(s) for s in sets))

    def __len__(self):
        return len(self.concepts)

    def array(self) -> np.ndarray:
        return np.array(self.concepts, dtype=np.int64)

    def with_concepts(self, extra) -> "FiniteConceptClass":
        return FiniteConceptClass(self.domain, self.concepts + tuple(extra))


def powerset_class(domain: FiniteDomain) -> FiniteConceptClass:
    return FiniteConceptClass(domain, tuple(range(domain.full + 1)))


def random_class(n_points, n_concepts, rng=None, group1_share=0.5, density=0.5) -> FiniteConceptClass:
    """Random class on ``n_points`` points with both groups present.

    Group tags are drawn with ``P[g=1] = group1_share`` and then forced to
    include each group at least once; concepts include each point
    independently with probability ``density``.
    """
    if n_points < 2:
        raise SpecError("a two-group domain needs at least two points")
    gen = as_random_source(rng).generator()
    groups = (gen.random(n_points) < group1_share).astype(int)
    groups[0], groups[1] = 0, 1
    groups = gen.permutation(groups)
    dom = FiniteDomain(tuple(f"p{k}" for k in range(n_points)), tuple(groups))
    bits = gen.random((n_concepts, n_points)) < density
    weights = 1 << np.arange(n_points, dtype=np.int64)
    return FiniteConceptClass(dom, tuple(int(v) for v in bits.astype(np.int64) @ weights))


# group traces and shattering


@dataclass(frozen=True)
class GroupTraceSet:
    s0: int
    s1: int
    pairs: tuple  # sorted (A0, A1) bitset pairs
    witnesses: tuple = field(repr=False)  # concept index realising each pair

    @property
    def count(self) -> int:
        return len(self.pairs)


def _check_subsets(cls: FiniteConceptClass, s0, s1):
    dom = cls.domain
    s0, s1 = dom.mask(s0), dom.mask(s1)
    if s0 & ~dom.group_mask(0):
        raise DomainError("s0 must contain only group-0 points")
    if s1 & ~dom.group_mask(1):
        raise DomainError("s1 must contain only group-1 points")
    return s0, s1


def group_traces(cls: FiniteConceptClass, s0, s1) -> GroupTraceSet:
    """Distinct ``(c & S0, c & S1)`` pairs with one witness concept each."""
    s0, s1 = _check_subsets(cls, s0, s1)
    first = {}
    for k, c in enumerate(cls.concepts):
        first.setdefault((c & s0, c & s1), k)
    pairs = tuple(sorted(first))
    return GroupTraceSet(s0, s1, pairs, tuple(first[p] for p in pairs))


def sp_shatter_target(k0: int, k1: int) -> int:
    """``2^|S| + |S| - 2^|S0| - 2^|S1|`` for ``|S0| = k0`` and ``|S1| = k1``."""
    k = k0 + k1
    return 2**k + k - 2**k0 - 2**k1


@dataclass(frozen=True)
class ShatterCheck:
    shattered: bool
    count: int
    target: int
    reason: str  # "ok", "count-mismatch" or "empty-group"


def sp_shatter_check(cls: FiniteConceptClass, s0, s1) -> ShatterCheck:
    s0, s1 = _check_subsets(cls, s0, s1)
    if s0 == 0 and s1 == 0:
        raise DomainError("s0 and s1 cannot both be empty")
    count = group_traces(cls, s0, s1).count
    k0, k1 = s0.bit_count(), s1.bit_count()
    target = sp_shatter_target(k0, k1)
    if k0 == 0 or k1 == 0:
        return ShatterCheck(False, count, target, "empty-group")
    ok = count == target
    return ShatterCheck(ok, count, target, "ok" if ok else "count-mismatch")


def is_sp_shattered(cls: FiniteConceptClass, s0, s1) -> bool:
    """True iff the group-trace count equals the SP-shattering target exactly.

    The target degenerates when a group is empty; such inputs return False
    (see :func:`sp_shatter_check` for the reason code).
    """
    return sp_shatter_check(cls, s0, s1).shattered


# exhaustive dimension search


def _trace_counts(concepts: np.ndarray, subsets: np.ndarray) -> np.ndarray:
    """Number of distinct ``c & S`` for each subset ``S``."""
    out = np.empty(len(subsets), dtype=np.int64)
    step = max(1, _CHUNK_CELLS // max(1, len(concepts)))
    for lo in range(0, len(subsets), step):
        block = subsets[lo : lo + step, None] & concepts[None, :]
        block.sort(axis=1)
        out[lo : lo + step] = 1 + np.count_nonzero(np.diff(block, axis=1), axis=1)
    return out


def _check_cap(cls, cap):
    n = len(cls.domain)
    if n > cap:
        raise SizeError(
            f"domain has {n} points, above the exhaustive cap of {cap}; "
            "use the randomized search (mode='random') for a lower bound"
        )


def _popcounts(subsets):
    return np.array([int(s).bit_count() for s in subsets], dtype=np.int64)


@dataclass(frozen=True)
class SPDimension:
    value: float
    count: int
    s0: int
    s1: int
    exact: bool = True

    @property
    def witness(self) -> int:
        return self.s0 | self.s1


def sp_dimension(cls: FiniteConceptClass, cap=DEFAULT_CAP, mode="exact", samples=4096, rng=None) -> SPDimension:
    """Max over non-empty subsets ``S`` of ``log2`` of the group-trace count.

    The trace pair of a concept on ``(S0, S1)`` is a relabelling of its trace
    on ``S``, so the count per subset is the number of distinct ``c & S``.
    The witness is the smallest (then lowest-bitmask) maximiser. In
    ``mode="random"`` only ``samples`` random subsets are scored and the
    result is a lower bound with ``exact=False``.
    """
    dom = cls.domain
    C = cls.array()
    if mode == "exact":
        _check_cap(cls, cap)
        subsets = np.arange(1, dom.full + 1, dtype=np.int64)
    elif mode == "random":
        gen = as_random_source(rng).generator()
        n = len(dom)
        bits = gen.random((int(samples), n)) < 0.5
        subsets = bits.astype(np.int64) @ (1 << np.arange(n, dtype=np.int64))
        subsets = np.unique(np.append(subsets[subsets > 0], dom.full))
    else:
        raise SpecError("mode must be 'exact' or 'random'")
    if len(subsets) == 0:
        return SPDimension(0.0, 1, 0, 0, mode == "exact")
    counts = _trace_counts(C, subsets)
    best = counts.max()
    cand = subsets[counts == best]
    w = int(cand[np.lexsort((cand, _popcounts(cand)))[0]])
    g0 = dom.group_mask(0)
    return SPDimension(math.log2(int(best)), int(best), w & g0, w & ~g0 & dom.full, mode == "exact")


def vc_shattered_sets(cls: FiniteConceptClass, cap=DEFAULT_CAP) -> dict:
    """Map ``size -> list of shattered subsets`` for every shattered size."""
    _check_cap(cls, cap)
    subsets = np.arange(0, cls.domain.full + 1, dtype=np.int64)
    counts = _trace_counts(cls.array(), subsets)
    sizes = _popcounts(subsets)
    hit = counts == (1 << sizes)
    out = {}
    for s, k in zip(subsets[hit], sizes[hit]):
        out.setdefault(int(k), []).append(int(s))
    return out


def vc_dimension(cls: FiniteConceptClass, cap=DEFAULT_CAP) -> int:
    """Size of the largest subset on which every dichotomy is realised."""
    return max(vc_shattered_sets(cls, cap))


def max_vc_witnesses(cls: FiniteConceptClass, cap=DEFAULT_CAP) -> list:
    sets = vc_shattered_sets(cls, cap)
    return sets[max(sets)]


def _growth_budget(dom, m0, m1, budget):
    n0 = sum(1 for g in dom.groups if g == 0)
    n1 = len(dom) - n0
    if not (0 <= m0 <= n0 and 0 <= m1 <= n1):
        raise DomainError(f"need 0 <= m0 <= {n0} and 0 <= m1 <= {n1}")
    work = math.comb(n0, m0) * math.comb(n1, m1)
    if work > budget:
        raise SizeError(f"sp_growth would score {work} subsets, above the budget of {budget}")


def sp_growth(cls: FiniteConceptClass, m0: int, m1: int, budget=GROWTH_BUDGET) -> int:
    """Max group-trace count over ``S0, S1`` with ``|S0| = m0`` and ``|S1| = m1``."""
    dom = cls.domain
    _growth_budget(dom, m0, m1, budget)
    idx0 = [k for k, g in enumerate(dom.groups) if g == 0]
    idx1 = [k for k, g in enumerate(dom.groups) if g == 1]
    subsets = np.array(
        [sum(1 << k for k in a + b) for a in combinations(idx0, m0) for b in combinations(idx1, m1)],
        dtype=np.int64,
    )
    return int(_trace_counts(cls.array(), subsets).max())


def sp_growth_table(cls: FiniteConceptClass, budget=GROWTH_BUDGET) -> list:
    """Rows ``(m0, m1, sp_growth)`` for every feasible size pair."""
    dom = cls.domain
    n0 = sum(1 for g in dom.groups if g == 0)
    n1 = len(dom) - n0
    return [(a, b, sp_growth(cls, a, b, budget)) for a in range(n0 + 1) for b in range(n1 + 1)]


def restrict_to_group(cls: FiniteConceptClass, g: int) -> FiniteConceptClass:
    """The class of traces on group ``g``'s points, as a class over that sub-domain."""
    dom = cls.domain
    idx = [k for k, t in enumerate(dom.groups) if t == g]
    if not idx:
        raise DomainError(f"group {g} has no points")
    sub = FiniteDomain(tuple(dom.ids[k] for k in idx), (g,) * len(idx))
    concepts = tuple(sum(1 << j for j, k in enumerate(idx) if c >> k & 1) for c in cls.concepts)
    return FiniteConceptClass(sub, concepts)


def group_vc_dimensions(cls: FiniteConceptClass, cap=DEFAULT_CAP) -> tuple:
    """VC dimension of each group's restriction (0 for an empty group)."""
    out = []
    for g in (0, 1):
        try:
            out.append(vc_dimension(restrict_to_group(cls, g), cap))
        except DomainError:
            out.append(0)
    return tuple(out)


def sauer_count(m: int, s: int) -> int:
    """``sum_{i <= s} C(m, i)``, the Sauer-Shelah cap on traces of ``m`` points."""
    return sum(math.comb(m, i) for i in range(min(m, s) + 1))


def sauer_exp_bound(m: int, s: int) -> float:
    """``(e m / s)^s`` when ``m >= s >= 1``; otherwise the trivial ``2^m`` (``s >= m``) or 1 (``s = 0``)."""
    if s == 0:
        return 1.0
    if m <= s:
        return float(2**m)
    return (math.e * m / s) ** s


def sp_growth_sauer(m0, m1, s0, s1, exp_form=False):
    """Product of the per-group Sauer caps, an upper bound on ``sp_growth``."""
    f = sauer_exp_bound if exp_form else sauer_count
    return f(m0, s0) * f(m1, s1)


# the two-group witness lemma


def is_product_extensible(cls: FiniteConceptClass) -> bool:
    """True when the class is ``C0 x C1`` with both factors of VC dimension >= 1.

    Then each concept's restriction to one group combines freely with every
    restriction to the other group.
    """
    dom = cls.domain
    g0 = dom.group_mask(0)
    g1 = dom.full & ~g0
    if not g0 or not g1:
        return False
    a = {c & g0 for c in cls.concepts}
    b = {c & g1 for c in cls.concepts}
    if len(a) * len(b) != len(cls):
        return False
    return min(group_vc_dimensions(cls)) >= 1


def extend_with_point(cls: FiniteConceptClass, group: int, id="x'") -> FiniteConceptClass:
    """Add a fresh ``group`` point that every concept may include or exclude.

    Any shattered set stays shattered with the new point added, so the VC
    dimension grows by exactly one.
    """
    dom = cls.domain
    if id in dom.ids:
        raise DomainError(f"point id {id!r} already exists")
    bit = 1 << len(dom)
    new = FiniteDomain(dom.ids + (id,), dom.groups + (int(group),))
    return FiniteConceptClass(new, tuple(x for c in cls.concepts for x in (c, c | bit)))


def product_class(domain: FiniteDomain, concepts0, concepts1) -> FiniteConceptClass:
    """All unions ``a | b`` with ``a`` from ``concepts0`` (group 0) and ``b`` from ``concepts1``."""
    a = [domain.mask(c) for c in concepts0]
    b = [domain.mask(c) for c in concepts1]
    return FiniteConceptClass(domain, tuple(x | y for x in a for y in b))


# text format


def parse_concept_class(text: str) -> FiniteConceptClass:
    """Read ``domain: id:group ...`` followed by one concept per line.

    A concept line lists member ids separated by spaces or commas; ``-`` or
    ``{}`` is the empty concept. Blank lines and ``#`` comments are skipped.
    """
    domain = None
    concepts = []
    for row, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if domain is None:
            if not line.startswith("domain:"):
                raise ParseError("first line must start with 'domain:'", row=row)
            ids, groups = [], []
            for tok in line[len("domain:") :].split():
                pid, sep, g = tok.rpartition(":")
                if not sep or g not in ("0", "1") or not pid:
                    raise ParseError(f"bad domain entry {tok!r}; expected id:group", row=row)
                ids.append(pid)
                groups.append(int(g))
            try:
                domain = FiniteDomain(tuple(ids), tuple(groups))
            except DomainError as exc:
                raise ParseError(str(exc), row=row) from exc
            continue
        members = [] if line in ("-", "{}") else line.replace(",", " ").split()
        try:
            concepts.append(domain.mask(members))
        except DomainError as exc:
            raise ParseError(str(exc), row=row) from exc
    if domain is None:
        raise ParseError("missing 'domain:' header")
    if not concepts:
        raise ParseError("no concepts listed")
    return FiniteConceptClass(domain, tuple(concepts))


def format_concept_class(cls: FiniteConceptClass) -> str:
    dom = cls.domain
    lines = ["domain: " + " ".join(f"{p}:{g}" for p, g in zip(dom.ids, dom.groups))]
    for c in cls.concepts:
        lines.append(" ".join(dom.members(c)) or "-")
    return "\n".join(lines) + "\n"


def load_concept_class(path) -> FiniteConceptClass:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise IOFailure(f"cannot read concept class: {exc.strerror}", path) from exc
    return parse_concept_class(text)
