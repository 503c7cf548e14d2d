"""Property checkers for choice functions and condition checkers for exclusion functions.

All checks run on int64 choice tables indexed by bitmask; pairs are visited in
scan order (cardinality, then sorted items) so the first reported
counterexample is deterministic.
"""
from __future__ import annotations

import enum
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence

import numpy as np

from ._bits import TOP_CODE, all_pairs, items_of, nested_pairs, popcounts, scan_order
from .core import (
    INF,
    ChoiceFunction,
    EquivalencePartition,
    ExclusionFunction,
    GroundSet,
    ItemSet,
    Tlcr,
    TlcrParams,
)
from .errors import BudgetExceeded, InsufficientHeadroom, InvalidParams, LexiChoiceError
from .families import Domain, family, rng_of

MAX_CHECK_N = 10
_BATCH_ELEMS = 1 << 22


class Property(str, enum.Enum):
    PI = "PI"
    SUB = "SUB"
    CON = "CON"
    SM = "SM"
    MTO1 = "MTO1"


class Condition(str, enum.Enum):
    G_MONOTONE = "G-monotone"
    ALL_OR_NOTHING = "all-or-nothing"
    CARDINAL = "cardinal"
    R_MONOTONE = "R-monotone-on-dom"
    R_CARDINAL_LINEAR = "R-cardinal-linear-on-dom"
    K_DISJOINT = "K-disjoint"


CLASSIFIER_CONDITIONS = tuple(Condition)


class SafetyDomain(str, enum.Enum):
    RES = "RES"
    PI = "PI"
    SUB = "SUB"


class SvSide(str, enum.Enum):
    SV_FIRST = "SV_FIRST"
    SV_SECOND = "SV_SECOND"


def thread_count() -> int:
    try:
        return max(1, int(os.environ.get("LEXICHOICE_THREADS", "1")))
    except ValueError:
        return 1


def _pmap(fn, chunks: list):
    k = thread_count()
    if k == 1 or len(chunks) <= 1:
        return [fn(c) for c in chunks]
    with ThreadPoolExecutor(max_workers=k) as pool:
        return list(pool.map(fn, chunks))


# ---------------------------------------------------------------------------
# Choice-function properties
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PropertyVerdict:
    property: Property
    holds: bool
    witness: Optional[tuple[ItemSet, ItemSet, str]] = None


def _pairs(n: int, prop: Property) -> tuple[np.ndarray, np.ndarray]:
    if prop is Property.PI:
        return all_pairs(n)
    if prop is Property.MTO1:
        order = np.array(scan_order(n), dtype=np.int64)
        return order, order
    return nested_pairs(n)


def _fail_mask(T: np.ndarray, ys: np.ndarray, yps: np.ndarray, prop: Property, n: int, feasible=None) -> np.ndarray:
    """Boolean failures for a batch of tables ``T`` (B x 2^n) over pair arrays."""
    a, b = T[:, ys], T[:, yps]
    if prop is Property.PI:
        lhs = T[:, ys | yps]
        rhs = np.take_along_axis(T, a | b, axis=1)
        return lhs != rhs
    if prop is Property.SUB:
        return (ys & ~a & b) != 0
    if prop is Property.CON:
        return ((b & ~ys) == 0) & (a != b)
    if prop is Property.SM:
        pc = popcounts(n)
        return pc[a] > pc[b]
    if prop is Property.MTO1:
        if feasible is None:
            raise InvalidParams("MTO1 checks need a partition")
        return ~feasible[a]
    raise InvalidParams(f"unknown property {prop!r}")


def batch_holds(T: np.ndarray, n: int, prop: Property, feasible=None) -> np.ndarray:
    """Per-row verdict for a stack of tables."""
    prop = Property(prop)
    T = np.atleast_2d(T)
    ys, yps = _pairs(n, prop)
    rows = max(1, _BATCH_ELEMS // max(1, len(ys)))
    out = np.ones(len(T), dtype=bool)
    pair_chunk = max(1, _BATCH_ELEMS // max(1, len(T[:rows])))
    for r in range(0, len(T), rows):
        block = T[r : r + rows]
        ok = np.ones(len(block), dtype=bool)
        for p in range(0, len(ys), pair_chunk):
            ok &= ~_fail_mask(block, ys[p : p + pair_chunk], yps[p : p + pair_chunk], prop, n, feasible).any(axis=1)
        out[r : r + rows] = ok
    return out


def table_holds(t: np.ndarray, n: int, prop: Property, feasible=None) -> bool:
    return bool(batch_holds(np.asarray(t)[None, :], n, prop, feasible)[0])


def first_failure(t: np.ndarray, n: int, prop: Property, feasible=None) -> Optional[tuple[int, int]]:
    """First failing (Y, Y') mask pair in scan order, or None."""
    prop = Property(prop)
    ys, yps = _pairs(n, prop)
    t2 = np.asarray(t)[None, :]
    step = _BATCH_ELEMS
    for p in range(0, len(ys), step):
        bad = _fail_mask(t2, ys[p : p + step], yps[p : p + step], prop, n, feasible)[0]
        idx = np.flatnonzero(bad)
        if len(idx):
            i = p + int(idx[0])
            return int(ys[i]), int(yps[i])
    return None


def _detail(t, y: int, yp: int, prop: Property, ground: GroundSet) -> str:
    f = ground.fmt
    if prop is Property.PI:
        return (
            f"C({f(y | yp)})={f(int(t[y | yp]))} but "
            f"C(C({f(y)}) u C({f(yp)}))=C({f(int(t[y]) | int(t[yp]))})={f(int(t[int(t[y]) | int(t[yp])]))}"
        )
    if prop is Property.SUB:
        x = items_of(y & ~int(t[y]) & int(t[yp]))[0]
        return f"{ground.label(x)} rejected from {f(y)} but chosen from {f(yp)}"
    if prop is Property.CON:
        return f"C({f(yp)})={f(int(t[yp]))} <= {f(y)} but C({f(y)})={f(int(t[y]))}"
    if prop is Property.SM:
        return f"|C({f(y)})|={int(t[y]).bit_count()} > |C({f(yp)})|={int(t[yp]).bit_count()}"
    return f"C({f(y)})={f(int(t[y]))} holds two equivalent items"


def _feasible_for(C: ChoiceFunction, partition: Optional[EquivalencePartition]):
    if partition is None:
        partition = getattr(C, "partition", None)
    return None if partition is None else partition.feasible_table


def check_choice(
    C: ChoiceFunction, prop: Property, partition: Optional[EquivalencePartition] = None
) -> PropertyVerdict:
    prop = Property(prop)
    n = C.ground.size
    if n > MAX_CHECK_N:
        raise BudgetExceeded(f"exhaustive checks are limited to ground size <= {MAX_CHECK_N}")
    feasible = _feasible_for(C, partition) if prop is Property.MTO1 else None
    t = C.table
    hit = first_failure(t, n, prop, feasible)
    if hit is None:
        return PropertyVerdict(prop, True)
    y, yp = hit
    return PropertyVerdict(
        prop, False, (ItemSet.from_mask(y), ItemSet.from_mask(yp), _detail(t, y, yp, prop, C.ground))
    )


def violates_at(C: ChoiceFunction, prop: Property, Y, Yp, partition=None) -> bool:
    """True iff the pair (Y, Y') itself breaks the property."""
    prop = Property(prop)
    g = C.ground
    y, yp = np.array([g.mask(Y)]), np.array([g.mask(Yp)])
    if prop in (Property.SUB, Property.CON, Property.SM) and int(y[0]) & ~int(yp[0]):
        return False
    feasible = _feasible_for(C, partition) if prop is Property.MTO1 else None
    return bool(_fail_mask(C.table[None, :], y, yp, prop, g.size, feasible)[0, 0])


# ---------------------------------------------------------------------------
# Exclusion-function conditions and the threshold-linear classifier
# ---------------------------------------------------------------------------


class _View:
    """Tabulated G/R data of an exclusion function over the tested subsets."""

    def __init__(self, E: ExclusionFunction, headroom: Optional[int] = None, feasible=None):
        g = E.ground
        self.E, self.ground = E, g
        h = g.headroom if headroom is None else headroom
        if h < 0 or (g.size and h >= g.size):
            raise InsufficientHeadroom(f"headroom {h} leaves nothing to test on {g.size} items")
        self.max_size = g.size - h
        self.sets = [
            m for m in scan_order(g.size) if m.bit_count() <= self.max_size and (feasible is None or feasible[m])
        ]
        self.code = {m: E.eval_mask(m) for m in self.sets}
        self.K = self.code[0]

    def G(self, z: int) -> int:
        e = self.code[z]
        return TOP_CODE if e == TOP_CODE else e | z

    def R(self, z: int) -> int:
        return z & ~self.code[z]

    def dom(self, z: int) -> bool:
        return self.code[z] != TOP_CODE


def _sub(a: int, b: int) -> bool:
    """a <= b with TOP as the largest element."""
    if b == TOP_CODE:
        return True
    if a == TOP_CODE:
        return False
    return a & ~b == 0


def condition_violations(E: ExclusionFunction, cond: Condition, headroom: Optional[int] = None, _view=None) -> Iterator[dict]:
    """Yield every instance breaking ``cond`` within the headroom, in scan order."""
    v = _view or _View(E, headroom)
    cond = Condition(cond)
    sets, K = v.sets, v.K
    if cond is Condition.G_MONOTONE:
        for z in sets:
            for zp in sets:
                if z != zp and z & ~zp == 0 and not _sub(v.G(z), v.G(zp)):
                    yield {"Z": z, "Zp": zp}
    elif cond is Condition.ALL_OR_NOTHING:
        for z in sets:
            g = v.G(z)
            if g != TOP_CODE and (K == TOP_CODE or g != z | K):
                yield {"Z": z}
    elif cond is Condition.CARDINAL:
        if K == TOP_CODE:
            return
        for z in sets:
            if v.G(z) != TOP_CODE:
                continue
            for zp in sets:
                if zp.bit_count() == z.bit_count() and v.G(zp) != TOP_CODE:
                    yield {"Z": z, "Zp": zp}
    elif cond is Condition.R_MONOTONE:
        for z in sets:
            if not v.dom(z):
                continue
            for zp in sets:
                if z != zp and z & ~zp == 0 and v.dom(zp):
                    lost = v.R(z) & ~v.R(zp)
                    if lost:
                        yield {"Z": z, "Zp": zp, "a": items_of(lost)[0]}
    elif cond is Condition.R_CARDINAL_LINEAR:
        for z in sets:
            if not v.dom(z):
                continue
            for zp in sets:
                if zp != z and zp.bit_count() == z.bit_count() and v.dom(zp):
                    lost = v.R(z) & zp & ~v.R(zp)
                    if lost:
                        yield {"Z": z, "Zp": zp, "a": items_of(lost)[0]}
    elif cond is Condition.K_DISJOINT:
        for z in sets:
            if v.dom(z):
                hit = v.R(z) if K == TOP_CODE else v.R(z) & K
                if hit:
                    yield {"Z": z, "a": items_of(hit)[0]}


def condition_holds(E: ExclusionFunction, cond: Condition, headroom: Optional[int] = None) -> bool:
    return next(condition_violations(E, cond, headroom), None) is None


@dataclass(frozen=True)
class TlcrClassification:
    is_tlcr: bool
    params: Optional[TlcrParams]
    failed_conditions: tuple[Condition, ...]
    finite_scale: bool = False
    max_tested_size: int = 0

    @property
    def caveats(self) -> list[str]:
        out = []
        if self.finite_scale:
            out.append(f"t=inf inferred from sets of size <= {self.max_tested_size}")
        if self.is_tlcr:
            out.append(f"reuse sets beyond size {self.max_tested_size} are unconstrained at this scale")
        return out


def _extract(v: _View) -> tuple[TlcrParams, bool]:
    if v.K == TOP_CODE:
        return TlcrParams(0), False
    top_sizes = [z.bit_count() for z in v.sets if v.G(z) == TOP_CODE]
    t = min(top_sizes) if top_sizes else INF
    # sizes with no tested set (e.g. no feasible set that large) carry no reuse data
    largest = max((z.bit_count() for z in v.sets), default=0)
    upto = min(largest, v.max_size if t == INF else min(t - 1, v.max_size))
    reuse = []
    for k in range(1, upto + 1):
        acc = 0
        for z in v.sets:
            if z.bit_count() == k and v.dom(z):
                acc |= v.R(z)
        reuse.append(ItemSet.from_mask(acc))
    while reuse and t == INF and len(reuse) > 1 and reuse[-1] == reuse[-2]:
        reuse.pop()
    if reuse and not any(reuse):
        reuse = []
    return TlcrParams(t, ItemSet.from_mask(v.K), tuple(reuse)), t == INF


def _classify(v: _View) -> TlcrClassification:
    failed = tuple(c for c in CLASSIFIER_CONDITIONS if next(condition_violations(v.E, c, _view=v), None) is not None)
    if failed:
        return TlcrClassification(False, None, failed, max_tested_size=v.max_size)
    params, finite_scale = _extract(v)
    synth = Tlcr(v.ground, params)
    for z in v.sets:
        if synth.eval_mask(z) != v.code[z]:
            raise LexiChoiceError(f"internal: extracted parameters disagree with E at {v.ground.fmt(z)}")
    return TlcrClassification(True, params, (), finite_scale, v.max_size)


def classify_tlcr(E: ExclusionFunction, headroom: Optional[int] = None) -> TlcrClassification:
    """Test every threshold-linear ingredient on subsets leaving ``headroom`` items free."""
    return _classify(_View(E, headroom))


def _T_levels(params: TlcrParams, n: int) -> list[int]:
    top = n if params.t == INF else min(params.t, n)
    return [params.T_mask(k) for k in range(1, max(top, 1) + 1)]


def check_domain_safety(params: TlcrParams, domain: SafetyDomain, ground: Optional[GroundSet] = None) -> bool:
    """Arithmetic test on (t, T^n) for preservation over the named input domain.

    A threshold of 0 always counts as safe: the exclusion is constantly TOP,
    so the composition is just the first input.
    """
    domain = SafetyDomain(domain)
    n = ground.size if ground is not None else max(len(params.reuse), 2) + 1
    if domain is SafetyDomain.RES or params.t == 0:
        return True
    levels = _T_levels(params, max(n, 3))
    if domain is SafetyDomain.PI:
        if params.t == 1:
            return True
        if params.t != INF:
            return False
        return all(x == levels[1] for x in levels[1:])
    if params.t != INF:
        return False
    return all(x == levels[0] for x in levels)


def _free_outside_K(params: TlcrParams, ground: GroundSet) -> int:
    if params.t == 0:
        return 0
    return (ground.full & ~params.K.mask).bit_count()


def check_sm_safety(params: TlcrParams, ground: GroundSet) -> bool:
    if _free_outside_K(params, ground) <= 1:
        return True
    return params.t == INF and not any(r for r in params.reuse)


def sm_truncation_sensitive(params: TlcrParams, ground: GroundSet) -> bool:
    """The first disjunct held only because the window is small."""
    return params.t != 0 and _free_outside_K(params, ground) <= 1 and ground.headroom > 0


def _singletons(E: ExclusionFunction) -> tuple[int, list[tuple[int, int]]]:
    g = E.ground
    return E.eval_mask(0), [(x, E.eval_mask(1 << x)) for x in range(g.size)]


def singleton_reuse(E: ExclusionFunction) -> Optional[int]:
    """T of the singleton profile, or None when the profile fails or is all-TOP."""
    K, rows = _singletons(E)
    if all(e == TOP_CODE for _, e in rows) or K == TOP_CODE:
        return None
    T = 0
    for x, e in rows:
        if e == K | 1 << x:
            continue
        if e == K and not K >> x & 1:
            T |= 1 << x
            continue
        return None
    return T


def check_singleton_profile(E: ExclusionFunction) -> bool:
    K, rows = _singletons(E)
    if all(e == TOP_CODE for _, e in rows):
        return True
    return singleton_reuse(E) is not None


def check_sv_sm_profile(E: ExclusionFunction, side: SvSide, headroom: Optional[int] = None) -> bool:
    side = SvSide(side)
    g = E.ground
    if side is SvSide.SV_FIRST:
        if not check_singleton_profile(E):
            return False
        K, rows = _singletons(E)
        if all(e == TOP_CODE for _, e in rows) or (g.full & ~K).bit_count() <= 1:
            return True
        return singleton_reuse(E) == 0
    cls = classify_tlcr(E, headroom)
    if not cls.is_tlcr:
        return False
    return check_sm_safety_reuse_only(cls.params, g)


def sv_first_threshold_gap(E: ExclusionFunction) -> bool:
    """Every singleton maps to TOP while two items stay outside ``E(empty)``.

    The singleton test passes such an ``E`` on the single-valued-first
    side, yet a chooser that picks nothing hands two items to the second
    input while picking one item shuts it out, so size monotonicity fails
    once a third item exists.
    """
    g = E.ground
    K, rows = _singletons(E)
    if K == TOP_CODE or g.size < 3 or not all(e == TOP_CODE for _, e in rows):
        return False
    return (g.full & ~K).bit_count() > 1


def check_sm_safety_reuse_only(params: TlcrParams, ground: GroundSet) -> bool:
    """Reuse-only half of the size-monotonicity condition (threshold left free)."""
    return _free_outside_K(params, ground) <= 1 or not any(r for r in params.reuse)


# ---------------------------------------------------------------------------
# Preservation driver
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PairFailure:
    index: int
    C1: ChoiceFunction
    C2: ChoiceFunction
    Y: ItemSet
    Yp: ItemSet
    detail: str


@dataclass
class PreservationReport:
    property: Property
    left: Domain
    right: Domain
    exhaustive: bool
    seed: Optional[int]
    pairs_checked: int = 0
    n_failures: int = 0
    failures: list[PairFailure] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.n_failures == 0


def compose_tables(T1: np.ndarray, T2: np.ndarray, Et: np.ndarray) -> np.ndarray:
    """Row-wise composition of paired tables (B x N each)."""
    masks = np.arange(T1.shape[1], dtype=np.int64)
    rest = masks[None, :] & ~Et[T1]
    return T1 | np.take_along_axis(T2, rest, axis=1)


def _check_rows(T1, T2, idx1, idx2, Et, n, prop, feasible):
    comp = compose_tables(T1[idx1], T2[idx2], Et)
    return batch_holds(comp, n, prop, feasible), comp


def verify_preservation(
    E: ExclusionFunction,
    prop: Property,
    left: Domain,
    right: Domain,
    exhaustive: bool = True,
    seed: Optional[int] = 0,
    count: int = 500,
    partition: Optional[EquivalencePartition] = None,
    max_failures: int = 5,
    left_family: Optional[Sequence[ChoiceFunction]] = None,
    right_family: Optional[Sequence[ChoiceFunction]] = None,
    max_pairs: int = 2_000_000,
) -> PreservationReport:
    """Check that every composition of left/right family members keeps ``prop``.

    Exhaustive mode runs every pair of the two families; sampled mode draws
    ``count`` independent pairs from a seeded generator.
    """
    prop, left, right = Property(prop), Domain(left), Domain(right)
    g = E.ground
    rng = rng_of(seed)
    if exhaustive:
        L = list(left_family) if left_family is not None else family(left, g, True, partition=partition)
        R = list(right_family) if right_family is not None else family(right, g, True, partition=partition)
        if len(L) * len(R) > max_pairs:
            raise BudgetExceeded(f"{len(L) * len(R)} pairs exceed budget {max_pairs}")
    else:
        L = list(left_family) if left_family is not None else family(left, g, False, count, rng, partition)
        R = list(right_family) if right_family is not None else family(right, g, False, count, rng, partition)
    feasible = partition.feasible_table if partition is not None else None
    if prop is Property.MTO1 and feasible is None:
        raise InvalidParams("MTO1 preservation needs a partition")
    T1 = np.stack([c.table for c in L]) if L else np.zeros((0, g.n_subsets), dtype=np.int64)
    T2 = np.stack([c.table for c in R]) if R else np.zeros((0, g.n_subsets), dtype=np.int64)
    Et = E.table
    if exhaustive:
        i1 = np.repeat(np.arange(len(L)), len(R))
        i2 = np.tile(np.arange(len(R)), len(L))
    else:
        m = min(len(L), len(R))
        i1 = i2 = np.arange(m)
    report = PreservationReport(prop, left, right, exhaustive, None if exhaustive else (seed if isinstance(seed, int) else None))
    report.pairs_checked = len(i1)
    step = max(1, _BATCH_ELEMS // max(1, g.n_subsets * 4))
    chunks = [(s, i1[s : s + step], i2[s : s + step]) for s in range(0, len(i1), step)]

    def run(chunk):
        s, a, b = chunk
        ok, comp = _check_rows(T1, T2, a, b, Et, g.size, prop, feasible)
        bad = np.flatnonzero(~ok)
        return s, bad, comp[bad[:max_failures]] if len(bad) else None, a, b

    for s, bad, comps, a, b in _pmap(run, chunks):
        report.n_failures += len(bad)
        for k, row in enumerate(bad[: max(0, max_failures - len(report.failures))]):
            y, yp = first_failure(comps[k], g.size, prop, feasible)
            c1, c2 = L[int(a[row])], R[int(b[row])]
            report.failures.append(
                PairFailure(s + int(row), c1, c2, ItemSet.from_mask(y), ItemSet.from_mask(yp), _detail(comps[k], y, yp, prop, g))
            )
    return report
