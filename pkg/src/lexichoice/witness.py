"""Counterexample constructions and a brute-force counterexample search.

Each construction turns a concrete violation of an exclusion-function
condition into two input choice functions and two nested input sets on which
the composition misbehaves.  Items are always picked smallest-index first.
Every candidate is replayed through the property checkers before it is
returned, so a mis-built candidate simply falls through to the next violation
instance.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterator, Optional, Sequence

import numpy as np

from ._bits import TOP_CODE, items_of, mask_of
from .compose import (
    fold_left,
    fold_right,
    lex_compose,
    procedure_aggregate_quota,
    procedure_individual_quota,
    quota_labels,
)
from .contracts import (
    check_equiv_dilation,
    equivalence_violations,
    EquivCondition,
)
from .core import (
    INF,
    ChoiceFunction,
    EquivalencePartition,
    ExclusionFunction,
    GroundSet,
    ItemSet,
    LinearOrder,
    Mto1Responsive,
    Responsive,
    UnionOfOrders,
)
from .errors import (
    BudgetExceeded,
    ConditionNotViolated,
    InsufficientHeadroom,
    InvalidParams,
    PreconditionFailed,
    WitnessConstructionFailed,
)
from .families import Domain, family, rng_of
from .props import (
    CLASSIFIER_CONDITIONS,
    Condition,
    Property,
    _BATCH_ELEMS,
    _detail,
    _View,
    batch_holds,
    check_choice,
    check_domain_safety,
    check_singleton_profile,
    check_sm_safety,
    check_sv_sm_profile,
    sv_first_threshold_gap,
    classify_tlcr,
    compose_tables,
    condition_holds,
    condition_violations,
    first_failure,
    singleton_reuse,
    violates_at,
)


class WitnessCondition(str, enum.Enum):
    G_MONOTONE = "G-monotone"
    ALL_OR_NOTHING = "all-or-nothing"
    CARDINAL = "cardinal"
    R_MONOTONE = "R-monotone-on-dom"
    R_CARDINAL_LINEAR = "R-cardinal-linear-on-dom"
    K_DISJOINT = "K-disjoint"
    PI_DOMAIN_THRESHOLD = "pi-domain-threshold"
    PI_DOMAIN_REUSE = "pi-domain-reuse"
    SM_REUSE = "sm-reuse"
    SM_THRESHOLD = "sm-threshold"
    SV_SINGLETON = "sv-singleton"
    SV_SM_REUSE = "sv-sm-reuse"
    SV_SM_THRESHOLD = "sv-sm-threshold"
    EQUIVALENCE_EXCLUDING = "equivalence-excluding"
    MTO1_MONOTONE = "mto1-monotone"
    WEAK_AON = "weak-aon"


ALIASES = {
    "pi-domain": (WitnessCondition.PI_DOMAIN_THRESHOLD, WitnessCondition.PI_DOMAIN_REUSE),
    "sm": (WitnessCondition.SM_REUSE, WitnessCondition.SM_THRESHOLD),
    "tlcr": tuple(WitnessCondition(c.value) for c in CLASSIFIER_CONDITIONS),
}

PI_COMPLETION = "PI-completion"


@dataclass(frozen=True, eq=False)
class Witness:
    """Inputs and a pair of nested sets on which the composition breaks a property.

    ``property_broken`` is a :class:`Property` value, or ``"PI-completion"``
    when every completion of the composition must break substitutes.
    """

    condition: str
    exclusion: ExclusionFunction
    C1: ChoiceFunction
    C2: ChoiceFunction
    Y_small: ItemSet
    Y_big: ItemSet
    property_broken: str
    narrative: str
    partition: Optional[EquivalencePartition] = None

    @property
    def composed(self) -> ChoiceFunction:
        return lex_compose(self.C1, self.C2, self.exclusion)

    def validate(self) -> bool:
        C = self.composed
        if self.property_broken == PI_COMPLETION:
            # every subset of Y_big is feasible, so any completion equals C there
            feas = self.partition.is_feasible_mask(self.Y_big.mask)
            return feas and self.Y_small <= self.Y_big and violates_at(C, Property.SUB, self.Y_small, self.Y_big)
        prop = Property(self.property_broken)
        if prop in (Property.SUB, Property.SM, Property.CON) and not self.Y_small <= self.Y_big:
            return False
        if not violates_at(C, prop, self.Y_small, self.Y_big, self.partition):
            return False
        return not check_choice(C, prop, self.partition).holds


class _NoFresh(Exception):
    pass


def _res(g: GroundSet, order: Sequence[int], q: int) -> Responsive:
    return Responsive(g, LinearOrder.from_acceptable(order, g.size), q)


def _mres(g: GroundSet, order: Sequence[int], q: int, P: EquivalencePartition) -> Mto1Responsive:
    return Mto1Responsive(g, LinearOrder.from_acceptable(order, g.size), q, P)


def _pick(g: GroundSet, avoid: int, k: int = 1, prefer: int = 0) -> list[int]:
    """``k`` smallest items outside ``avoid``, drawing from ``prefer`` first."""
    pool = items_of(prefer & ~avoid & g.full) + items_of(g.full & ~avoid & ~prefer)
    if len(pool) < k:
        raise _NoFresh
    return pool[:k]


def _first(mask: int) -> int:
    if mask <= 0:
        raise _NoFresh
    return items_of(mask)[0]


def _fmt(g: GroundSet, m) -> str:
    return g.fmt(m)


def _ranked(first: int, rest: int) -> list[int]:
    return items_of(first) + items_of(rest & ~first)


def separating_orders(g: GroundSet, Z: int, Zp: int) -> UnionOfOrders:
    """Union-of-orders C with C(Z | Z' | extra) = Z and C(Z' | extra) = Z'.

    Needs ``|Z'| > |Z| >= 1`` and ``Z`` not inside ``Z'``.
    """
    common = items_of(Z & Zp)
    only_z = items_of(Z & ~Zp)
    only_zp = items_of(Zp & ~Z)
    l, n, t = len(common), Z.bit_count(), Zp.bit_count()
    if not (t > n >= 1 and only_z):
        raise InvalidParams("separating orders need |Z'| > |Z| >= 1 and Z not inside Z'")
    zs = common + only_z  # z_1..z_n
    zps = [None] * l + only_zp  # z'_{l+1}..z'_t at positions l..t-1
    orders = []
    for i in range(1, t + 1):
        if i <= l:
            acc = [zs[i - 1]]
        elif i < n:
            acc = [zs[i - 1], zps[i - 1]]
        else:
            acc = [zs[n - 1], zps[i - 1]]
        orders.append(LinearOrder.from_acceptable(acc, g.size))
    return UnionOfOrders(g, tuple(orders))


# ---------------------------------------------------------------------------
# Constructions for the threshold-linear ingredients
# ---------------------------------------------------------------------------


def _g_monotone(E, v: _View, inst) -> tuple:
    g = E.ground
    z, zp = inst["Z"], inst["Zp"]
    gz, gzp = v.G(z), v.G(zp)
    a = _first(g.full & ~gzp if gz == TOP_CODE else gz & ~gzp)
    C1 = _res(g, items_of(zp), zp.bit_count())
    C2 = _res(g, [a], 1)
    ys, yb = z | 1 << a, zp | 1 << a
    story = (
        f"G({_fmt(g, z)}) is not inside G({_fmt(g, zp)}); item {g.label(a)} is excluded after "
        f"{_fmt(g, z)} but not after the larger {_fmt(g, zp)}. C1 takes all of {_fmt(g, zp)}, C2 takes only "
        f"{g.label(a)}: it is chosen from {_fmt(g, yb)} but not from {_fmt(g, ys)}."
    )
    return C1, C2, ys, yb, Property.SUB, story


def _all_or_nothing(E, v: _View, inst) -> tuple:
    g = E.ground
    z = inst["Z"]
    gz, K = v.G(z), v.K
    if K == TOP_CODE or z == 0:
        raise _NoFresh
    a = _first(g.full & ~gz)
    c = _first(v.code[z] & ~(z | K))
    b = items_of(z)[0]
    C1 = _res(g, items_of(z), z.bit_count())
    C2 = _res(g, [c, a], 1)
    yb = z | 1 << a | 1 << c
    ys = yb & ~(1 << b)
    story = (
        f"G({_fmt(g, z)}) = {_fmt(g, gz)} is neither {_fmt(g, z | K)} nor everything. C1 takes {_fmt(g, z)}; "
        f"C2 prefers {g.label(c)} to {g.label(a)}. From {_fmt(g, yb)} {g.label(c)} is excluded so C2 takes "
        f"{g.label(a)}; dropping {g.label(b)} frees {g.label(c)} and {g.label(a)} is rejected."
    )
    return C1, C2, ys, yb, Property.SUB, story


def _cardinal_case1(g, v: _View, z: int, zp: int) -> tuple:
    K = v.K
    a = _first(g.full & ~(z | zp | K))
    C1 = _res(g, _ranked(zp, z), z.bit_count())
    C2 = _res(g, [a], 1)
    ys, yb = z | 1 << a, z | zp | 1 << a
    story = (
        f"|{_fmt(g, z)}| = |{_fmt(g, zp)}| but only the first has G = everything. C1 ranks {_fmt(g, zp)} "
        f"above the rest with quota {z.bit_count()}; C2 takes only {g.label(a)}, which is chosen from "
        f"{_fmt(g, yb)} but not from {_fmt(g, ys)}."
    )
    return C1, C2, ys, yb, Property.SUB, story


def _cardinal(E, v: _View, inst) -> Iterator[tuple]:
    g = E.ground
    z, zp = inst["Z"], inst["Zp"]
    K = v.K
    try:
        yield _cardinal_case1(g, v, z, zp)
        return
    except _NoFresh:
        pass
    # the three sets cover the window: route through a shifted copy of Z'
    for a in items_of(g.full & ~(z | K)):
        for b in items_of(g.full & ~(z | 1 << a)):
            zpp = (zp | 1 << b) & ~(1 << a)
            if zpp not in v.code:
                continue
            if v.G(zpp) != TOP_CODE:
                try:
                    yield _cardinal_case1(g, v, z, zpp)
                except _NoFresh:
                    pass
            elif zpp & ~zp == 0:
                yield _g_monotone(E, v, {"Z": zpp, "Zp": zp})
            else:
                try:
                    yield _cardinal_case1(g, v, zpp, zp)
                except _NoFresh:
                    pass


def _r_monotone(E, v: _View, inst) -> tuple:
    g = E.ground
    z, zp, a = inst["Z"], inst["Zp"], inst["a"]
    b = _first(g.full & ~v.G(zp))
    C1 = _res(g, items_of(zp), zp.bit_count())
    C2 = _res(g, [a, b], 1)
    ys, yb = z | 1 << b, zp | 1 << b
    story = (
        f"{g.label(a)} is reusable after {_fmt(g, z)} but not after the larger {_fmt(g, zp)}. C1 takes "
        f"{_fmt(g, zp)}; C2 prefers {g.label(a)} to {g.label(b)}, so {g.label(b)} is chosen from {_fmt(g, yb)} "
        f"but not from {_fmt(g, ys)}."
    )
    return C1, C2, ys, yb, Property.SUB, story


def _r_card_case1(g, v: _View, z: int, zp: int, a: int) -> tuple:
    b = _first(g.full & ~(v.K | z | zp))
    C1 = _res(g, _ranked(zp, z), z.bit_count())
    C2 = _res(g, [a, b], 1)
    ys, yb = z | 1 << b, z | zp | 1 << b
    story = (
        f"{g.label(a)} is reusable after {_fmt(g, z)} but not after the equally large {_fmt(g, zp)}. C1 ranks "
        f"{_fmt(g, zp)} first with quota {z.bit_count()}; C2 prefers {g.label(a)} to {g.label(b)}, so "
        f"{g.label(b)} is chosen from {_fmt(g, yb)} but not from {_fmt(g, ys)}."
    )
    return C1, C2, ys, yb, Property.SUB, story


def _r_cardinal(E, v: _View, inst) -> Iterator[tuple]:
    g = E.ground
    z, zp, a = inst["Z"], inst["Zp"], inst["a"]
    if v.K == TOP_CODE:
        return
    try:
        yield _r_card_case1(g, v, z, zp, a)
        return
    except _NoFresh:
        pass
    for b in items_of(g.full & ~(z | zp)):
        for c in items_of(g.full & ~(z | v.K) & zp):
            zpp = (zp & ~(1 << c)) | 1 << b
            if zpp not in v.code or not v.dom(zpp):
                continue
            for lo, hi in ((z, zpp), (zpp, zp)):
                if v.R(lo) >> a & 1 and not v.R(hi) >> a & 1:
                    try:
                        yield _r_card_case1(g, v, lo, hi, a)
                    except _NoFresh:
                        pass


def _k_disjoint(E, v: _View, inst) -> tuple:
    g = E.ground
    z, a = inst["Z"], inst["a"]
    K = v.K
    if K == TOP_CODE:
        raise _NoFresh
    b = _first(g.full & ~(z | K))
    zp = mask_of(_pick(g, z | 1 << b, z.bit_count()))
    C1 = _res(g, _ranked(zp, z), zp.bit_count())
    C2 = _res(g, [a, b], 1)
    ys, yb = z | 1 << b, z | zp | 1 << b
    story = (
        f"{g.label(a)} lies in K = {_fmt(g, K)} yet is reusable after {_fmt(g, z)}. C1 ranks the disjoint "
        f"{_fmt(g, zp)} first; C2 prefers {g.label(a)} to {g.label(b)}, so {g.label(b)} is chosen from "
        f"{_fmt(g, yb)} but not from {_fmt(g, ys)}."
    )
    return C1, C2, ys, yb, Property.SUB, story


_TLCR_BUILDERS = {
    Condition.G_MONOTONE: _g_monotone,
    Condition.ALL_OR_NOTHING: _all_or_nothing,
    Condition.CARDINAL: _cardinal,
    Condition.R_MONOTONE: _r_monotone,
    Condition.R_CARDINAL_LINEAR: _r_cardinal,
    Condition.K_DISJOINT: _k_disjoint,
}


# ---------------------------------------------------------------------------
# Constructions for the domain and size-monotonicity refinements
# ---------------------------------------------------------------------------


def _tlcr_params(E, headroom):
    cls = classify_tlcr(E, headroom)
    if not cls.is_tlcr:
        raise PreconditionFailed("threshold-linear", "classify the exclusion and use its failed conditions instead")
    return cls.params


def _pi_threshold(E, params) -> Iterator[tuple]:
    g = E.ground
    t, K = params.t, params.K.mask
    if not (t != INF and t > 1):
        return
    for z1 in items_of(g.full & ~K) + items_of(K):
        z = 1 << z1
        try:
            zp = mask_of(_pick(g, z, t, prefer=K))
            a = _first(g.full & ~(z | zp | K))
        except _NoFresh:
            continue
        C1 = separating_orders(g, z, zp)
        C2 = _res(g, [a], 1)
        ys, yb = zp | 1 << a, z | zp | 1 << a
        story = (
            f"threshold t={t} is finite and above 1. The union-of-orders C1 picks {_fmt(g, z)} from {_fmt(g, yb)} "
            f"but {_fmt(g, zp)} (size t) from {_fmt(g, ys)}; C2 takes only {g.label(a)}, which is chosen from the "
            f"larger set only."
        )
        yield C1, C2, ys, yb, Property.SUB, story


def _pi_reuse(E, params, n_max: int) -> Iterator[tuple]:
    g = E.ground
    if params.t != INF:
        return
    K = params.K.mask
    for l in range(2, n_max):
        fresh = params.T_mask(l + 1) & ~params.T_mask(l)
        for a in items_of(fresh):
            try:
                zrest = _pick(g, 1 << a, l - 1, prefer=K)
                z = 1 << a | mask_of(zrest)
                zp = 1 << a | mask_of(_pick(g, z, l, prefer=K))
                b = _first(g.full & ~(z | zp | K))
            except _NoFresh:
                continue
            C1 = separating_orders(g, z, zp)
            C2 = _res(g, [a, b], 1)
            ys, yb = zp | 1 << b, z | zp | 1 << b
            story = (
                f"{g.label(a)} is reusable after {l + 1} picks but not after {l}. The union-of-orders C1 picks "
                f"{_fmt(g, z)} from {_fmt(g, yb)} and {_fmt(g, zp)} from {_fmt(g, ys)}; C2 prefers {g.label(a)} to "
                f"{g.label(b)}, so {g.label(b)} is chosen from the larger set only."
            )
            yield C1, C2, ys, yb, Property.SUB, story


def _sm_reuse(E, params, n_max: int) -> Iterator[tuple]:
    g = E.ground
    K = params.K.mask
    top = n_max if params.t == INF else min(params.t - 1, n_max)
    for n in range(1, top + 1):
        for a in items_of(params.T_mask(n)):
            for b in items_of(g.full & ~(K | 1 << a)):
                try:
                    zl = _pick(g, 1 << a | 1 << b, n)
                except _NoFresh:
                    continue
                z = mask_of(zl)
                c = zl[-1]
                C1 = _res(g, [a] + zl, n)
                C2 = _res(g, [a, b], 1)
                ys, yb = z | 1 << b, z | 1 << a | 1 << b
                story = (
                    f"{g.label(a)} is reusable after {n} picks. C1 ranks {g.label(a)} over {_fmt(g, z)} with quota "
                    f"{n}; C2 prefers {g.label(a)} to {g.label(b)}. From {_fmt(g, ys)} C2 adds {g.label(b)}, but from "
                    f"{_fmt(g, yb)} C1 drops {g.label(c)} for {g.label(a)} and C2 re-picks {g.label(a)}: fewer items."
                )
                yield C1, C2, ys, yb, Property.SM, story


def _sm_threshold(E, params) -> Iterator[tuple]:
    g = E.ground
    t, K = params.t, params.K.mask
    if t == INF or t == 0:
        return
    outside = items_of(g.full & ~K)
    for i, a in enumerate(outside):
        for b in outside[i + 1 :]:
            try:
                zl = _pick(g, 1 << a | 1 << b, t, prefer=K)
            except _NoFresh:
                continue
            z = mask_of(zl)
            c = zl[0]
            C1 = _res(g, zl, t)
            C2 = _res(g, [a, b], 2)
            ys, yb = (z & ~(1 << c)) | 1 << a | 1 << b, z | 1 << a | 1 << b
            story = (
                f"threshold t={t} is finite. C1 takes {_fmt(g, z)} (t items) from {_fmt(g, yb)}, shutting C2 out; "
                f"without {g.label(c)} C1 takes t-1 items and C2 adds {g.label(a)} and {g.label(b)}."
            )
            yield C1, C2, ys, yb, Property.SM, story


def _sv_singleton(E) -> Iterator[tuple]:
    g = E.ground
    K = E.eval_mask(0)
    G = {x: (TOP_CODE if E.eval_mask(1 << x) == TOP_CODE else E.eval_mask(1 << x) | 1 << x) for x in range(g.size)}
    Ex = {x: E.eval_mask(1 << x) for x in range(g.size)}
    # step 1: K must be excluded after any single pick
    for a in range(g.size):
        if Ex[a] == TOP_CODE:
            continue
        missing = (g.full if K == TOP_CODE else K) & ~Ex[a] & ~(1 << a)
        for b in items_of(missing):
            story = f"{g.label(b)} is in K but not excluded after {g.label(a)}: rejected from {{{g.label(b)}}}, chosen with {g.label(a)}."
            yield _res(g, [a], 1), _res(g, [b], 1), 1 << b, 1 << a | 1 << b, Property.SUB, story
    if K == TOP_CODE:
        return
    # step 2: a single pick either shuts everything or excludes just itself and K
    for a in range(g.size):
        if G[a] == TOP_CODE:
            continue
        for b in items_of(Ex[a] & ~(K | 1 << a)):
            for c in items_of(g.full & ~G[a]):
                story = (
                    f"{g.label(a)} excludes the extra item {g.label(b)}; C2 prefers {g.label(b)} to {g.label(c)} so "
                    f"{g.label(c)} is chosen only when {g.label(a)} is present."
                )
                ys, yb = 1 << b | 1 << c, 1 << a | 1 << b | 1 << c
                yield _res(g, [a], 1), _res(g, [b, c], 1), ys, yb, Property.SUB, story
    # step 3: singletons agree on whether everything is shut
    for a in range(g.size):
        if G[a] == TOP_CODE:
            continue
        for b in range(g.size):
            if G[b] != TOP_CODE or b == a:
                continue
            for c in items_of(g.full & ~(K | 1 << a | 1 << b)):
                story = (
                    f"{g.label(b)} shuts everything but {g.label(a)} does not. C1 prefers {g.label(a)} to {g.label(b)}; "
                    f"C2 takes only {g.label(c)}, chosen alongside {g.label(a)} but not from {{{g.label(b)},{g.label(c)}}}."
                )
                ys, yb = 1 << b | 1 << c, 1 << a | 1 << b | 1 << c
                yield _res(g, [a, b], 1), _res(g, [c], 1), ys, yb, Property.SUB, story
    # step 4: items of K stay excluded after picking themselves
    if all(G[x] == TOP_CODE for x in range(g.size)):
        return
    for a in items_of(K):
        if Ex[a] == TOP_CODE or Ex[a] >> a & 1:
            continue
        for b in items_of(g.full & ~K):
            for c in items_of(g.full & ~(1 << a | 1 << b)):
                story = (
                    f"{g.label(a)} is in K yet reusable after picking itself. C1 prefers {g.label(b)} to {g.label(a)}; "
                    f"C2 prefers {g.label(a)} to {g.label(c)}, so {g.label(c)} is chosen only when {g.label(b)} is present."
                )
                ys, yb = 1 << a | 1 << c, 1 << a | 1 << b | 1 << c
                yield _res(g, [b, a], 1), _res(g, [a, c], 1), ys, yb, Property.SUB, story


def _sv_sm_reuse(E) -> Iterator[tuple]:
    g = E.ground
    T = singleton_reuse(E)
    if not T:
        return
    K = E.eval_mask(0)
    for a in items_of(T):
        for b in items_of(g.full & ~(K | 1 << a)):
            for c in items_of(g.full & ~(1 << a | 1 << b)):
                story = (
                    f"{g.label(a)} is reusable after picking itself. C1 prefers {g.label(a)} to {g.label(c)}; C2 prefers "
                    f"{g.label(a)} to {g.label(b)}. Adding {g.label(a)} to {{{g.label(b)},{g.label(c)}}} shrinks the choice."
                )
                ys, yb = 1 << b | 1 << c, 1 << a | 1 << b | 1 << c
                yield _res(g, [a, c], 1), _res(g, [a, b], 1), ys, yb, Property.SM, story


def _sv_sm_threshold(E) -> Iterator[tuple]:
    g = E.ground
    K = E.eval_mask(0)
    free = items_of(g.full & ~K)
    for a, b in zip(free, free[1:]):
        for c in items_of(g.full & ~(1 << a | 1 << b)):
            story = (
                f"every singleton shuts out C2 but {g.label(a)} and {g.label(b)} are open when C1 picks nothing. "
                f"C1 accepts only {g.label(c)}; C2 takes {g.label(a)} and {g.label(b)}. Adding {g.label(c)} to "
                f"{{{g.label(a)},{g.label(b)}}} shrinks the choice to one item."
            )
            ys = 1 << a | 1 << b
            yield _res(g, [c], 1), _res(g, [a, b], 2), ys, ys | 1 << c, Property.SM, story


# ---------------------------------------------------------------------------
# Many-to-one constructions
# ---------------------------------------------------------------------------


def _equiv_excluding(E, P: EquivalencePartition) -> Iterator[tuple]:
    g = E.ground
    for inst in equivalence_violations(E, P):
        z, y = inst["Z"], inst["y"]
        C1 = _mres(g, items_of(z), z.bit_count(), P)
        C2 = _res(g, [y], 1)
        yb = z | 1 << y
        story = (
            f"{g.label(y)} shares a class with a member of {_fmt(g, z)} but is not excluded after it; C2 takes "
            f"{g.label(y)} and the composed choice from {_fmt(g, yb)} holds two equivalent items."
        )
        yield C1, C2, yb, yb, Property.MTO1, story


def _mto1_monotone(E, P: EquivalencePartition) -> Iterator[tuple]:
    g = E.ground
    for inst in equivalence_violations(E, P, EquivCondition.MTO1_MONOTONE):
        z, zp = inst["Z"], inst["Zp"]
        for a in items_of(inst["lost"]):
            C1 = _mres(g, items_of(zp), zp.bit_count(), P)
            C2 = _mres(g, [a], 1, P)
            ys, yb = z | 1 << a, zp | 1 << a
            story = (
                f"{g.label(a)} is excluded after {_fmt(g, z)} but not after the larger feasible {_fmt(g, zp)}. "
                f"{_fmt(g, yb)} is feasible, so every completion must choose {g.label(a)} there but not from {_fmt(g, ys)}."
            )
            yield C1, C2, ys, yb, PI_COMPLETION, story


def _weak_aon(E, P: EquivalencePartition) -> Iterator[tuple]:
    g = E.ground
    for inst in equivalence_violations(E, P, EquivCondition.WEAK_AON):
        z = inst["Z"]
        gz = inst["G"]
        if gz == TOP_CODE or z == 0:
            continue
        low = inst["low"]
        for a in items_of(g.full & ~gz):
            for c in items_of(gz & ~low):
                if P.same_class(a, c):
                    continue
                b = items_of(z)[0]
                C1 = _mres(g, items_of(z), z.bit_count(), P)
                C2 = _mres(g, [c, a], 1, P)
                yb = z | 1 << a | 1 << c
                ys = yb & ~(1 << b)
                story = (
                    f"G({_fmt(g, z)}) sits strictly between {_fmt(g, low)} and everything while {g.label(a)} and "
                    f"{g.label(c)} are unrelated. As in the all-or-nothing case, {g.label(a)} is chosen from "
                    f"{_fmt(g, yb)} but not after dropping {g.label(b)}; all sets involved are feasible."
                )
                yield C1, C2, ys, yb, PI_COMPLETION, story


# ---------------------------------------------------------------------------
# Driver
# ---------------------------------------------------------------------------


def _as_list(x) -> list:
    return [x] if isinstance(x, tuple) else list(x)


def _candidates(E, cond: WitnessCondition, partition, headroom) -> Iterator[tuple]:
    """Yield construction attempts; ``None`` marks an instance that lacked fresh items."""
    if cond.value in {c.value for c in CLASSIFIER_CONDITIONS}:
        c = Condition(cond.value)
        v = _View(E, headroom)
        found = False
        for inst in condition_violations(E, c, _view=v):
            found = True
            try:
                out = _TLCR_BUILDERS[c](E, v, inst)
                got = False
                for cand in _as_list(out):
                    got = True
                    yield cand
                if not got:
                    yield None
            except _NoFresh:
                yield None
        if not found:
            raise ConditionNotViolated(f"exclusion satisfies {cond.value} on the tested subsets")
        return
    g = E.ground
    if cond in (WitnessCondition.PI_DOMAIN_THRESHOLD, WitnessCondition.PI_DOMAIN_REUSE):
        params = _tlcr_params(E, headroom)
        if check_domain_safety(params, "PI", g):
            raise ConditionNotViolated("parameters are safe over path-independent inputs")
        if cond is WitnessCondition.PI_DOMAIN_THRESHOLD:
            if params.t == INF or params.t <= 1:
                raise ConditionNotViolated("threshold is 0, 1 or infinite")
            yield from _pi_threshold(E, params)
        else:
            if params.t != INF:
                raise ConditionNotViolated("reuse condition concerns infinite thresholds")
            yield from _pi_reuse(E, params, g.size)
        return
    if cond in (WitnessCondition.SM_REUSE, WitnessCondition.SM_THRESHOLD):
        params = _tlcr_params(E, headroom)
        if check_sm_safety(params, g):
            raise ConditionNotViolated("parameters are safe for size monotonicity")
        if cond is WitnessCondition.SM_REUSE:
            if not any(r for r in params.reuse):
                raise ConditionNotViolated("no reuse below the threshold")
            yield from _sm_reuse(E, params, g.size)
        else:
            if params.t == INF:
                raise ConditionNotViolated("threshold is infinite")
            yield from _sm_threshold(E, params)
        return
    if cond is WitnessCondition.SV_SINGLETON:
        if check_singleton_profile(E):
            raise ConditionNotViolated("singleton profile holds")
        yield from _sv_singleton(E)
        return
    if cond is WitnessCondition.SV_SM_REUSE:
        if not check_singleton_profile(E):
            raise PreconditionFailed("singleton-profile", "use the sv-singleton construction")
        if check_sv_sm_profile(E, "SV_FIRST"):
            raise ConditionNotViolated("no singleton reuse with two free items")
        yield from _sv_sm_reuse(E)
        return
    if cond is WitnessCondition.SV_SM_THRESHOLD:
        if not sv_first_threshold_gap(E):
            raise ConditionNotViolated("singletons do not all shut out two free items")
        yield from _sv_sm_threshold(E)
        return
    if partition is None:
        raise InvalidParams(f"{cond.value} needs an equivalence partition")
    if cond is WitnessCondition.EQUIVALENCE_EXCLUDING:
        from .contracts import is_equivalence_excluding

        if is_equivalence_excluding(E, partition):
            raise ConditionNotViolated("exclusion is equivalence-excluding")
        yield from _equiv_excluding(E, partition)
        return
    if cond is WitnessCondition.MTO1_MONOTONE:
        if check_equiv_dilation(E, partition, EquivCondition.MTO1_MONOTONE):
            raise ConditionNotViolated("gross exclusion is many-to-one monotonic")
        yield from _mto1_monotone(E, partition)
        return
    if cond is WitnessCondition.WEAK_AON:
        if check_equiv_dilation(E, partition, EquivCondition.WEAK_AON):
            raise ConditionNotViolated("gross exclusion is weakly all-or-nothing")
        yield from _weak_aon(E, partition)
        return
    raise InvalidParams(f"unknown condition {cond!r}")


def synthesize(
    E: ExclusionFunction,
    condition,
    partition: Optional[EquivalencePartition] = None,
    headroom: Optional[int] = None,
) -> Witness:
    """Build a validated counterexample for a violated condition.

    Aliases (``pi-domain``, ``sm``, ``tlcr``) try each member condition in turn.
    """
    if isinstance(condition, str) and condition in ALIASES:
        for c in ALIASES[condition]:
            try:
                return synthesize(E, c, partition, headroom)
            except ConditionNotViolated:
                pass
        raise ConditionNotViolated(f"no member of {condition} is violated")
    cond = WitnessCondition(condition)
    starved = False
    tried = 0
    for cand in _candidates(E, cond, partition, headroom):
        if cand is None:
            starved = True
            continue
        tried += 1
        C1, C2, ys, yb, prop, story = cand
        w = Witness(
            cond.value,
            E,
            C1,
            C2,
            ItemSet.from_mask(ys),
            ItemSet.from_mask(yb),
            prop.value if isinstance(prop, Property) else prop,
            story,
            partition,
        )
        if w.validate():
            return w
    if starved or tried == 0:
        raise InsufficientHeadroom(f"no {cond.value} construction fits in {E.ground.size} items")
    earlier = _earlier_failure(E, cond, headroom)
    if earlier is not None:
        raise PreconditionFailed(earlier, f"the {cond.value} construction assumes it holds")
    raise WitnessConstructionFailed(f"{tried} {cond.value} constructions failed validation")


def _earlier_failure(E, cond: WitnessCondition, headroom) -> Optional[str]:
    """First classifier condition ahead of ``cond`` that ``E`` violates."""
    order = [c.value for c in CLASSIFIER_CONDITIONS]
    if cond.value not in order:
        return None
    for c in CLASSIFIER_CONDITIONS[: order.index(cond.value)]:
        if not condition_holds(E, c, headroom):
            return c.value
    return None


# ---------------------------------------------------------------------------
# Procedure counterexamples
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ProcedureWitness:
    """An input on which a fold differs from a quota procedure."""

    procedure: str
    fold: str
    choices: tuple[ChoiceFunction, ...]
    N: int
    Y: ItemSet
    procedure_output: ItemSet
    fold_output: ItemSet
    narrative: str

    def validate(self) -> bool:
        proc = (procedure_aggregate_quota if self.procedure == "aggregate" else procedure_individual_quota)(self.choices, self.N)
        g = self.choices[0].ground
        labels = quota_labels(g, self.N, len(self.choices) - 1)
        fold = fold_left if self.fold == "left" else fold_right
        return (
            proc(self.Y) == self.procedure_output
            and fold(self.choices, labels)(self.Y) == self.fold_output
            and self.procedure_output != self.fold_output
        )


def procedure_witness(ground: GroundSet, procedure: str, N: int = 3) -> ProcedureWitness:
    """Three choosers where the named procedure and the opposite fold disagree.

    ``Z1`` and ``Z2`` are disjoint, each below ``N`` but jointly above it, and
    a third item follows them.
    """
    if procedure not in ("aggregate", "individual"):
        raise InvalidParams("procedure must be 'aggregate' or 'individual'")
    if N < 2:
        raise InvalidParams("need N >= 2 so two picks below N can exceed it jointly")
    k1 = k2 = N - 1
    need = k1 + k2 + 1
    if ground.size < need:
        raise InsufficientHeadroom(f"procedure witness needs {need} items")
    z1 = list(range(k1))
    z2 = list(range(k1, k1 + k2))
    z3 = k1 + k2
    choices = (_res(ground, z1, k1), _res(ground, z2, k2), _res(ground, [z3], 1))
    Y = ItemSet(z1 + z2 + [z3])
    fold = "left" if procedure == "aggregate" else "right"
    proc = (procedure_aggregate_quota if procedure == "aggregate" else procedure_individual_quota)(choices, N)
    fold_fn = fold_left if fold == "left" else fold_right
    got = fold_fn(choices, quota_labels(ground, N, 2))(Y)
    want = proc(Y)
    story = (
        f"C1 picks {ground.fmt(ItemSet(z1))}, C2 picks {ground.fmt(ItemSet(z2))}, C3 picks {ground.label(z3)}; "
        f"each pick is below N={N} but together they reach it. The {procedure} procedure yields "
        f"{ground.fmt(want)}; {fold} composition with threshold-N labels yields {ground.fmt(got)}."
    )
    return ProcedureWitness(procedure, fold, choices, N, Y, want, got, story)


# ---------------------------------------------------------------------------
# Brute-force search
# ---------------------------------------------------------------------------


def brute_search(
    E: ExclusionFunction,
    prop: Property,
    left: Domain,
    right: Domain,
    exhaustive: bool = True,
    count: int = 500,
    seed: int = 0,
    partition: Optional[EquivalencePartition] = None,
    max_pairs: int = 2_000_000,
    left_family: Optional[Sequence[ChoiceFunction]] = None,
    right_family: Optional[Sequence[ChoiceFunction]] = None,
) -> Optional[Witness]:
    """First violating (C1, C2, Y, Y') in family order then scan order, or None."""
    prop, left, right = Property(prop), Domain(left), Domain(right)
    g = E.ground
    rng = rng_of(seed)
    L = list(left_family) if left_family is not None else family(left, g, exhaustive, count, rng, partition)
    R = list(right_family) if right_family is not None else family(right, g, exhaustive, count, rng, partition)
    if exhaustive:
        total = len(L) * len(R)
        if total > max_pairs:
            raise BudgetExceeded(f"{total} pairs exceed budget {max_pairs}")
    feasible = partition.feasible_table if partition is not None else None
    T1 = np.stack([c.table for c in L])
    T2 = np.stack([c.table for c in R])
    Et = E.table
    if exhaustive:
        i1 = np.repeat(np.arange(len(L)), len(R))
        i2 = np.tile(np.arange(len(R)), len(L))
    else:
        i1 = i2 = np.arange(min(len(L), len(R)))
    step = max(1, _BATCH_ELEMS // max(1, g.n_subsets * 8))
    for s in range(0, len(i1), step):
        a, b = i1[s : s + step], i2[s : s + step]
        comp = compose_tables(T1[a], T2[b], Et)
        bad = np.flatnonzero(~batch_holds(comp, g.size, prop, feasible))
        if len(bad):
            k = int(bad[0])
            y, yp = first_failure(comp[k], g.size, prop, feasible)
            return Witness(
                "search",
                E,
                L[int(a[k])],
                R[int(b[k])],
                ItemSet.from_mask(y),
                ItemSet.from_mask(yp),
                prop.value,
                "found by search: " + _detail(comp[k], y, yp, prop, g),
                partition,
            )
    return None
