"""Many-to-one machinery: feasibility, completions and equivalence-aware exclusion checks."""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterator, Optional

import numpy as np

from ._bits import TOP_CODE, items_of, scan_order
from .core import (
    ChoiceFunction,
    EquivalencePartition,
    ExclusionFunction,
    GroundSet,
    ItemSet,
    TableChoice,
    TableExclusion,
    Tlcr,
    TlcrParams,
)
from .errors import BudgetExceeded, DomainError, PreconditionFailed
from .props import Property, TlcrClassification, _classify, _View, check_choice


class EquivCondition(str, enum.Enum):
    MTO1_MONOTONE = "MTO1_MONOTONE"
    WEAK_AON = "WEAK_AON"


@dataclass(frozen=True, eq=False)
class CompletionPair:
    base: ChoiceFunction
    completion: ChoiceFunction
    partition: EquivalencePartition

    def __post_init__(self):
        if not completes(self.completion, self.base, self.partition):
            raise DomainError("completion disagrees with the base function on a feasible output")


def is_feasible(Z, P: EquivalencePartition) -> bool:
    return P.is_feasible_mask(Z.mask if isinstance(Z, ItemSet) else P.ground.mask(Z))


def completes(Cbar: ChoiceFunction, C: ChoiceFunction, P: EquivalencePartition) -> bool:
    """Wherever ``Cbar`` chooses a feasible set it must agree with ``C``."""
    if Cbar.ground.size != C.ground.size:
        raise DomainError("functions live on different ground sets")
    tb, tc = Cbar.table, C.table
    feas = P.feasible_table[tb]
    return bool(np.all(tb[feas] == tc[feas]))


def _feasible_sets(P: EquivalencePartition) -> list[int]:
    feas = P.feasible_table
    return [m for m in scan_order(P.ground.size) if feas[m]]


def _equiv_excluding_violations(E: ExclusionFunction, P: EquivalencePartition) -> Iterator[dict]:
    for z in _feasible_sets(P):
        e = E.eval_mask(z)
        if e == TOP_CODE:
            continue
        missing = P.closure_mask(z) & ~(z | e)
        for y in items_of(missing):
            x = next(i for i in items_of(z) if P.same_class(i, y))
            yield {"Z": z, "y": y, "x": x}


def is_equivalence_excluding(E: ExclusionFunction, P: EquivalencePartition) -> bool:
    """Every partner of a chosen item is excluded, checked on all feasible sets."""
    return next(_equiv_excluding_violations(E, P), None) is None


def _low(v: _View, P: EquivalencePartition, z: int) -> int:
    return TOP_CODE if v.K == TOP_CODE else P.closure_mask(z) | v.K


def _dilation_violations(E, P, cond: EquivCondition, headroom) -> Iterator[dict]:
    v = _View(E, headroom, feasible=P.feasible_table)
    g = E.ground
    if cond is EquivCondition.MTO1_MONOTONE:
        for z in v.sets:
            gz = v.G(z)
            for zp in v.sets:
                if zp == z or z & ~zp:
                    continue
                gzp = v.G(zp)
                if gzp == TOP_CODE:
                    continue
                lost = (g.full if gz == TOP_CODE else gz) & ~gzp
                if lost:
                    yield {"Z": z, "Zp": zp, "lost": lost}
        return
    for z in v.sets:
        gz, low = v.G(z), _low(v, P, z)
        if low == TOP_CODE:
            if gz != TOP_CODE:
                yield {"Z": z, "G": gz, "low": low}
            continue
        outside = items_of(g.full & ~low)
        classes = {P.class_of(x) for x in outside}
        if len(classes) >= 2:
            ok = gz == TOP_CODE or gz == low
        else:
            ok = gz == TOP_CODE or low & ~gz == 0
        if not ok:
            yield {"Z": z, "G": gz, "low": low}


def equivalence_violations(
    E: ExclusionFunction,
    P: EquivalencePartition,
    condition: Optional[EquivCondition] = None,
    headroom: Optional[int] = None,
) -> Iterator[dict]:
    """Violation instances in scan order.

    Without ``condition`` these are failures of equivalence exclusion
    ``{Z, y, x}``; otherwise failures of the named gross-exclusion condition.
    """
    if condition is None:
        return _equiv_excluding_violations(E, P)
    return _dilation_violations(E, P, EquivCondition(condition), headroom)


def check_equiv_dilation(
    E: ExclusionFunction, P: EquivalencePartition, condition: EquivCondition, headroom: Optional[int] = None
) -> bool:
    return next(_dilation_violations(E, P, EquivCondition(condition), headroom), None) is None


def classify_mto1_tlcr(E: ExclusionFunction, P: EquivalencePartition, headroom: Optional[int] = None) -> TlcrClassification:
    """Threshold-linear classification with every quantifier over feasible sets."""
    return _classify(_View(E, headroom, feasible=P.feasible_table))


def build_overline_E(params: TlcrParams, ground: GroundSet) -> Tlcr:
    params.validate(ground)
    return Tlcr(ground, params)


def verify_lemma_mto1(
    C1: ChoiceFunction,
    C2: ChoiceFunction,
    C1bar: ChoiceFunction,
    C2bar: ChoiceFunction,
    E: ExclusionFunction,
    P: EquivalencePartition,
    headroom: Optional[int] = None,
) -> bool:
    """Check that composing the completions under the unrestricted exclusion completes the composition."""
    from .compose import lex_compose

    for name, C in (("C1-many-to-one", C1), ("C2-many-to-one", C2)):
        if not check_choice(C, Property.MTO1, P).holds:
            raise PreconditionFailed(name)
    if not is_equivalence_excluding(E, P):
        raise PreconditionFailed("equivalence-excluding")
    cls = classify_mto1_tlcr(E, P, headroom)
    if not cls.is_tlcr:
        raise PreconditionFailed("mto1-tlcr", ", ".join(c.value for c in cls.failed_conditions))
    if not completes(C1bar, C1, P):
        raise PreconditionFailed("C1bar-completes")
    if not completes(C2bar, C2, P):
        raise PreconditionFailed("C2bar-completes")
    if not check_choice(C2bar, Property.CON).holds:
        raise PreconditionFailed("consistency")
    Ebar = build_overline_E(cls.params, E.ground)
    return completes(lex_compose(C1bar, C2bar, Ebar), lex_compose(C1, C2, E), P)


# ---------------------------------------------------------------------------
# Completion search
# ---------------------------------------------------------------------------


def find_pi_completion(
    C: ChoiceFunction, P: EquivalencePartition, max_n: int = 5, node_budget: int = 2_000_000
) -> Optional[TableChoice]:
    """A path-independent completion of ``C``, or None when none exists.

    Backtracks over sets in scan order.  At each set the candidates are
    ``C(Y)`` and the infeasible subsets of ``Y``; substitutes and consistency
    against every already-assigned subset prune the tree.
    """
    g = C.ground
    n = g.size
    if n > max_n:
        raise BudgetExceeded(f"completion search limited to {max_n} items")
    order = list(scan_order(n))
    base = C.table
    feas = P.feasible_table
    subs = {y: [s for s in order if s & ~y == 0 and s != y] for y in order}
    cand = {}
    for y in order:
        opts = [int(base[y])]
        s = y
        while s:
            if not feas[s]:
                opts.append(s)
            s = (s - 1) & y
        cand[y] = sorted(set(opts), key=lambda m: (m != base[y], m.bit_count(), m))
    assign: dict[int, int] = {}
    nodes = 0

    def ok(y: int, out: int) -> bool:
        for s in subs[y]:
            o = assign[s]
            if out & s & ~o:
                return False  # rejected from s, chosen from y
            if out & ~s == 0 and o != out:
                return False
        return True

    def rec(i: int) -> bool:
        nonlocal nodes
        if i == len(order):
            return True
        y = order[i]
        for out in cand[y]:
            nodes += 1
            if nodes > node_budget:
                raise BudgetExceeded("completion search exceeded its node budget")
            if ok(y, out):
                assign[y] = out
                if rec(i + 1):
                    return True
                del assign[y]
        return False

    if not rec(0):
        return None
    arr = np.array([assign[m] for m in range(g.n_subsets)], dtype=np.int64)
    return TableChoice.from_array(g, arr)


# ---------------------------------------------------------------------------
# The worked example with three branches
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Example6:
    ground: GroundSet
    partition: EquivalencePartition
    a: int
    b: int
    c: int
    E: TableExclusion
    literal: bool

    def completion(self, C1: ChoiceFunction, C2: ChoiceFunction) -> TableChoice:
        """The three-branch completion of the composition of ``C1`` and ``C2``."""
        from .compose import lex_compose

        C = lex_compose(C1, C2, self.E)
        t = C.table.copy()
        ac = 1 << self.a | 1 << self.c
        if C.eval_mask(self.ground.full) >> self.a & 1 and C.eval_mask(ac) == 1 << self.c:
            t[ac] = ac
        return TableChoice.from_array(self.ground, t)


def build_example6(
    ground: GroundSet, partition: EquivalencePartition, a=None, b=None, c=None, literal: bool = False
) -> Example6:
    """Exclusion jumping from its empty-set value straight to one equivalence class.

    Branches on how ``I_a`` relates to ``I_Z``: disjoint, equal, or strictly
    inside.  ``literal=True`` uses ``ground - {a}`` on the disjoint branch;
    the default uses ``Z | K`` with ``K = ground - {a, b, c}``, and the
    equal branch adds ``K``.  Infeasible sets map to TOP.
    """
    pick = lambda x, d: d if x is None else ground.index(x)
    a, b, c = pick(a, 0), pick(b, 1), pick(c, 2)
    if len({a, b, c}) != 3:
        raise DomainError("a, b and c must be distinct items")
    Ia = partition.closure_mask(1 << a)
    if Ia != (1 << a | 1 << c) or partition.same_class(a, b):
        raise DomainError("need a ~ c with I_a = {a, c} and b unrelated to a")
    K = ground.full & ~(1 << a | 1 << b | 1 << c)
    feas = partition.feasible_table

    def value(z: int) -> int:
        if not feas[z]:
            return TOP_CODE
        Iz = partition.closure_mask(z)
        if Ia & Iz == 0:
            return ground.full & ~(1 << a) if literal else z | K
        if Iz == Ia:
            return Ia if literal else Ia | K
        return TOP_CODE

    return Example6(ground, partition, a, b, c, TableExclusion.from_function(ground, value), literal)
