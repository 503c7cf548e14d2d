"""Constructors, enumerators and seeded samplers for choice and exclusion families."""
from __future__ import annotations

import enum
import itertools
from typing import Iterable, Iterator, Optional, Union

import numpy as np

from ._bits import items_of, scan_order, subsets_of
from .core import (
    INF,
    ChoiceFunction,
    EquivalencePartition,
    GroundSet,
    ItemSet,
    LinearOrder,
    Mto1Responsive,
    Responsive,
    TableChoice,
    TableExclusion,
    Tlcr,
    TlcrParams,
    UnionOfOrders,
)
from .errors import BudgetExceeded, EnumerationCapExceeded, InvalidParams, SamplingBudgetExceeded

ENUMERATION_CAP = 250_000
EXHAUSTIVE_TABLE_MAX_N = 3

Rng = Union[int, np.random.Generator, None]


class Domain(str, enum.Enum):
    RES = "RES"
    SV_RES = "SV_RES"
    PI_GEN = "PI_GEN"
    CON_SAMPLED = "CON_SAMPLED"
    SUB_SAMPLED = "SUB_SAMPLED"
    MTO1_RES = "MTO1_RES"


def rng_of(seed: Rng) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(0 if seed is None else seed)


def _order(order, ground: GroundSet) -> LinearOrder:
    if isinstance(order, LinearOrder):
        return order
    return LinearOrder.from_acceptable([ground.index(x) for x in order], ground.size)


# ---------------------------------------------------------------------------
# Constructors
# ---------------------------------------------------------------------------


def make_responsive(ground: GroundSet, order, quota: int) -> Responsive:
    """``order`` is a LinearOrder or the acceptable prefix as indices/labels."""
    return Responsive(ground, _order(order, ground), quota)


def make_union_of_orders(ground: GroundSet, orders: Iterable) -> UnionOfOrders:
    return UnionOfOrders(ground, tuple(_order(o, ground) for o in orders))


def make_mto1_responsive(ground: GroundSet, order, quota: int, partition: EquivalencePartition) -> Mto1Responsive:
    return Mto1Responsive(ground, _order(order, ground), quota, partition)


def make_tlcr(params: TlcrParams, ground: GroundSet) -> Tlcr:
    return Tlcr(ground, params)


def constant_empty(ground: GroundSet) -> Responsive:
    return Responsive(ground, LinearOrder.from_acceptable((), ground.size), 0)


# ---------------------------------------------------------------------------
# Enumeration
# ---------------------------------------------------------------------------


def enumerate_responsive(
    ground: GroundSet,
    restrict_acceptable: Optional[ItemSet] = None,
    quotas: Optional[Iterable[int]] = None,
    cap: int = ENUMERATION_CAP,
) -> Iterator[Responsive]:
    """Yield each distinct responsive function once.

    Candidates run lexicographically over (acceptable prefix, quota) and are
    deduplicated by full table.  Only items of ``restrict_acceptable`` may be
    ranked above the marker.
    """
    n = ground.size
    pool = items_of(ground.mask(restrict_acceptable)) if restrict_acceptable is not None else list(range(n))
    qs = sorted(set(range(n + 1) if quotas is None else quotas))
    if any(q < 0 for q in qs):
        raise InvalidParams("quotas must be non-negative")
    n_prefixes = sum(_falling(len(pool), k) for k in range(len(pool) + 1))
    if n_prefixes * len(qs) > cap:
        raise EnumerationCapExceeded(f"{n_prefixes * len(qs)} candidates exceed cap {cap}")
    seen = set()
    for k in range(len(pool) + 1):
        for prefix in itertools.permutations(pool, k):
            order = LinearOrder.from_acceptable(prefix, n)
            for q in qs:
                c = Responsive(ground, order, min(q, n))
                key = c.table.tobytes()
                if key not in seen:
                    seen.add(key)
                    yield c


def _falling(m: int, k: int) -> int:
    out = 1
    for i in range(k):
        out *= m - i
    return out


def enumerate_tables(ground: GroundSet, cap: int = 1 << 16) -> Iterator[np.ndarray]:
    """Every contraction table over the ground set (product of powersets)."""
    n = ground.size
    total = 1
    for m in range(1 << n):
        total <<= m.bit_count()
    if total > cap:
        raise EnumerationCapExceeded(f"{total} tables exceed cap {cap}")
    options = [list(subsets_of(m)) for m in range(1 << n)]
    for combo in itertools.product(*options):
        yield np.array(combo, dtype=np.int64)


# ---------------------------------------------------------------------------
# Samplers
# ---------------------------------------------------------------------------


def random_order(rng: np.random.Generator, n: int, n_acceptable: Optional[int] = None) -> LinearOrder:
    perm = [int(x) for x in rng.permutation(n)]
    k = int(rng.integers(0, n + 1)) if n_acceptable is None else n_acceptable
    return LinearOrder(tuple(perm[:k]) + (None,) + tuple(perm[k:]))


def sample_responsive(ground: GroundSet, seed: Rng = None, quota: Optional[int] = None) -> Responsive:
    rng = rng_of(seed)
    order = random_order(rng, ground.size)
    q = int(rng.integers(0, ground.size + 1)) if quota is None else quota
    return Responsive(ground, order, q)


def sample_union_of_orders(ground: GroundSet, seed: Rng = None, n_orders: Optional[int] = None) -> UnionOfOrders:
    rng = rng_of(seed)
    k = int(rng.integers(1, 4)) if n_orders is None else n_orders
    return UnionOfOrders(ground, tuple(random_order(rng, ground.size) for _ in range(k)))


def sample_mto1_responsive(ground: GroundSet, partition: EquivalencePartition, seed: Rng = None) -> Mto1Responsive:
    rng = rng_of(seed)
    order = random_order(rng, ground.size)
    q = int(rng.integers(0, len(partition.blocks) + 1))
    return Mto1Responsive(ground, order, q, partition)


def sample_consistent(ground: GroundSet, seed: Rng = None, budget: int = 100_000) -> TableChoice:
    """Random consistent table built by increasing input size.

    For each ``Y'`` a uniform random candidate ``S <= Y'`` is drawn and
    rejected unless ``C(Y) == S`` for every ``S <= Y < Y'``.  ``S = Y'`` is
    always admissible, so the budget is only hit by adversarially tiny budgets.
    """
    if ground.size > 4:
        raise InvalidParams("consistent sampling is limited to ground size <= 4")
    rng = rng_of(seed)
    table: dict[int, int] = {}
    draws = 0
    for yp in scan_order(ground.size):
        members = items_of(yp)
        while True:
            draws += 1
            if draws > budget:
                raise SamplingBudgetExceeded(f"no consistent table within {budget} draws")
            bits = rng.integers(0, 2, size=len(members))
            s = sum(1 << x for x, b in zip(members, bits) if b)
            if all(table[y] == s for y in subsets_of(yp) if y != yp and s & ~y == 0):
                table[yp] = s
                break
    return TableChoice(ground, table)


def sample_substitutable(ground: GroundSet, seed: Rng = None) -> TableChoice:
    """Random table whose rejected set grows with the input."""
    rng = rng_of(seed)
    rejected: dict[int, int] = {}
    for yp in scan_order(ground.size):
        lower = 0
        for x in items_of(yp):
            lower |= rejected[yp & ~(1 << x)]
        free = items_of(yp & ~lower)
        bits = rng.integers(0, 2, size=len(free))
        rejected[yp] = lower | sum(1 << x for x, b in zip(free, bits) if b)
    return TableChoice(ground, {y: y & ~r for y, r in rejected.items()})


def sample_tlcr_params(ground: GroundSet, seed: Rng = None) -> TlcrParams:
    """Random valid threshold-linear parameters over the ground set."""
    rng = rng_of(seed)
    n = ground.size
    choices = list(range(0, n + 1)) + [INF, INF]
    t = choices[int(rng.integers(0, len(choices)))]
    K = int(rng.integers(0, 1 << n)) & int(rng.integers(0, 1 << n))
    reuse = []
    if t != 0:
        cur = 0
        rest = ground.full & ~K
        for _ in range(min(t, n)):
            cur |= rest & int(rng.integers(0, 1 << n)) & int(rng.integers(0, 1 << n))
            reuse.append(ItemSet.from_mask(cur))
    return TlcrParams(t, ItemSet.from_mask(K), tuple(reuse))


def sample_table_exclusion(ground: GroundSet, seed: Rng = None, top_prob: float = 0.2) -> TableExclusion:
    rng = rng_of(seed)
    entries = {}
    for z in range(ground.n_subsets):
        if rng.random() < top_prob:
            entries[z] = -1
        else:
            entries[z] = int(rng.integers(0, ground.n_subsets))
    return TableExclusion(ground, entries)


# ---------------------------------------------------------------------------
# Domain families for verification drivers
# ---------------------------------------------------------------------------


def _sampler(domain: Domain, ground: GroundSet, partition: Optional[EquivalencePartition]):
    if domain is Domain.RES:
        return lambda rng: sample_responsive(ground, rng)
    if domain is Domain.SV_RES:
        return lambda rng: sample_responsive(ground, rng, quota=1)
    if domain is Domain.PI_GEN:
        return lambda rng: sample_union_of_orders(ground, rng)
    if domain is Domain.CON_SAMPLED:
        return lambda rng: sample_consistent(ground, rng)
    if domain is Domain.SUB_SAMPLED:
        return lambda rng: sample_substitutable(ground, rng)
    if domain is Domain.MTO1_RES:
        if partition is None:
            raise InvalidParams("MTO1_RES needs a partition")
        return lambda rng: sample_mto1_responsive(ground, partition, rng)
    raise InvalidParams(f"unknown domain {domain!r}")


def sample_family(
    domain: Domain,
    ground: GroundSet,
    count: int,
    seed: Rng = None,
    partition: Optional[EquivalencePartition] = None,
) -> list[ChoiceFunction]:
    rng = rng_of(seed)
    draw = _sampler(Domain(domain), ground, partition)
    return [draw(rng) for _ in range(count)]


def exhaustive_family(
    domain: Domain,
    ground: GroundSet,
    partition: Optional[EquivalencePartition] = None,
    cap: int = ENUMERATION_CAP,
) -> list[ChoiceFunction]:
    """Whole family as a list; table-defined classes only at tiny sizes."""
    domain = Domain(domain)
    if domain is Domain.RES:
        return list(enumerate_responsive(ground, cap=cap))
    if domain is Domain.SV_RES:
        return list(enumerate_responsive(ground, quotas=[1], cap=cap))
    if domain is Domain.MTO1_RES:
        if partition is None:
            raise InvalidParams("MTO1_RES needs a partition")
        return _enumerate_mto1(ground, partition, cap)
    if ground.size > EXHAUSTIVE_TABLE_MAX_N:
        raise BudgetExceeded(f"exhaustive {domain.value} is limited to ground size <= {EXHAUSTIVE_TABLE_MAX_N}")
    from .props import Property, table_holds

    prop = {
        Domain.PI_GEN: Property.PI,
        Domain.CON_SAMPLED: Property.CON,
        Domain.SUB_SAMPLED: Property.SUB,
    }[domain]
    return [TableChoice.from_array(ground, t) for t in enumerate_tables(ground) if table_holds(t, ground.size, prop)]


def _enumerate_mto1(ground: GroundSet, partition: EquivalencePartition, cap: int) -> list[ChoiceFunction]:
    n = ground.size
    if sum(_falling(n, k) for k in range(n + 1)) * (n + 1) > cap:
        raise EnumerationCapExceeded("many-to-one enumeration exceeds cap")
    seen, out = set(), []
    for k in range(n + 1):
        for prefix in itertools.permutations(range(n), k):
            order = LinearOrder.from_acceptable(prefix, n)
            for q in range(len(partition.blocks) + 1):
                c = Mto1Responsive(ground, order, q, partition)
                key = c.table.tobytes()
                if key not in seen:
                    seen.add(key)
                    out.append(c)
    return out


def family(
    domain: Domain,
    ground: GroundSet,
    exhaustive: bool,
    count: int = 0,
    seed: Rng = None,
    partition: Optional[EquivalencePartition] = None,
) -> list[ChoiceFunction]:
    if exhaustive:
        return exhaustive_family(domain, ground, partition)
    return sample_family(domain, ground, count, seed, partition)
