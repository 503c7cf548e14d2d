"""Shared instance builders for the module and acceptance tests."""
from lexichoice.core import (
    INF,
    EquivalencePartition,
    GroundSet,
    ItemSet,
    LinearOrder,
    Mto1Responsive,
    Responsive,
    TableExclusion,
    Tlcr,
    TlcrParams,
)
from lexichoice.families import rng_of
from lexichoice.props import Condition

A, B, C = 1, 2, 4


def _table(g, fn):
    return TableExclusion.from_function(g, lambda z: -1 if fn(z) is None else fn(z))


def single_violation_battery(g: GroundSet) -> dict:
    """Six exclusion tables on five items, each breaking one classifier condition.

    ``None`` stands for TOP.  Sets of size three and up are TOP except in the
    first table, so the tested window (sizes up to three) sees every value.
    """
    size = lambda z: z.bit_count()
    return {
        Condition.G_MONOTONE: _table(g, lambda z: None if size(z) == 1 else z),
        Condition.ALL_OR_NOTHING: _table(
            g, lambda z: z if size(z) <= 1 else ((A | B | C) if z == A | B else z) if size(z) == 2 else None
        ),
        Condition.CARDINAL: _table(g, lambda z: None if (z & A or size(z) >= 2) else z),
        Condition.R_MONOTONE: _table(
            g, lambda z: z if size(z) == 0 else (z & ~A) if size(z) == 1 else z if size(z) == 2 else None
        ),
        Condition.R_CARDINAL_LINEAR: _table(
            g, lambda z: z if size(z) <= 1 else B if z == A | B else z if size(z) == 2 else None
        ),
        Condition.K_DISJOINT: _table(g, lambda z: (z | A if not z & A else z & ~A) if size(z) <= 2 else None),
    }


def random_mto1_instance(seed):
    """Six items in three classes, a threshold-linear E on feasible sets, responsive inputs.

    Returns ``(C1, C2, C1bar, C2bar, E, P)``; the completions share order and
    quota with the many-to-one inputs.  When ``t >= 2`` every multi-item
    class lies in ``K`` so that ``E`` excludes partners of chosen items.
    """
    rng = rng_of(seed)
    g = GroundSet(6)
    labels = [0, 1, 2] + [int(x) for x in rng.integers(0, 3, size=3)]
    rng.shuffle(labels)
    P = EquivalencePartition(g, [[i for i in range(6) if labels[i] == k] for k in range(3)])
    t = [0, 1, 2, 3, INF][int(rng.integers(0, 5))]
    K = 0
    if t not in (0, 1):
        for blk in P.blocks:
            if len(blk) > 1:
                K |= blk.mask
    K |= int(rng.integers(0, 64)) & int(rng.integers(0, 64))
    reuse = []
    if t != 0:
        cur = 0
        for _ in range(3 if t == INF else min(t, 6)):
            cur |= (g.full & ~K) & int(rng.integers(0, 64)) & int(rng.integers(0, 64))
            reuse.append(ItemSet.from_mask(cur))
    base = Tlcr(g, TlcrParams(t, ItemSet.from_mask(K), tuple(reuse)))
    feas = P.feasible_table
    E = TableExclusion(g, {m: (base.eval_mask(m) if feas[m] else int(rng.integers(-1, 64))) for m in range(64)})
    orders = [
        LinearOrder.from_acceptable([int(x) for x in rng.permutation(6)[: int(rng.integers(0, 7))]], 6) for _ in range(2)
    ]
    qs = [int(rng.integers(0, 4)) for _ in range(2)]
    C1, C2 = (Mto1Responsive(g, o, q, P) for o, q in zip(orders, qs))
    C1bar, C2bar = (Responsive(g, o, q) for o, q in zip(orders, qs))
    return C1, C2, C1bar, C2bar, E, P
