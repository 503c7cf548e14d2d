import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from lexichoice.core import (
    INF,
    TOP,
    Capacity,
    Composed,
    Empty,
    EquivalencePartition,
    GroundSet,
    Identity,
    ItemSet,
    LinearOrder,
    Mto1Responsive,
    Responsive,
    TableChoice,
    TableExclusion,
    Tlcr,
    TlcrParams,
    UnderlineEquiv,
    UnionOfOrders,
    decompose,
    from_code,
    to_code,
)
from lexichoice.errors import DomainError, InvalidParams, MissingTableEntry

G5 = GroundSet(5, labels="abcde")


def test_itemset_top_algebra():
    Y = ItemSet([0, 2])
    assert Y - TOP == ItemSet()
    assert (Y | TOP) is TOP
    assert Y - ItemSet([2]) == ItemSet([0])
    assert to_code(TOP) == -1
    assert from_code(-1) is TOP
    assert from_code(5) == ItemSet([0, 2])


def test_ground_set_defaults_and_errors():
    assert GroundSet(5).headroom == 2
    assert GroundSet(1).headroom == 0
    assert GroundSet(0).n_subsets == 1
    with pytest.raises(InvalidParams):
        GroundSet(3, headroom=3)
    with pytest.raises(InvalidParams):
        GroundSet(2, labels="aa")
    with pytest.raises(DomainError):
        G5.mask([7])
    assert G5.mask(["a", "c"]) == 0b101
    assert G5.fmt(TOP) == "X"
    assert G5.fmt(ItemSet([1, 4])) == "{b,e}"


def test_linear_order_validation():
    o = LinearOrder.from_acceptable([2, 0], 3)
    assert o.acceptable == (2, 0)
    assert o.n == 3
    with pytest.raises(InvalidParams):
        LinearOrder((0, 1))
    with pytest.raises(InvalidParams):
        LinearOrder((0, None, 0))


def test_partition_validation():
    g = GroundSet(3)
    with pytest.raises(InvalidParams):
        EquivalencePartition(g, [[0], [0, 1], [2]])
    with pytest.raises(InvalidParams):
        EquivalencePartition(g, [[0], [1]])
    P = EquivalencePartition(g, [[0, 2], [1]])
    assert P.closure_mask(0b001) == 0b101
    assert P.is_feasible_mask(0b011)
    assert not P.is_feasible_mask(0b101)


def test_tlcr_params_validation():
    with pytest.raises(InvalidParams):
        TlcrParams(0, reuse=(ItemSet([1]),))
    with pytest.raises(InvalidParams):
        TlcrParams(INF, reuse=(ItemSet([1, 2]), ItemSet([1])))
    with pytest.raises(InvalidParams):
        TlcrParams(INF, K=ItemSet([1]), reuse=(ItemSet([1]),))
    with pytest.raises(InvalidParams):
        Tlcr(GroundSet(3), TlcrParams(2, reuse=(ItemSet(), ItemSet(), ItemSet())))
    p = TlcrParams("inf", reuse=(ItemSet([0]), ItemSet([0, 1])))
    assert p.t == INF
    assert p.T(0) == ItemSet()
    assert p.T(5) == ItemSet([0, 1])


def test_responsive_choice():
    C = Responsive(G5, LinearOrder.from_acceptable([3, 1, 0], 5), 2)
    assert C(G5.itemset("abcde")) == ItemSet([3, 1])
    assert C(G5.itemset("ace")) == ItemSet([0])
    assert C(ItemSet()) == ItemSet()


def test_union_of_orders():
    C = UnionOfOrders(G5, (LinearOrder.from_acceptable([0, 1], 5), LinearOrder.from_acceptable([0, 2], 5)))
    assert C(G5.itemset("abc")) == ItemSet([0])
    assert C(G5.itemset("bc")) == ItemSet([1, 2])


def test_mto1_responsive_skips_occupied_classes():
    g = GroundSet(4)
    P = EquivalencePartition(g, [[0, 1], [2], [3]])
    C = Mto1Responsive(g, LinearOrder.from_acceptable([0, 1, 2, 3], 4), 2, P)
    assert C(ItemSet([0, 1, 2, 3])) == ItemSet([0, 2])
    assert C(ItemSet([1, 3])) == ItemSet([1, 3])


def test_table_choice_missing_entry():
    g = GroundSet(2)
    C = TableChoice(g, {0: 0, 1: 1})
    with pytest.raises(MissingTableEntry):
        C(ItemSet([1]))
    with pytest.raises(DomainError):
        TableChoice(g, {1: 2})


def test_exclusion_rules():
    assert Identity(G5)(ItemSet([1])) == ItemSet([1])
    assert Empty(G5)(ItemSet([1])) == ItemSet()
    cap = Capacity(G5, 2)
    assert cap(ItemSet([1])) == ItemSet([1])
    assert cap(ItemSet([1, 2])) is TOP
    P = EquivalencePartition(G5, [[0, 2], [1], [3, 4]])
    assert UnderlineEquiv(G5, P)(ItemSet([0, 3])) == ItemSet([0, 2, 3, 4])
    t = Tlcr(G5, TlcrParams(3, ItemSet([4]), (ItemSet([0]), ItemSet([0, 1]))))
    assert t(ItemSet()) == ItemSet([4])
    assert t(ItemSet([0])) == ItemSet([4])
    assert t(ItemSet([0, 2])) == ItemSet([2, 4])
    assert t(ItemSet([0, 1, 2])) is TOP


def test_table_exclusion_missing_and_from_values():
    g = GroundSet(2)
    E = TableExclusion.from_values(g, {(): [], (0,): TOP})
    assert E(ItemSet([0])) is TOP
    with pytest.raises(MissingTableEntry):
        E(ItemSet([1]))


def test_decompose_identity_and_empty():
    g = GroundSet(3)
    sets = [ItemSet.from_mask(m) for m in range(8)]
    d = decompose(Identity(g))
    assert all(d.R(Z) == ItemSet() for Z in sets)
    d = decompose(Empty(g))
    assert all(d.R(Z) == Z for Z in sets)
    d = decompose(Capacity(g, 1))
    assert d.G(ItemSet([0])) is TOP
    assert not d.dom_R(ItemSet([0])) and d.dom_R(ItemSet())


def _orders(n):
    return st.permutations(list(range(n))).flatmap(
        lambda p: st.integers(0, n).map(lambda k: list(p[:k]))
    )


@given(_orders(4), st.integers(0, 4), _orders(4), st.integers(0, 4), st.integers(0, 4))
def test_composition_matches_set_oracle(acc1, q1, acc2, q2, N):
    g = GroundSet(4)
    C1 = Responsive(g, LinearOrder.from_acceptable(acc1, 4), q1)
    C2 = Responsive(g, LinearOrder.from_acceptable(acc2, 4), q2)
    C = Composed(C1, C2, Capacity(g, N))

    def cap(z):
        return z if len(z) < N else oracles.TOP

    ref = oracles.compose(oracles.responsive(acc1, q1), oracles.responsive(acc2, q2), cap)
    for Y in oracles.subsets(range(4)):
        assert set(C(ItemSet(Y))) == set(ref(Y))
    # the vectorised table agrees with pointwise evaluation
    assert all(C.table[m] == C._choose(m) for m in range(16))


@given(st.lists(st.integers(0, 31), min_size=32, max_size=32))
def test_table_exclusion_round_trip_through_codes(values):
    g = GroundSet(5)
    E = TableExclusion(g, {m: (-1 if v == 31 else v) for m, v in enumerate(values)})
    assert np.array_equal(E.table, np.array([(-1 if v == 31 else v) for v in values]))
