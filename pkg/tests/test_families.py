import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from lexichoice.core import EquivalencePartition, GroundSet, ItemSet
from lexichoice.errors import EnumerationCapExceeded, InvalidParams
from lexichoice.families import (
    Domain,
    enumerate_responsive,
    enumerate_tables,
    exhaustive_family,
    family,
    sample_consistent,
    sample_family,
    sample_mto1_responsive,
    sample_substitutable,
    sample_table_exclusion,
    sample_tlcr_params,
)
from lexichoice.props import Property, check_choice

# distinct responsive functions per ground size: (all quotas, quota 1), counted
# by brute force over frozensets in a standalone script
RESPONSIVE_COUNTS = {0: (1, 1), 1: (2, 2), 2: (6, 5), 3: (23, 16), 4: (104, 65), 5: (547, 326)}


@pytest.mark.parametrize("n", sorted(RESPONSIVE_COUNTS))
def test_responsive_counts(n):
    g = GroundSet(n)
    all_q, one_q = RESPONSIVE_COUNTS[n]
    assert len(list(enumerate_responsive(g))) == all_q
    assert len(list(enumerate_responsive(g, quotas=[1]))) == one_q


def test_responsive_count_matches_set_oracle_at_three():
    seen = set()
    items = range(3)
    for k in range(4):
        for prefix in itertools.permutations(items, k):
            for q in range(4):
                f = oracles.responsive(prefix, q)
                seen.add(tuple(f(Y) for Y in oracles.subsets(items)))
    assert len(seen) == RESPONSIVE_COUNTS[3][0]


def test_enumeration_cap_and_bad_quota():
    with pytest.raises(EnumerationCapExceeded):
        list(enumerate_responsive(GroundSet(6), cap=100))
    with pytest.raises(InvalidParams):
        list(enumerate_responsive(GroundSet(2), quotas=[-1]))
    with pytest.raises(EnumerationCapExceeded):
        list(enumerate_tables(GroundSet(4)))


def test_restricted_acceptable_items():
    g = GroundSet(4)
    for C in enumerate_responsive(g, restrict_acceptable=ItemSet([0, 1])):
        assert C(ItemSet([2, 3])) == ItemSet()


def test_exhaustive_pi_family_matches_oracle():
    g = GroundSet(2)
    fast = {tuple(C.table) for C in exhaustive_family(Domain.PI_GEN, g)}
    sets = list(oracles.subsets(range(2)))
    count = 0
    for combo in itertools.product(*[list(oracles.subsets(Y)) for Y in sets]):
        table = dict(zip(sets, combo))
        if oracles.is_pi(table.__getitem__, range(2)):
            count += 1
    assert len(fast) == count


def test_sampled_families_are_reproducible():
    g = GroundSet(4)
    a = sample_family(Domain.RES, g, 5, seed=3)
    b = sample_family(Domain.RES, g, 5, seed=3)
    assert [tuple(x.table) for x in a] == [tuple(x.table) for x in b]
    assert len(family(Domain.SV_RES, g, exhaustive=True)) == RESPONSIVE_COUNTS[4][1]


def test_mto1_family_needs_partition():
    with pytest.raises(InvalidParams):
        sample_family(Domain.MTO1_RES, GroundSet(3), 2)


@given(st.integers(0, 2**32 - 1))
def test_sampled_consistent_is_consistent(seed):
    C = sample_consistent(GroundSet(4), seed)
    assert check_choice(C, Property.CON).holds


@given(st.integers(0, 2**32 - 1))
def test_sampled_substitutable_is_substitutable(seed):
    C = sample_substitutable(GroundSet(4), seed)
    assert check_choice(C, Property.SUB).holds


@given(st.integers(0, 2**32 - 1))
def test_sampled_mto1_is_many_to_one(seed):
    g = GroundSet(5)
    P = EquivalencePartition(g, [[0, 3], [1], [2, 4]])
    C = sample_mto1_responsive(g, P, seed)
    assert check_choice(C, Property.MTO1, P).holds


@given(st.integers(0, 2**32 - 1))
def test_sampled_tlcr_params_are_valid(seed):
    g = GroundSet(5)
    p = sample_tlcr_params(g, seed)
    p.validate(g)
    for a, b in zip(p.reuse, p.reuse[1:]):
        assert a.mask & ~b.mask == 0
        assert not a.mask & p.K.mask


@given(st.integers(0, 2**32 - 1))
def test_sampled_table_exclusion_covers_every_set(seed):
    E = sample_table_exclusion(GroundSet(3), seed)
    assert E.table.shape == (8,)
    assert np.all((E.table >= -1) & (E.table < 8))
