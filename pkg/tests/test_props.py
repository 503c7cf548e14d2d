import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from lexichoice.compose import lex_compose
from lexichoice.core import (
    INF,
    TOP,
    Capacity,
    Empty,
    EquivalencePartition,
    GroundSet,
    Identity,
    ItemSet,
    TableChoice,
    TableExclusion,
    Tlcr,
    TlcrParams,
)
from lexichoice.errors import BudgetExceeded, InsufficientHeadroom, InvalidParams
from lexichoice.families import Domain, sample_responsive, sample_table_exclusion, sample_tlcr_params
from lexichoice.props import (
    CLASSIFIER_CONDITIONS,
    Condition,
    Property,
    SafetyDomain,
    SvSide,
    check_choice,
    check_domain_safety,
    check_singleton_profile,
    check_sm_safety,
    check_sv_sm_profile,
    classify_tlcr,
    compose_tables,
    condition_holds,
    singleton_reuse,
    verify_preservation,
    violates_at,
)

G3 = GroundSet(3)
G5 = GroundSet(5, labels="abcde")
SETS3 = list(oracles.subsets(range(3)))


@st.composite
def choice_tables(draw, n=3):
    out = []
    for m in range(1 << n):
        sub = draw(st.integers(0, (1 << n) - 1)) & m
        out.append(sub)
    return np.array(out, dtype=np.int64)


def _as_oracle(table):
    return lambda Y: frozenset(ItemSet.from_mask(int(table[ItemSet(Y).mask])))


@given(choice_tables())
def test_property_checks_match_set_oracle(table):
    C = TableChoice.from_array(G3, table)
    f = _as_oracle(table)
    assert check_choice(C, Property.PI).holds == oracles.is_pi(f, range(3))
    assert check_choice(C, Property.SUB).holds == oracles.is_sub(f, range(3))
    assert check_choice(C, Property.CON).holds == oracles.is_con(f, range(3))
    assert check_choice(C, Property.SM).holds == oracles.is_sm(f, range(3))


@given(choice_tables())
def test_reported_witness_really_fails(table):
    C = TableChoice.from_array(G3, table)
    for prop in (Property.PI, Property.SUB, Property.CON, Property.SM):
        v = check_choice(C, prop)
        if not v.holds:
            Y, Yp, detail = v.witness
            assert violates_at(C, prop, Y, Yp)
            assert detail


def test_many_to_one_check():
    P = EquivalencePartition(G3, [[0, 1], [2]])
    ok = TableChoice.from_function(G3, lambda m: m & -m)
    bad = TableChoice.from_function(G3, lambda m: m)
    assert check_choice(ok, Property.MTO1, P).holds
    v = check_choice(bad, Property.MTO1, P)
    assert not v.holds and v.witness[0] == ItemSet([0, 1])
    with pytest.raises(InvalidParams):
        check_choice(bad, Property.MTO1)


def test_check_size_budget():
    with pytest.raises(BudgetExceeded):
        check_choice(TableChoice.from_function(GroundSet(13, headroom=2), lambda m: m), Property.SUB)


@given(st.integers(0, 2**32 - 1), st.integers(0, 2**32 - 1), st.integers(0, 2**32 - 1))
def test_compose_tables_matches_composed(s1, s2, s3):
    C1, C2 = sample_responsive(G5, s1), sample_responsive(G5, s2)
    E = sample_table_exclusion(G5, s3)
    batch = compose_tables(C1.table[None, :], C2.table[None, :], E.table)
    assert np.array_equal(batch[0], lex_compose(C1, C2, E).table)


@given(st.integers(0, 2**32 - 1))
def test_tlcr_matches_set_oracle(seed):
    p = sample_tlcr_params(G5, seed)
    E = Tlcr(G5, p)
    levels = [frozenset()] + [frozenset(r) for r in p.reuse]
    ref = oracles.tlcr(p.t, frozenset(p.K), levels if p.reuse else [])
    for Z in oracles.subsets(range(5)):
        got = E(ItemSet(Z))
        want = ref(Z)
        assert (got is TOP) if want == oracles.TOP else set(got) == set(want)


@given(st.integers(0, 2**32 - 1))
def test_classifier_recovers_tlcr_on_tested_sets(seed):
    p = sample_tlcr_params(G5, seed)
    E = Tlcr(G5, p)
    cls = classify_tlcr(E)
    assert cls.is_tlcr and not cls.failed_conditions
    rebuilt = Tlcr(G5, cls.params)
    for m in range(32):
        if m.bit_count() <= cls.max_tested_size:
            assert rebuilt.eval_mask(m) == E.eval_mask(m)


def test_classifier_headroom_and_caveats():
    cls = classify_tlcr(Empty(G5))
    assert cls.is_tlcr and cls.finite_scale and cls.caveats
    assert classify_tlcr(Capacity(G5, 2)).params.t == 2
    with pytest.raises(InsufficientHeadroom):
        classify_tlcr(Identity(G5), headroom=5)


def _table(fn, g=G5):
    return TableExclusion.from_function(g, fn)


def test_each_condition_can_fail_alone():
    a, b = 1, 2
    cases = {
        Condition.G_MONOTONE: lambda z: TOP if z.bit_count() == 1 else z,
        Condition.ALL_OR_NOTHING: lambda z: (
            z if z.bit_count() <= 1 else (a | b | 4 if z == a | b else z) if z.bit_count() == 2 else TOP
        ),
        Condition.CARDINAL: lambda z: TOP if (z & a or z.bit_count() >= 2) else z,
    }
    for cond, fn in cases.items():
        E = _table(lambda z, fn=fn: -1 if fn(z) is TOP else fn(z))
        failed = {c for c in CLASSIFIER_CONDITIONS if not condition_holds(E, c)}
        assert failed == {cond}


def test_domain_safety_arithmetic():
    assert check_domain_safety(TlcrParams(0), SafetyDomain.PI)
    assert check_domain_safety(TlcrParams(1), SafetyDomain.PI)
    assert not check_domain_safety(TlcrParams(2), SafetyDomain.PI, G5)
    assert check_domain_safety(TlcrParams(INF, reuse=(ItemSet(), ItemSet([0]))), SafetyDomain.PI, G5)
    assert not check_domain_safety(TlcrParams(INF, reuse=(ItemSet(), ItemSet(), ItemSet([0]))), SafetyDomain.PI, G5)
    assert not check_domain_safety(TlcrParams(1), SafetyDomain.SUB, G5)
    assert check_domain_safety(TlcrParams(INF), SafetyDomain.SUB, G5)
    assert check_domain_safety(TlcrParams(3), SafetyDomain.RES, G5)


def test_sm_safety():
    assert check_sm_safety(TlcrParams(INF), G5)
    assert not check_sm_safety(TlcrParams(3), G5)
    assert check_sm_safety(TlcrParams(3, K=G5.itemset("abcd")), G5)
    assert not check_sm_safety(TlcrParams(INF, reuse=(ItemSet([0]),)), G5)


def test_singleton_profile():
    assert singleton_reuse(Identity(G5)) == 0
    assert singleton_reuse(Empty(G5)) == G5.full
    assert check_singleton_profile(Capacity(G5, 1))
    odd = _table(lambda z: 0b11 if z == 1 else z)
    assert not check_singleton_profile(odd)
    assert check_sv_sm_profile(Identity(G5), SvSide.SV_FIRST)
    assert not check_sv_sm_profile(Empty(G5), SvSide.SV_FIRST)
    assert check_sv_sm_profile(Identity(G5), SvSide.SV_SECOND)


def test_preservation_driver_exhaustive_and_sampled():
    g = GroundSet(3)
    rep = verify_preservation(Identity(g), Property.SUB, Domain.RES, Domain.RES)
    assert rep.passed and rep.pairs_checked == 23 * 23
    rep = verify_preservation(Capacity(G5, 2), Property.PI, Domain.PI_GEN, Domain.PI_GEN, exhaustive=False, count=300, seed=1)
    assert not rep.passed and rep.failures
    f = rep.failures[0]
    assert violates_at(lex_compose(f.C1, f.C2, Capacity(G5, 2)), Property.PI, f.Y, f.Yp)
    with pytest.raises(InvalidParams):
        verify_preservation(Identity(g), Property.MTO1, Domain.RES, Domain.RES)


def test_thread_count_does_not_change_results(monkeypatch):
    E = Capacity(G5, 2)
    runs = []
    for k in ("1", "4"):
        monkeypatch.setenv("LEXICHOICE_THREADS", k)
        rep = verify_preservation(E, Property.SUB, Domain.RES, Domain.RES, exhaustive=False, count=2000, seed=5)
        runs.append((rep.n_failures, [(x.index, x.Y, x.Yp) for x in rep.failures]))
    assert runs[0] == runs[1]
