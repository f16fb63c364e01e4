import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from limitlab import kernel as K
from limitlab import learners as L
from limitlab import texts as T

P = T.PAUSE
U, F = K.Union, K.Fin


def test_tail_union_examples():
    M = L.tail_union_learner()
    assert M.step(()) == K.Tail(0)
    assert M.step((3, 1)) == U(F({1, 3}), K.Tail(4))
    assert M.step((0, P, 0)) == U(F({0}), K.Tail(1))


def test_range_examples():
    M = L.range_learner()
    assert M.step(()) == F(())
    assert M.step((2, 2, P)) == F({2})
    assert M.step((5, 1)) == F({1, 5})


def test_cofinite_examples():
    M = L.cofinite_learner()
    assert M.step((2,)) == U(F(()), K.Tail(2))
    assert M.step((0,)) == K.Tail(0)
    assert M.step((0, P, P)) == K.Tail(0)
    assert M.step(()) == K.Tail(0)


def test_superset_approx_examples():
    assert L.superset_approx_learner(K.Stride(2, 0, 0)).step(()) == U(F(()), K.Stride(2, 0, 0))
    assert L.superset_approx_learner(K.Tail(10)).step((1,)) == U(F({1}), K.Tail(10))


def test_urec_examples():
    M = L.urec_cons_part_learner("gold")
    assert M.step((0,)) == K.Base("gold", 0)
    assert M.step((0, P)) == F({0})
    assert M.step((0, 2)) == F({0, 2})


def test_propsep_examples():
    M = L.propsep_learner()
    assert M.step((1,)) == K.Tail(0)
    assert M.step((1, 0)) == U(F({0, 1}), K.Stride(2, 0, 2))
    assert M.step((0, 2)) == K.Stride(2, 0, 0)


symbols = st.lists(st.one_of(st.integers(0, 30), st.just(P)), max_size=25).map(tuple)


@pytest.mark.parametrize("name", sorted(L.LEARNERS))
def test_learners_deterministic(name):
    prefixes = [T.seeded_text(T.NATURALS, s, 40) for s in range(3)] + [T.canonical_text(T.segment(4), 30)]
    a, b = L.make_learner(name), L.make_learner(name)
    for p in prefixes:
        assert a.run(p) == b.run(p)
        assert a.run(p)[-1] == a.step(p)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 255), st.integers(0, 99), st.integers(1, 60))
def test_cofinite_learner_consistent(e, seed, n):
    text = T.seeded_text(T.cofinite_target(e), seed, n)
    codes = L.cofinite_learner().run(text)
    for k, code in enumerate(codes):
        assert all(K.decide_member(code, x) is True for x in T.text_range(text[: k + 1]))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 40), st.integers(0, 99), st.integers(1, 60))
def test_urec_learner_consistent(i, seed, n):
    text = T.seeded_text(T.gold_target(i), seed, n)
    codes = L.urec_cons_part_learner("gold").run(text)
    for k, code in enumerate(codes):
        assert all(K.decide_member(code, x) is True for x in T.text_range(text[: k + 1]))


@settings(max_examples=60, deadline=None)
@given(symbols)
def test_tail_union_contains_record_holders(text):
    codes = L.tail_union_learner().run(text)
    records, top = [], -1
    for sym in text:
        if sym != P and sym > top:
            records.append(sym)
            top = sym
    for code in codes[len(text) // 2:]:
        assert all(K.decide_member(code, x) is True for x in records)


def test_trace_first_appearance():
    tr = L.trace(L.range_learner(), (1, 1, 2, P))
    assert len(tr.conjectures) == 4
    assert tr.first_appearance == [F({1}), F({1, 2})]
    assert tr.to_json()["steps"][3]["datum"] == P


def test_make_learner_errors():
    with pytest.raises(KeyError):
        L.make_learner("nope")
    with pytest.raises(KeyError):
        L.make_learner("nope:range")
    assert L.make_learner("bcn_part[1]:alternating_hole").id


def test_bcstar_to_weakapprox_keys_and_range():
    M = L.bcstar_to_weakapprox(L.range_learner())
    sigma = (3,)
    a, b = M.step(sigma), M.step(sigma)
    assert a == b and isinstance(a, K.Opaque)
    assert 3 in K.enum_set(a, 5)


def test_bcstar_to_weakapprox_branch_for_range_learner():
    # tau = 3,3 has the right range; Fin({3}) enumerates one element from stage 3 on
    code = L.bcstar_to_weakapprox(L.range_learner()).step((3,))
    found = L.bcsw_witness(code, 200)
    assert found is not None and found[0] == 3 and found[1] == (3, 3)
    assert {4, 5, 6} <= K.enum_set(code, 200)


def test_bcstar_to_weakapprox_starved_search():
    code = L.bcstar_to_weakapprox(L.constant_learner(K.EMPTY)).step((2, 5))
    assert L.bcsw_witness(code, 200) is None
    assert K.enum_set(code, 200) == {2, 5}
