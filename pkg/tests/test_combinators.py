import json
from collections import Counter

from hypothesis import given, settings
from hypothesis import strategies as st

from limitlab import combinators as C
from limitlab import kernel as K
from limitlab import learners as L
from limitlab import texts as T

P = T.PAUSE
A, B = K.Tail(0), K.Fin({1, 2})


def scripted(codes, name="scripted"):
    """A learner emitting codes[k] on prefixes of length k + 1, then the last one."""
    return L.function_learner(name, lambda p: codes[min(len(p), len(codes)) - 1] if p else K.EMPTY)


def test_finapprox_part_wrap_examples():
    e = K.Tail(0)
    W = C.finapprox_part_wrap(L.constant_learner(e))
    assert W.step((0, 1, 2)) == K.Union(K.Fin({0}), K.Above(e, 0))
    fresh = C.finapprox_part_wrap(scripted([A, A, B]))
    assert fresh.step((0, 1, 2)) == K.Union(K.Fin({0, 1, 2}), K.Above(B, 2))
    assert W.step((0, 1, 2)) == W.step((0, 1, 2))


def test_finapprox_consv_part_wrap_examples():
    e = K.Tail(0)
    W = C.finapprox_consv_part_wrap(L.constant_learner(e))
    assert W.step((P, P)) == K.EMPTY
    assert W.step((0,)) == K.Union(K.Fin({0}), K.Above(e, 0))
    # Fin({1}) never contains 0, so once 0 is seen the previous output is held
    held = C.finapprox_consv_part_wrap(scripted([K.Fin({1})] * 3))
    runs = held.run((1, 0, 0))
    assert runs[1] == runs[2] == runs[0]


def test_padding_normalize_examples():
    assert set(C.padding_normalize(L.constant_learner(A)).run((0,) * 5)) == {K.pad(A, 0)}
    alt = C.padding_normalize(scripted([A, B] * 10)).run((0,) * 20)
    assert all(c == K.pad(A, 0) for c in alt[0::2])
    assert [c.d for c in alt[1::2]] == list(range(1, 11))
    once = C.padding_normalize(scripted([A] + [B] * 9)).run((0,) * 10)
    assert once[1:] == [K.pad(B, 1)] * 9


@settings(max_examples=50, deadline=None)
@given(st.lists(st.sampled_from([A, B, K.Tail(3), K.Stride(2, 0, 0)]), min_size=1, max_size=30))
def test_padding_preserves_extensions(codes):
    out = C.padding_normalize(scripted(codes)).run((0,) * len(codes))
    for c, o in zip(codes, out):
        assert isinstance(o, K.Pad) and o.c == c
        assert K.enum_set(o, 60) == K.enum_set(c, 60)


def test_obligation_queue_round_robin():
    q = C.ObligationQueue()
    q.demand("a", 3)
    q.demand("b", 1)
    q.demand("a", 2)  # targets only grow
    assert q.due() == ["a", "b"]
    assert [q.pop() for _ in range(5)] == ["a", "b", "a", "a", None]
    assert q.to_json()[0] == {"key": "'a'", "target": 3, "emitted": 3}


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.sampled_from("abcd"), st.integers(0, 6)), max_size=40))
def test_obligation_queue_fairness(demands):
    q = C.ObligationQueue()
    for key, count in demands:
        q.demand(key, count)
    due = set(q.due())
    pops = [q.pop() for _ in range(2 * len(due))]
    assert due <= set(pops)
    assert all(q.emitted[k] <= q.target[k] for k in q.order)


def test_sets_up_to():
    gen = C._sets_up_to(1)
    assert [next(gen) for _ in range(4)] == [(), (0,), (1,), (2,)]
    assert list(C._sets_up_to(0)) == [()]
    gen2 = C._sets_up_to(2)
    assert all(len(next(gen2)) <= 2 for _ in range(50))


def test_bcn_part_n0_uses_only_the_empty_set():
    W = C.bcn_part(L.constant_learner(K.Fin(range(5))), 0)
    out = W.run(T.canonical_text(T.segment(4), 100))
    assert Counter(K.normalize(c.c) for c in out)[K.canonical_code(K.Fin(range(5)))] >= 10


def test_bcn_part_constant_correct_code():
    target = T.segment(4)
    W = C.bcn_part(L.constant_learner(K.Fin(range(5))), 1)
    out = W.run(T.canonical_text(target, 300))
    counts = Counter(K.normalize(c.c) for c in out)
    assert counts[K.canonical_code(K.Fin(range(5)))] >= 20


def test_bcstar_once_correct_constant():
    W = C.bcstar_part_once_correct(L.constant_learner(K.NATURALS))
    out = W.run(T.canonical_text(T.NATURALS, 300))
    assert Counter(out).most_common(1)[0][1] >= 100


def test_bcstar_once_correct_stalled_code():
    wrong = K.Diff(K.NATURALS, (5,))
    W = C.bcstar_part_once_correct(scripted([wrong] + [K.NATURALS] * 299))
    out = W.run(T.canonical_text(T.NATURALS, 300))
    assert sum(1 for c in out if c.c == wrong) <= 5 + 1
    assert W.run(T.canonical_text(T.NATURALS, 50)) == out[:50]


def test_bcstar_inf_often_examples():
    fresh = C.bcstar_part_inf_often(L.tail_gap_learner(2))
    assert len(fresh.run(T.canonical_text(T.NATURALS, 60))) == 60
    W = C.bcstar_part_inf_often(L.constant_learner(K.NATURALS))
    out = W.run(T.canonical_text(T.NATURALS, 600))
    top, count = Counter(out).most_common(1)[0]
    assert top.c == K.canonical_code(K.NATURALS)
    assert count > out[:300].count(top) >= 20


def test_vacstar_wpart_to_vac_examples():
    single = C.vacstar_wpart_to_vac(L.constant_learner(B))
    assert single.step((1, 2)) == B
    good, bad = K.Union(K.Fin(range(5)), K.Tail(9)), K.Union(K.Fin(range(2)), K.Tail(9))
    text = (0, 1, 2, 3, 4)
    assert C.vacstar_wpart_to_vac(scripted([bad, good] * 3)).step(text) == good
    tie = C.vacstar_wpart_to_vac(scripted([K.Fin({0, 1, 7}), K.Fin({0, 1, 8})]))
    assert tie.step((0, 1)) == K.Fin({0, 1, 7})


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 9), st.integers(0, 99))
def test_vac_outputs_only_inner_codes(h, seed):
    M = L.alternating_hole_learner(8)
    text = T.seeded_text(T.target_from_code("hole", K.Diff(K.NATURALS, (h,))), seed, 80)
    inner = {K.normalize(c) for c in M.run(text)}
    assert {K.normalize(c) for c in C.vacstar_wpart_to_vac(M).run(text)} <= inner


def test_h_code_determinism():
    a = C.h_code([K.Tail(0)], (0, 1))
    assert a == C.h_code([K.Tail(0)], (0, 1))
    assert K.decide_member(a, 40) is True


def test_consv_wrapper_repeats_h_code_for_tail():
    M = L.constant_learner(K.Tail(3))
    core = C._consv_core(M)
    out = core.run(T.canonical_text(T.target_from_code("t3", K.Tail(3)), 400))
    opaque = Counter(c for c in out if isinstance(c, K.Opaque))
    assert opaque.most_common(1)[0][1] >= 50


def test_delay_holds_on_constant_range():
    core = scripted([K.Fin({1}), K.Fin({2}), K.Fin({3})])
    out = C._delay(core).run((1, 1, 1))
    assert out == [K.Fin({1})] * 3


def test_debug_dump_is_json():
    W = C.bcn_part(L.alternating_hole_learner(8), 1)
    doc = json.loads(W.debug_dump((0, 1, 2)))
    assert doc["learner"].startswith("bcn_part") and isinstance(doc["log"], list)
