import pytest

from limitlab import adversaries as A
from limitlab import kernel as K
from limitlab import learners as L
from limitlab import texts as T


@pytest.fixture(scope="module")
def nat_learner():
    return L.constant_learner(K.NATURALS)


@pytest.fixture(scope="module")
def range_levels():
    return A.separation_levels(0, L.range_learner(), 200, 200)


def test_gold_vs_naturals_stays_at_zero(nat_learner):
    assert A.gold_adversary(nat_learner, 50, 10) == (0,) * 10


def test_gold_vs_range_ascends():
    assert A.gold_adversary(L.range_learner(), 50, 10) == tuple(range(10))


def test_gold_deterministic_and_monotone():
    M = L.gold_part_learner()
    long = A.gold_adversary(M, 100, 120)
    assert long == A.gold_adversary(M, 100, 120)
    assert T.is_prefix(A.gold_adversary(M, 100, 60), long)
    assert T.text_range(long) == set(range(max(long) + 1))


def test_gold_audit_log():
    audit = []
    A.gold_adversary(L.range_learner(), 10, 4, audit=audit)
    assert [e["query"] for e in audit] == [1, 2, 3]
    assert all(e["tier"] == "exact" and e["member"] is False for e in audit)
    assert "query" in A.audit_json(audit)


def test_evenodd_vs_range_stuck_on_evens():
    text, switches = A.evenodd_adversary(L.range_learner(), 20)
    assert text == tuple(range(0, 40, 2)) and switches == 0


def test_evenodd_vs_conspart_alternates():
    text, switches = A.evenodd_adversary(L.urec_cons_part_learner("evenodd"), 2000)
    assert switches >= 3
    assert A.evenodd_adversary(L.urec_cons_part_learner("evenodd"), 300)[0] == text[:300]


def test_evenodd_needs_profile_or_window():
    opaque = K.register_opaque(K.opaque_key("test-evenodd"), lambda s: range(0, s + 1, 2))
    M = L.constant_learner(opaque)
    with pytest.raises(A.AdversaryError):
        A.evenodd_adversary(M, 5)
    _, switches = A.evenodd_adversary(M, 5, approx_window=50)
    assert switches >= 1


def test_cofinite_vs_naturals_stuck(nat_learner):
    L0 = T.cofinite_target(0)
    text, out = A.cofinite_adversary(L0, K.NATURALS, nat_learner, 100, 200)
    assert out.kind == "StuckInA" and out.w == 0 and out.alternations == 0
    assert 0 not in text


def test_cofinite_vs_range_alternates():
    L5 = T.cofinite_target(5)
    text, out = A.cofinite_adversary(L5, K.NATURALS, L.range_learner(), 100, 1500)
    assert out.kind == "InfinitelyManyAlternations" and out.alternations >= 5
    assert all(x in L5 for x in T.text_range(text))


def test_cofinite_withheld_point_fed_before_next_round():
    L0 = T.cofinite_target(0)
    text, out = A.cofinite_adversary(L0, K.Stride(3, 0, 0), L.range_learner(), 100, 300)
    a_phases = [e for e in out.log if e["phase"] == "a"]
    for first, second in zip(a_phases, a_phases[1:]):
        assert first["w"] in text[: second["step"]]


def test_cofinite_budget_stable():
    L0 = T.cofinite_target(0)
    runs = [A.cofinite_adversary(L0, K.NATURALS, L.cofinite_learner(), b, 600) for b in (100, 200)]
    assert runs[0][1].kind == runs[1][1].kind
    assert runs[0][0] == runs[1][0]


def test_separation_first_level(range_levels):
    assert range_levels.levels[0] == 0


def test_separation_levels_grow_vs_range(range_levels):
    assert max(range_levels.levels.values()) >= 10
    assert set(range_levels.levels) == set(range(200))


def test_separation_cancellation_permanent(range_levels):
    seen = set()
    for s, c in enumerate(range_levels.cancelled):
        assert not (c & seen)
        seen |= c
        later = {range_levels.levels[x] for x in range(s + 1, 200)}
        assert not (later & c)


def test_separation_tau_ascending(range_levels):
    for e in range(20):
        tau = range_levels.tau(e)
        assert list(tau) == sorted(tau)


def test_separation_deterministic():
    a = A.separation_levels(3, L.range_learner(), 40, 40)
    assert a == A.separation_levels(3, L.range_learner(), 40, 40)


def test_separation_text_all_distinct_levels():
    levels = {x: x for x in range(30)}
    assign = A.LevelAssignment(0, "manual", 30, 30, levels, tuple(frozenset() for _ in range(30)))
    assert A.separation_text(assign, 20) == tuple(range(20))
    with pytest.raises(A.AdversaryError):
        A.separation_text(assign, 40)


def test_separation_text_prefix_property(range_levels):
    text = A.separation_text(range_levels, 60)
    assert T.is_prefix(A.separation_text(range_levels, 59), text)
    assert all(x >= 0 for x in text)
    assert "levels" in range_levels.to_json()
