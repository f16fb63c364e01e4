import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from limitlab import combinators as C
from limitlab import criteria as R
from limitlab import kernel as K
from limitlab import learners as L
from limitlab import texts as T
from limitlab.criteria import CheckConfig, Status

SUP, INC, REF = Status.SUPPORTED, Status.INCONCLUSIVE, Status.REFUTED
CFG = CheckConfig(horizon=300)
NAT = K.NATURALS
HOLE5 = T.target_from_code("hole5", K.Diff(NAT, (5,)))


def test_config_validation():
    with pytest.raises(R.ConfigError):
        CheckConfig(horizon=0)
    with pytest.raises(R.ConfigError):
        CheckConfig(horizon=10, window=11)
    assert CheckConfig(horizon=10).w(10) == 4
    assert CheckConfig().cap == 16 and CheckConfig(anomaly_cap=3).cap == 3


def test_cons_examples():
    text = T.canonical_text(T.NATURALS, 20)
    assert R.check_cons(L.trace(L.range_learner(), text), CFG).status is SUP
    bad = L.function_learner("drop", lambda p: K.EMPTY if 3 in p else K.Fin(p))
    v = R.check_cons(L.trace(bad, (0, 1, 2, 3, 4)), CFG)
    assert v.status is REF and v.witness["step"] == 3
    silent = K.register_opaque(K.opaque_key("test-silent-cons"), lambda s: ())
    v = R.check_cons(L.trace(L.constant_learner(silent), (1, 2)), CFG)
    assert v.status is INC


def test_part_examples():
    v = R.check_part([NAT] * 90, T.NATURALS, CFG)
    assert v.status is SUP and v.witness["candidate"] == "(tail 0)" and v.witness["counts"]
    v = R.check_part([NAT, K.Tail(1)] * 45, T.NATURALS, CFG)
    assert v.status is INC and len(v.witness["candidates"]) == 2


def test_part_on_gold_wrapper():
    target = T.segment(3)
    tr = L.trace(C.finapprox_part_wrap(L.gold_part_learner()), T.canonical_text(target, 400))
    v = R.check_part(tr, target, CheckConfig(horizon=400))
    assert v.status is SUP
    cand = K.from_sexpr(v.witness["candidate"])
    assert all(K.decide_member(cand, x) == (x in target) for x in range(200))


def test_consv_part_examples():
    v = R.check_consv_part([NAT, K.Union(K.Fin({0}), K.Tail(1))] * 10, HOLE5, CFG)
    assert v.status is REF and len(v.witness["supersets"]) == 2
    fins = [K.Fin(range(k)) for k in range(60)]
    assert R.check_consv_part(fins, T.NATURALS, CFG).status is not REF
    target = T.target_from_code("hole2", K.Diff(NAT, (2,)))
    tr = L.trace(C.finapprox_consv_part_wrap(L.single_hole_learner()), T.canonical_text(target, 300))
    assert R.check_consv_part(tr, target, CFG).status is SUP


def test_conf_part_examples():
    assert R.check_conf_part([K.Tail(7)] * 30, CFG).status is SUP
    fresh = R.check_conf_part([K.Fin({k}) for k in range(30)], CFG)
    assert fresh.status is INC and fresh.witness["candidates"] == []
    assert R.check_conf_part([K.Tail(1), K.Tail(2)] * 15, CFG).status is INC


def test_bc_examples():
    v = R.check_bc_family([NAT] * 30, T.NATURALS, CFG, 0)
    assert v.status is SUP and v.witness["suffix_start"] == 0
    assert R.check_bc_family([NAT] * 30, HOLE5, CFG, 1).status is SUP
    v = R.check_bc_family([NAT] * 30, HOLE5, CFG, 0)
    assert v.status is INC and len(v.failures) == 30
    growing = [K.Diff(NAT, tuple(range(k))) for k in range(60)]
    v = R.check_bc_family(growing, T.NATURALS, CFG, None)
    assert v.status is INC and v.witness["profile_tail"][-1] == 59
    assert R.check_bc_family([NAT], T.NATURALS, CFG, math.inf).criterion == "bc_star"


def test_ex_vac_examples():
    assert R.check_ex([NAT] * 30, T.NATURALS, CFG).status is SUP
    off = [K.Tail(k) for k in range(5)] + [K.Tail(1)] * 30
    assert R.check_exstar(off, T.NATURALS, CFG).status is SUP
    assert R.check_ex(off, T.NATURALS, CFG).status is INC
    cyc = [NAT, K.Pad(NAT, 1), K.Pad(NAT, 2)] * 20
    assert R.check_vac(cyc, T.NATURALS, CFG).status is SUP
    assert R.check_ex(cyc, T.NATURALS, CFG).status is INC
    near = [K.Diff(NAT, (3,)), K.Diff(NAT, (4,))] * 20
    assert R.check_vacstar(near, T.NATURALS, CFG).status is SUP
    assert R.check_vac(near, T.NATURALS, CFG).status is INC


def test_finapprox_examples():
    fin01 = T.finite_target([0, 1])
    v = R.check_finapprox([K.Fin({0, 1})] * 20, fin01, (0, 1, 2), CFG)
    assert v.status is SUP and v.witness["k_star"] == 0
    tr = L.trace(C.finapprox_part_wrap(L.gold_part_learner()), T.canonical_text(T.segment(6), 600))
    assert R.check_finapprox(tr, T.segment(6), range(11), CheckConfig(horizon=600)).status is SUP
    flip = [K.Fin({0, 1}), K.Fin({0, 1, 2})] * 30
    v = R.check_finapprox(flip, fin01, (0, 1, 2), CFG)
    assert v.status is INC and [f["x"] for f in v.failures] == [2]


def test_weakapprox_examples():
    text = T.seeded_text(T.NATURALS, 4, 300)
    records, top = set(), -1
    for x in text:
        if x != T.PAUSE and x > top:
            records.add(x)
            top = x
    tr = L.trace(L.tail_union_learner(), text)
    assert R.check_weakapprox(tr, T.NATURALS, records, CFG).status is SUP
    assert R.check_weakapprox([NAT] * 10, T.NATURALS, K.Stride(2, 0, 0), CFG).witness["k_star"] == 0
    M = C.finapprox_part_wrap(L.gold_part_learner())
    from limitlab.adversaries import gold_adversary
    duel = L.trace(M, gold_adversary(M, 200, 300))
    v = R.check_weakapprox(duel, T.NATURALS, None, CFG)
    assert v.status is not SUP
    last = {int(x): s for x, s in v.witness["last_disagreement"].items()}
    assert all(last[m] >= m for m in range(1, 21))


def test_approx_examples():
    W = K.Stride(2, 0, 0)
    target = T.NATURALS
    traces = [L.trace(L.superset_approx_learner(W), T.seeded_text(target, s, 200)) for s in range(3)]
    assert R.check_approx(traces, target, W, CFG).status is SUP
    with pytest.raises(R.ConfigError):
        R.check_approx(traces[:1], target, W, CFG)
    coinf = T.EVENS
    V = [x for x in range(65) if x % 2]
    traces = [L.trace(L.range_learner(), T.seeded_text(coinf, s, 300)) for s in range(3)]
    assert R.check_approx(traces, coinf, V, CFG).status is SUP
    # one text settles on evens only, the other on odds only: no single V works
    a = [K.Union(K.Stride(2, 0, 0), K.Fin({1}))] * 30
    b = [K.Union(K.Stride(2, 1, 0), K.Fin({0}))] * 30
    for V in (K.Stride(2, 0, 0), K.Stride(2, 1, 0), NAT):
        assert R.check_approx([a, b], T.NATURALS, V, CFG).status is not SUP


def test_verdict_json_roundtrip():
    v = R.check_part([NAT] * 9, T.NATURALS, CFG)
    doc = v.to_json()
    assert set(doc) == {"criterion", "status", "witness", "config", "failures"}
    assert '"status": "Supported"' in v.dumps()


codes_pool = [NAT, K.Tail(1), K.Diff(NAT, (5,)), K.Diff(NAT, (2, 5)), K.Fin(range(10)), K.Pad(NAT, 1)]


@settings(max_examples=80, deadline=None)
@given(st.lists(st.sampled_from(codes_pool), min_size=3, max_size=60),
       st.sampled_from([T.NATURALS, HOLE5]))
def test_implication_chain(codes, target):
    ex = R.check_ex(codes, target, CFG).supported
    vac = R.check_vac(codes, target, CFG).supported
    bc = R.check_bc_family(codes, target, CFG, 0).supported
    bca = R.check_bc_family(codes, target, CFG, 1).supported
    bcs = R.check_bc_family(codes, target, CFG, None).supported
    assert (not ex or vac) and (not vac or bc) and (not bc or bca) and (not bca or bcs)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.sampled_from(codes_pool), min_size=3, max_size=60))
def test_refutation_budget_stable(codes):
    for cfg in (CFG, CheckConfig(horizon=300, budget=1200)):
        assert R.check_consv_part(codes, HOLE5, cfg).status == R.check_consv_part(codes, HOLE5, CFG).status
