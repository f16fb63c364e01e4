import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from limitlab import kernel as K
from strategies import codes, pure_codes, small


def test_cantor_pair_examples():
    assert K.cantor_pair(0, 0) == 0
    assert K.cantor_pair(0, 1) == 2
    assert K.cantor_pair(1, 0) == 1
    assert K.cantor_unpair(0) == (0, 0)
    assert K.cantor_unpair(2) == (0, 1)
    assert K.cantor_unpair(1) == (1, 0)


def test_cantor_rejects_negatives():
    with pytest.raises(ValueError):
        K.cantor_pair(-1, 0)
    with pytest.raises(ValueError):
        K.cantor_unpair(-3)


@given(st.integers(0, 10**9))
def test_pairing_roundtrip(n):
    assert K.cantor_pair(*K.cantor_unpair(n)) == n


@given(st.integers(0, 10**4), st.integers(0, 10**4))
def test_unpair_inverts_pair(x, y):
    assert K.cantor_unpair(K.cantor_pair(x, y)) == (x, y)


@pytest.mark.parametrize("e, D", [(0, ()), (5, (0, 2)), (6, (1, 2)), (8, (3,))])
def test_canonical_finite_sets(e, D):
    assert K.canonical_finite_set(e) == D
    assert K.finite_set_index(D) == e


@given(st.integers(0, 10**6))
def test_finite_set_roundtrip(e):
    assert K.finite_set_index(K.canonical_finite_set(e)) == e


def test_enum_at_examples():
    assert set(K.enum_at(K.Fin({1, 3}), 2)) == {1}
    assert set(K.enum_at(K.Union(K.Fin({0}), K.Tail(5)), 7)) == {0, 5, 6, 7}
    assert set(K.enum_at(K.Pad(K.Tail(0), 9), 3)) == {0, 1, 2, 3}
    assert set(K.enum_at(K.Pad(K.Fin({1}), 4), 5)) == {1}


def test_member_at_examples():
    assert K.member_at(K.Tail(4), 4, 10)
    assert not K.member_at(K.Diff(K.Tail(0), (2,)), 2, 10)
    assert K.member_at(K.Stride(2, 0, 3), 4, 10)


def test_decide_member_examples():
    assert K.decide_member(K.Union(K.Fin({9}), K.Tail(100)), 9) is True
    assert K.decide_member(K.Diff(K.Stride(2, 1, 0), (5,)), 5) is False
    opaque = K.register_opaque(K.opaque_key("test-nothing"), lambda s: ())
    assert K.decide_member(opaque, 9) is K.UNDECIDABLE


def test_pad_identity():
    p = K.pad(K.Tail(0), 0)
    assert p == K.Pad(K.Tail(0), 0)
    assert K.pad(K.EMPTY, 1) != K.pad(K.EMPTY, 2)
    assert K.decide_member(p, 12345) is True


def test_register_opaque_examples():
    key = K.opaque_key("test-identity", 1)
    a = K.register_opaque(key, lambda s: range(s + 1))
    b = K.register_opaque(key, lambda s: ())
    assert a == b
    assert set(K.enum_at(a, 6)) == set(range(7))
    silent = K.register_opaque(K.opaque_key("test-silent"), lambda s: ())
    assert all(not K.enum_at(silent, s) for s in range(20))


def test_unknown_opaque_key():
    with pytest.raises(K.RegistryError):
        K.enum_at(K.Opaque(K.opaque_key("never-registered")), 3)


def test_above_is_strict_and_tail_is_not():
    assert not K.member_at(K.Above(K.Tail(0), 4), 4, 10)
    assert K.member_at(K.Tail(4), 4, 10)


@settings(max_examples=150, deadline=None)
@given(codes, st.integers(0, 120))
def test_enumeration_monotone_and_clipped(c, s):
    now, nxt = set(K.enum_at(c, s)), set(K.enum_at(c, s + 1))
    assert now <= nxt <= set(range(s + 2))


@settings(max_examples=150, deadline=None)
@given(codes, st.integers(0, 5), st.integers(0, 80))
def test_pad_extensionality(c, d, s):
    assert K.enum_at(K.Pad(c, d), s) == K.enum_at(c, s)


@settings(max_examples=150, deadline=None)
@given(codes)
def test_normalization_sound(c):
    assert K.enum_set(K.normalize(c), 300) == K.enum_set(c, 300)


@settings(max_examples=100, deadline=None)
@given(codes, st.integers(0, 99))
def test_two_tiers_agree(c, x):
    v = K.decide_member(c, x)
    if v is not K.UNDECIDABLE:
        assert K.member_at(c, x, 500) == v


@settings(max_examples=100, deadline=None)
@given(pure_codes, pure_codes)
def test_canonical_code_is_extensional(a, b):
    same = all(K.decide_member(a, x) == K.decide_member(b, x) for x in range(400))
    if K.canonical_code(a) == K.canonical_code(b):
        assert same


@settings(max_examples=100, deadline=None)
@given(codes)
def test_sexpr_roundtrip(c):
    assert K.from_sexpr(K.to_sexpr(c)) == c


@given(small, small)
def test_profile_of_stride(r, t):
    prof = K.profile(K.Stride(2, r % 2, t))
    assert prof.exact
    heavy = prof.even if r % 2 == 0 else prof.odd
    assert heavy is K.Density.ALL_BUT_FINITELY
