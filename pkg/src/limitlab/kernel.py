"""Finitary stand-ins for the recursion-theoretic substrate.

Hypotheses are structural codes (``HypCode``) rather than indices into an
acceptable numbering. Each code has a stagewise enumeration ``enum_at(c, s)``
that is monotone in ``s`` and clipped to ``{0, ..., s}``, and, when the code
is built only from decidable pieces, an exact membership test.
"""

from __future__ import annotations

import enum
import json
import math
import re
import threading
from functools import lru_cache
from typing import Callable, Iterable, Union as TUnion

import attrs

FiniteSet = tuple  # sorted, duplicate-free tuple of ints


def finite_set(xs: Iterable[int] = ()) -> tuple:
    out = tuple(sorted(set(xs)))
    if out and out[0] < 0:
        raise ValueError(f"finite sets hold naturals only, got {out[0]}")
    return out


# -- codings -----------------------------------------------------------------

def cantor_pair(x: int, y: int) -> int:
    if x < 0 or y < 0:
        raise ValueError("cantor_pair takes naturals")
    return (x + y) * (x + y + 1) // 2 + y


def cantor_unpair(n: int) -> tuple[int, int]:
    if n < 0:
        raise ValueError("cantor_unpair takes a natural")
    w = (math.isqrt(8 * n + 1) - 1) // 2
    y = n - w * (w + 1) // 2
    return w - y, y


def canonical_finite_set(e: int) -> tuple:
    """The finite set whose elements are the positions of the 1-bits of e."""
    if e < 0:
        raise ValueError("canonical index must be a natural")
    out = []
    x = 0
    while e:
        if e & 1:
            out.append(x)
        e >>= 1
        x += 1
    return tuple(out)


def finite_set_index(D: Iterable[int]) -> int:
    return sum(1 << x for x in finite_set(D))


# -- hypothesis codes --------------------------------------------------------

@attrs.frozen(cache_hash=True)
class Base:
    family: str
    i: int


@attrs.frozen(cache_hash=True)
class Fin:
    D: tuple = attrs.field(converter=finite_set)


@attrs.frozen(cache_hash=True)
class Tail:
    """All x >= t."""
    t: int


@attrs.frozen(cache_hash=True)
class Stride:
    """All x >= t with x = r (mod a)."""
    a: int
    r: int
    t: int

    def __attrs_post_init__(self):
        if self.a < 1 or not 0 <= self.r < self.a:
            raise ValueError(f"bad stride ({self.a}, {self.r})")


@attrs.frozen(cache_hash=True)
class Union:
    left: "HypCode"
    right: "HypCode"


@attrs.frozen(cache_hash=True)
class Diff:
    c: "HypCode"
    D: tuple = attrs.field(converter=finite_set)


@attrs.frozen(cache_hash=True)
class Above:
    """Members of c strictly greater than t."""
    c: "HypCode"
    t: int


@attrs.frozen(cache_hash=True)
class Pad:
    c: "HypCode"
    d: int


@attrs.frozen(cache_hash=True)
class OpaqueKey:
    tag: str
    params: str  # canonical JSON of the construction arguments


@attrs.frozen(cache_hash=True)
class Opaque:
    key: OpaqueKey


HypCode = TUnion[Base, Fin, Tail, Stride, Union, Diff, Above, Pad, Opaque]
CODE_TYPES = (Base, Fin, Tail, Stride, Union, Diff, Above, Pad, Opaque)

NATURALS = Tail(0)
EMPTY = Fin(())


def union_all(codes: Iterable) -> "HypCode":
    codes = list(codes)
    if not codes:
        return EMPTY
    out = codes[0]
    for c in codes[1:]:
        out = Union(out, c)
    return out


def pad(c: HypCode, d: int) -> Pad:
    return Pad(c, d)


class RegistryError(KeyError):
    pass


# -- registries --------------------------------------------------------------

class Density(enum.Enum):
    ALL_BUT_FINITELY = "all_but_finitely"
    INFINITELY_MANY = "infinitely_many_but_not_almost_all"
    FINITELY = "finitely"


_RANK = {Density.FINITELY: 0, Density.INFINITELY_MANY: 1, Density.ALL_BUT_FINITELY: 2}


@attrs.frozen
class CofinalProfile:
    """How a set meets the evens and the odds in the limit."""
    even: Density
    odd: Density
    exact: bool = True

    def of(self, residue: int) -> Density:
        return self.even if residue % 2 == 0 else self.odd


@attrs.frozen
class Family:
    id: str
    member_at: Callable[[int, int, int], bool]
    decidable: bool = False
    decide: Callable[[int, int], bool] | None = None
    profile: Callable[[int], CofinalProfile] | None = None
    enum_at: Callable[[int, int], Iterable[int]] | None = None


class Registry:
    """Append-only tables of families and opaque enumerators."""

    def __init__(self):
        self._lock = threading.Lock()
        self.families: dict[str, Family] = {}
        self.opaque: dict[OpaqueKey, tuple] = {}  # key -> (enumerator, decide or None)

    def register_family(self, fam: Family) -> Family:
        with self._lock:
            return self.families.setdefault(fam.id, fam)

    def family(self, fid: str) -> Family:
        try:
            return self.families[fid]
        except KeyError:
            raise RegistryError(f"unregistered family {fid!r}") from None

    def register_opaque(self, key: OpaqueKey, enumerator, decide=None) -> Opaque:
        with self._lock:
            self.opaque.setdefault(key, (enumerator, decide))
        return Opaque(key)

    def enumerator(self, key: OpaqueKey):
        return self._entry(key)[0]

    def decider(self, key: OpaqueKey):
        return self._entry(key)[1]

    def _entry(self, key: OpaqueKey):
        try:
            return self.opaque[key]
        except KeyError:
            raise RegistryError(f"unregistered opaque key {key.tag}:{key.params}") from None


REGISTRY = Registry()


def _json_default(obj):
    if isinstance(obj, CODE_TYPES):
        return to_sexpr(obj)
    if isinstance(obj, (tuple, frozenset, set)):
        return list(obj)
    if hasattr(obj, "id"):
        return obj.id
    raise TypeError(f"cannot key on {type(obj).__name__}")


def opaque_key(tag: str, *params) -> OpaqueKey:
    return OpaqueKey(tag, json.dumps(list(params), default=_json_default,
                                     separators=(",", ":"), sort_keys=True))


def register_opaque(key: OpaqueKey, enumerator: Callable[[int], Iterable[int]],
                    decide: Callable[[int], bool] | None = None) -> Opaque:
    """Bind key to a stagewise enumerator; later registrations of the key are ignored.

    ``enumerator(s)`` returns the elements enumerated by stage s. A construction
    that can also settle membership exactly may pass ``decide``; without it the
    code stays in the budgeted tier.
    """
    return REGISTRY.register_opaque(key, enumerator, decide)


def register_family(fam: Family) -> Family:
    return REGISTRY.register_family(fam)


# -- stagewise semantics -----------------------------------------------------

@lru_cache(maxsize=20_000)
def _enum(c: HypCode, s: int) -> frozenset:
    if s < 0:
        return frozenset()
    if isinstance(c, Fin):
        return frozenset(x for x in c.D if x <= s)
    if isinstance(c, Tail):
        return frozenset(range(c.t, s + 1))
    if isinstance(c, Stride):
        start = c.t + (c.r - c.t) % c.a
        return frozenset(range(start, s + 1, c.a))
    if isinstance(c, Union):
        return _enum(c.left, s) | _enum(c.right, s)
    if isinstance(c, Diff):
        return _enum(c.c, s).difference(c.D)
    if isinstance(c, Above):
        return frozenset(x for x in _enum(c.c, s) if x > c.t)
    if isinstance(c, Pad):
        return _enum(c.c, s)
    if isinstance(c, Base):
        fam = REGISTRY.family(c.family)
        if fam.enum_at is not None:
            return frozenset(x for x in fam.enum_at(c.i, s) if x <= s)
        return frozenset(x for x in range(s + 1) if fam.member_at(c.i, x, s))
    if isinstance(c, Opaque):
        proc = REGISTRY.enumerator(c.key)
        return frozenset(x for x in proc(s) if 0 <= x <= s)
    raise TypeError(f"not a hypothesis code: {c!r}")


def enum_set(c: HypCode, s: int) -> frozenset:
    """Stage-s approximation as a frozenset (the fast path)."""
    return _enum(c, s)


def enum_at(c: HypCode, s: int) -> tuple:
    return tuple(sorted(_enum(c, s)))


@lru_cache(maxsize=50_000)
def _as_set(D: tuple) -> frozenset:
    return frozenset(D)


def member_at(c: HypCode, x: int, s: int) -> bool:
    if x > s or x < 0:
        return False
    if isinstance(c, Fin):
        return x in _as_set(c.D)
    if isinstance(c, Tail):
        return x >= c.t
    if isinstance(c, Stride):
        return x >= c.t and x % c.a == c.r
    if isinstance(c, Union):
        return member_at(c.left, x, s) or member_at(c.right, x, s)
    if isinstance(c, Diff):
        return x not in _as_set(c.D) and member_at(c.c, x, s)
    if isinstance(c, Above):
        return x > c.t and member_at(c.c, x, s)
    if isinstance(c, Pad):
        return member_at(c.c, x, s)
    if isinstance(c, Base):
        return bool(REGISTRY.family(c.family).member_at(c.i, x, s))
    return x in _enum(c, s)


class _Undecidable:
    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self):
        return "UNDECIDABLE"

    def __bool__(self):
        raise TypeError("UNDECIDABLE has no truth value; compare with `is UNDECIDABLE`")


UNDECIDABLE = _Undecidable()


def decide_member(c: HypCode, x: int):
    """Exact membership, or UNDECIDABLE when an opaque or semi-decidable piece matters."""
    if x < 0:
        return False
    if isinstance(c, Fin):
        return x in _as_set(c.D)
    if isinstance(c, Tail):
        return x >= c.t
    if isinstance(c, Stride):
        return x >= c.t and x % c.a == c.r
    if isinstance(c, Union):
        a = decide_member(c.left, x)
        if a is True:
            return True
        b = decide_member(c.right, x)
        if b is True:
            return True
        return UNDECIDABLE if (a is UNDECIDABLE or b is UNDECIDABLE) else False
    if isinstance(c, Diff):
        return False if x in _as_set(c.D) else decide_member(c.c, x)
    if isinstance(c, Above):
        return False if x <= c.t else decide_member(c.c, x)
    if isinstance(c, Pad):
        return decide_member(c.c, x)
    if isinstance(c, Base):
        fam = REGISTRY.family(c.family)
        if fam.decidable and fam.decide is not None:
            return bool(fam.decide(c.i, x))
        return UNDECIDABLE
    if isinstance(c, Opaque):
        decide = REGISTRY.decider(c.key)
        return bool(decide(x)) if decide is not None else UNDECIDABLE
    return UNDECIDABLE


def is_decidable(c: HypCode) -> bool:
    if isinstance(c, (Fin, Tail, Stride)):
        return True
    if isinstance(c, Union):
        return is_decidable(c.left) and is_decidable(c.right)
    if isinstance(c, (Diff, Above, Pad)):
        return is_decidable(c.c)
    if isinstance(c, Base):
        fam = REGISTRY.family(c.family)
        return fam.decidable and fam.decide is not None
    if isinstance(c, Opaque):
        return REGISTRY.decider(c.key) is not None
    return False


# -- normalization and identity ----------------------------------------------

@lru_cache(maxsize=100_000)
def normalize(c: HypCode) -> HypCode:
    """Canonical representative; extension-preserving and never looks inside Opaque."""
    if isinstance(c, Union):
        a, b = normalize(c.left), normalize(c.right)
        if isinstance(a, Fin) and isinstance(b, Fin):
            return Fin(a.D + b.D)
        return Union(a, b)
    if isinstance(c, Diff):
        inner = normalize(c.c)
        if not c.D:
            return inner
        if isinstance(inner, Fin):
            return Fin(set(inner.D) - set(c.D))
        if isinstance(inner, Diff):
            return Diff(inner.c, inner.D + c.D)
        return Diff(inner, c.D)
    if isinstance(c, Above):
        inner = normalize(c.c)
        if isinstance(inner, Fin):
            return Fin(x for x in inner.D if x > c.t)
        return Above(inner, c.t)
    if isinstance(c, Pad):
        return Pad(normalize(c.c), c.d)
    return c


def same_code(a: HypCode, b: HypCode) -> bool:
    return normalize(a) == normalize(b)


def code_depth(c: HypCode) -> int:
    if isinstance(c, Union):
        return 1 + max(code_depth(c.left), code_depth(c.right))
    if isinstance(c, (Diff, Above, Pad)):
        return 1 + code_depth(c.c)
    return 1


# -- cofinal profiles --------------------------------------------------------

def _pure_shape(c: HypCode):
    """(threshold, period) beyond which membership is periodic, or None."""
    if isinstance(c, Fin):
        return (c.D[-1] + 1 if c.D else 0), 1
    if isinstance(c, Tail):
        return c.t, 1
    if isinstance(c, Stride):
        return c.t, c.a
    if isinstance(c, Union):
        a, b = _pure_shape(c.left), _pure_shape(c.right)
        if a is None or b is None:
            return None
        return max(a[0], b[0]), math.lcm(a[1], b[1])
    if isinstance(c, (Diff, Above, Pad)):
        inner = _pure_shape(c.c)
        if inner is None:
            return None
        bump = 0
        if isinstance(c, Diff) and c.D:
            bump = c.D[-1] + 1
        elif isinstance(c, Above):
            bump = c.t + 1
        return max(inner[0], bump), inner[1]
    return None


def _max_density(a: Density, b: Density) -> Density:
    return a if _RANK[a] >= _RANK[b] else b


def profile(c: HypCode) -> CofinalProfile | None:
    """Cofinal profile of c, exact on pure combinator codes; None when unknown."""
    shape = _pure_shape(c)
    if shape is not None:
        start, period = shape
        span = math.lcm(period, 2)
        dens = []
        for r in (0, 1):
            hits = [decide_member(c, x) for x in range(start, start + span) if x % 2 == r]
            dens.append(Density.ALL_BUT_FINITELY if all(hits)
                        else Density.FINITELY if not any(hits)
                        else Density.INFINITELY_MANY)
        return CofinalProfile(dens[0], dens[1], True)
    if isinstance(c, Base):
        fam = REGISTRY.family(c.family)
        return fam.profile(c.i) if fam.profile is not None else None
    if isinstance(c, (Diff, Pad)):
        return profile(c.c)
    if isinstance(c, Above):
        return profile(c.c)
    if isinstance(c, Union):
        a, b = profile(c.left), profile(c.right)
        if a is None or b is None:
            return None
        dens, exact = [], a.exact and b.exact
        for r in (0, 1):
            da, db = a.of(r), b.of(r)
            if da is Density.INFINITELY_MANY and db is Density.INFINITELY_MANY:
                exact = False  # two sparse sets may still cover a residue class
            dens.append(_max_density(da, db))
        return CofinalProfile(dens[0], dens[1], exact)
    return None


# -- s-expressions -----------------------------------------------------------

def to_sexpr(c: HypCode) -> str:
    if isinstance(c, Base):
        return f"(base {c.family} {c.i})"
    if isinstance(c, Fin):
        return "(fin" + "".join(f" {x}" for x in c.D) + ")"
    if isinstance(c, Tail):
        return f"(tail {c.t})"
    if isinstance(c, Stride):
        return f"(stride {c.a} {c.r} {c.t})"
    if isinstance(c, Union):
        return f"(union {to_sexpr(c.left)} {to_sexpr(c.right)})"
    if isinstance(c, Diff):
        return f"(diff {to_sexpr(c.c)}" + "".join(f" {x}" for x in c.D) + ")"
    if isinstance(c, Above):
        return f"(above {to_sexpr(c.c)} {c.t})"
    if isinstance(c, Pad):
        return f"(pad {to_sexpr(c.c)} {c.d})"
    if isinstance(c, Opaque):
        return f"(opaque {c.key.tag} {json.dumps(c.key.params)})"
    raise TypeError(f"not a hypothesis code: {c!r}")


_TOKEN = re.compile(r'\(|\)|"(?:[^"\\]|\\.)*"|[^\s()"]+')


def from_sexpr(text: str) -> HypCode:
    tokens = _TOKEN.findall(text)
    pos = 0

    def nat(tok):
        if not tok.isdigit():
            raise ValueError(f"expected a natural, got {tok!r}")
        return int(tok)

    def parse():
        nonlocal pos
        if tokens[pos] != "(":
            raise ValueError(f"expected '(' at token {pos}")
        head = tokens[pos + 1]
        pos += 2
        args = []
        while tokens[pos] != ")":
            if tokens[pos] == "(":
                args.append(parse())
            else:
                args.append(tokens[pos])
                pos += 1
        pos += 1
        if head == "base":
            return Base(args[0], nat(args[1]))
        if head == "fin":
            return Fin(nat(a) for a in args)
        if head == "tail":
            return Tail(nat(args[0]))
        if head == "stride":
            return Stride(*(nat(a) for a in args))
        if head == "union":
            return Union(args[0], args[1])
        if head == "diff":
            return Diff(args[0], (nat(a) for a in args[1:]))
        if head == "above":
            return Above(args[0], nat(args[1]))
        if head == "pad":
            return Pad(args[0], nat(args[1]))
        if head == "opaque":
            return Opaque(OpaqueKey(args[0], json.loads(args[1])))
        raise ValueError(f"unknown code head {head!r}")

    try:
        out = parse()
    except IndexError:
        raise ValueError(f"truncated code: {text!r}") from None
    if pos != len(tokens):
        raise ValueError(f"trailing input in code: {text!r}")
    return out


def canonical_code(c: HypCode) -> HypCode:
    """One fixed code per extension for codes built only from Fin/Tail/Stride/Union/Diff/Above.

    Codes involving Base, Opaque or Pad fall back to ``normalize``; this is the
    "canonical index for a set" used by constructions that emit sets, not codes.
    """
    shape = _pure_shape(c)
    if shape is None:
        return normalize(c)
    start, period = shape
    bits = [decide_member(c, x) is True for x in range(start, start + period)]
    p = next(q for q in range(1, period + 1)
             if period % q == 0 and all(bits[i] == bits[(i + q) % period] for i in range(period)))
    # walk the threshold down while the periodic pattern already holds
    t = start
    while t > 0 and (decide_member(c, t - 1) is True) == (decide_member(c, t - 1 + p) is True):
        t -= 1
    head = [x for x in range(t) if decide_member(c, x) is True]
    residues = sorted({x % p for x in range(t, t + p) if decide_member(c, x) is True})
    if not residues:
        return Fin(head)
    periodic = Tail(t) if p == 1 else union_all(Stride(p, r, t) for r in residues)
    return Union(Fin(head), periodic) if head else periodic
