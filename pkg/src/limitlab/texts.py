"""Texts, target languages and the benchmark classes used across the lab."""

from __future__ import annotations

import itertools
import json
import random
from functools import lru_cache
from typing import Callable, Iterable, Iterator, Sequence

import attrs

from . import kernel as K

PAUSE = "#"


# -- prefixes ----------------------------------------------------------------

def as_prefix(symbols: Iterable) -> tuple:
    out = []
    for s in symbols:
        if s == PAUSE:
            out.append(PAUSE)
        elif isinstance(s, int) and not isinstance(s, bool) and s >= 0:
            out.append(s)
        else:
            raise ValueError(f"text symbols are naturals or '#', got {s!r}")
    return tuple(out)


def text_range(prefix: Sequence) -> frozenset:
    return frozenset(x for x in prefix if x != PAUSE)


def is_prefix(a: Sequence, b: Sequence) -> bool:
    return len(a) <= len(b) and tuple(b[: len(a)]) == tuple(a)


def drop_last(prefix: Sequence) -> tuple:
    """The prefix minus its final symbol (the empty prefix stays empty)."""
    return tuple(prefix[:-1])


def new_datum(prefix: Sequence):
    """The datum that the last symbol added to the range, or None."""
    if not prefix:
        return None
    last = prefix[-1]
    if last == PAUSE or last in prefix[:-1]:
        return None
    return last


def prefix_to_json(prefix: Sequence) -> str:
    return json.dumps(list(prefix))


def prefix_from_json(text: str) -> tuple:
    return as_prefix(json.loads(text))


# -- targets -----------------------------------------------------------------

@attrs.frozen
class Target:
    """A decidable target language with an ascending enumeration of its members."""
    name: str
    contains: Callable[[int], bool]
    finite: bool = False
    bound: int | None = None  # for finite targets: every member is below this
    code: K.HypCode | None = None  # an exact code with the same extension, when one exists
    witness_sets: dict = attrs.field(factory=dict)

    def members(self) -> Iterator[int]:
        stop = self.bound if self.finite else None
        for x in itertools.count() if stop is None else range(stop):
            if self.contains(x):
                yield x

    def members_below(self, n: int) -> list[int]:
        if self.finite and self.bound is not None:
            n = min(n, self.bound)
        return [x for x in range(n) if self.contains(x)]

    def __contains__(self, x) -> bool:
        return isinstance(x, int) and x >= 0 and bool(self.contains(x))


def target_from_code(name: str, code: K.HypCode, *, finite: bool | None = None,
                     witness_sets: dict | None = None) -> Target:
    if not K.is_decidable(code):
        raise ValueError(f"target code must be decidable: {K.to_sexpr(code)}")
    bound = None
    if finite is None:
        prof = K.profile(code)
        finite = prof is not None and prof.exact and all(
            d is K.Density.FINITELY for d in (prof.even, prof.odd))
    if finite:
        shape = K._pure_shape(code)
        bound = shape[0] if shape is not None else None
        if bound is None:
            raise ValueError("finite targets need a pure code to bound them")
    return Target(name, lambda x, c=code: K.decide_member(c, x) is True, finite, bound,
                  code, dict(witness_sets or {}))


def segment(m: int) -> Target:
    """{0, ..., m}."""
    return target_from_code(f"seg{m}", K.Fin(range(m + 1)), finite=True)


NATURALS = target_from_code("nat", K.NATURALS, finite=False)
EVENS = target_from_code("evens", K.Stride(2, 0, 0), finite=False)
ODDS = target_from_code("odds", K.Stride(2, 1, 0), finite=False)


def finite_target(D: Iterable[int], name: str | None = None) -> Target:
    D = K.finite_set(D)
    return target_from_code(name or "fin" + "_".join(map(str, D)), K.Fin(D), finite=True)


# -- texts -------------------------------------------------------------------

def canonical_text(t: Target, n: int) -> tuple:
    out = list(itertools.islice(t.members(), n))
    return tuple(out) + (PAUSE,) * (n - len(out))


def _seeded_stream(t: Target, seed: int) -> Iterator:
    rng = random.Random(f"{t.name}/{seed}")
    members = t.members()
    known: list[int] = []
    exhausted = False

    def pull() -> bool:
        nonlocal exhausted
        if exhausted:
            return False
        try:
            known.append(next(members))
            return True
        except StopIteration:
            exhausted = True
            return False

    # Forced slots (even positions) walk the members in windows of 8,
    # shuffled within each window after the first; member j lands at
    # position <= 2*(j+7) <= 4*j for j >= 8, and at 2*j inside the first window.
    order: list[int] = []
    forced = 0
    for k in itertools.count():
        if k % 2 == 0:
            if forced >= len(order):
                while len(known) < len(order) + 8 and pull():
                    pass
                window = known[len(order): len(order) + 8]
                if forced >= 8:
                    rng.shuffle(window)
                order.extend(window)
            if forced < len(order):
                yield order[forced]
                forced += 1
                continue
        # free slot: a pause or any member seen so far (or one just ahead)
        if rng.random() < 0.15 or (not known and not pull()):
            yield PAUSE
            continue
        if rng.random() < 0.2:
            pull()
        yield known[rng.randrange(len(known))]


def seeded_text(t: Target, seed: int, n: int) -> tuple:
    """A pseudo-random text prefix for t, deterministic in (t.name, seed).

    Fairness: every member of t below n // 4 occurs among the first n symbols.
    Prefixes for the same (t, seed) extend each other.
    """
    return tuple(itertools.islice(_seeded_stream(t, seed), n))


# -- benchmark classes -------------------------------------------------------

@attrs.frozen
class BenchmarkClass:
    """A class of targets; ``targets(i)`` follows the family order when a family exists."""
    name: str
    targets: Callable[[int], Target]
    family: K.Family | None = None
    by_param: Callable[..., Target] | None = None  # the class's natural parameterization
    note: str = ""


def _gold_member(i: int, x: int) -> bool:
    return True if i == 0 else x < i


GOLD = K.register_family(K.Family(
    "gold", member_at=lambda i, x, s: x <= s and _gold_member(i, x),
    decidable=True, decide=_gold_member,
    profile=lambda i: (K.CofinalProfile(K.Density.ALL_BUT_FINITELY, K.Density.ALL_BUT_FINITELY)
                       if i == 0 else K.CofinalProfile(K.Density.FINITELY, K.Density.FINITELY)),
    enum_at=lambda i, s: range(s + 1) if i == 0 else range(min(i, s + 1))))


def gold_target(i: int) -> Target:
    """Family order: index 0 is the naturals, index m+1 is {0, ..., m}."""
    return NATURALS if i == 0 else segment(i - 1)


def _cofinite_member(e: int, x: int) -> bool:
    return not (e >> x) & 1 if x < e.bit_length() else True


COFINITE = K.register_family(K.Family(
    "cofinite", member_at=lambda e, x, s: x <= s and _cofinite_member(e, x),
    decidable=True, decide=_cofinite_member,
    profile=lambda e: K.CofinalProfile(K.Density.ALL_BUT_FINITELY, K.Density.ALL_BUT_FINITELY)))


def cofinite_target(e: int) -> Target:
    D = K.canonical_finite_set(e)
    return target_from_code(f"cof{e}", K.Diff(K.NATURALS, D), finite=False)


@lru_cache(maxsize=100_000)
def _evenodd_parts(i: int):
    """(kind, finite extras) for index i: 0 -> naturals, 2k+1 -> evens plus
    odds {2y+1 : y in D_k}, 2k+2 -> odds plus evens {2y : y in D_k}."""
    if i == 0:
        return "nat", ()
    k = (i - 1) // 2
    D = K.canonical_finite_set(k)
    if i % 2 == 1:
        return "even", frozenset(2 * y + 1 for y in D)
    return "odd", frozenset(2 * y for y in D)


def evenodd_code(i: int) -> K.HypCode:
    kind, extra = _evenodd_parts(i)
    if kind == "nat":
        return K.NATURALS
    return K.Union(K.Stride(2, 0 if kind == "even" else 1, 0), K.Fin(sorted(extra)))


def _evenodd_member(i: int, x: int) -> bool:
    kind, extra = _evenodd_parts(i)
    if kind == "nat":
        return True
    return x % 2 == (0 if kind == "even" else 1) or x in extra


def _evenodd_profile(i: int) -> K.CofinalProfile:
    kind, _ = _evenodd_parts(i)
    A, F = K.Density.ALL_BUT_FINITELY, K.Density.FINITELY
    return {"nat": K.CofinalProfile(A, A), "even": K.CofinalProfile(A, F),
            "odd": K.CofinalProfile(F, A)}[kind]


EVENODD = K.register_family(K.Family(
    "evenodd", member_at=lambda i, x, s: x <= s and _evenodd_member(i, x),
    decidable=True, decide=_evenodd_member, profile=_evenodd_profile))


def evenodd_target(i: int) -> Target:
    return target_from_code(f"evenodd{i}", evenodd_code(i), finite=False)


def propsep_code(e: int) -> K.HypCode:
    return K.Union(K.Fin(range(e + 1)), K.Stride(2, 0, e + 1))


def _propsep_member(e: int, x: int) -> bool:
    return x <= e or x % 2 == 0


PROPSEP = K.register_family(K.Family(
    "propsep", member_at=lambda e, x, s: x <= s and _propsep_member(e, x),
    decidable=True, decide=_propsep_member,
    profile=lambda e: K.CofinalProfile(K.Density.ALL_BUT_FINITELY, K.Density.FINITELY)))


def propsep_target(e: int) -> Target:
    return target_from_code(f"propsep{e}", propsep_code(e), finite=False)


def sampled_infinite_code(i: int) -> K.HypCode:
    """Index i picks a tail, a stride, or a seeded random periodic set."""
    kind, j = i % 3, i // 3
    if kind == 0:
        return K.Tail(j)
    if kind == 1:
        a = 2 + j % 4
        return K.Stride(a, (j // 4) % a, j // 16)
    rng = random.Random(f"periodic/{j}")
    period = rng.randint(2, 6)
    residues = sorted(rng.sample(range(period), rng.randint(1, period - 1)))
    start = rng.randint(0, 10)
    code = K.union_all(K.Stride(period, r, start) for r in residues)
    extras = [x for x in range(start) if rng.random() < 0.3]
    return K.Union(code, K.Fin(extras)) if extras else code


def _sampled_member(i: int, x: int) -> bool:
    return K.decide_member(sampled_infinite_code(i), x) is True


SAMPLED = K.register_family(K.Family(
    "sampled", member_at=lambda i, x, s: x <= s and _sampled_member(i, x),
    decidable=True, decide=_sampled_member,
    profile=lambda i: K.profile(sampled_infinite_code(i))))


def sampled_target(i: int) -> Target:
    return target_from_code(f"sampled{i}", sampled_infinite_code(i), finite=False)


def separation_class(assignment) -> BenchmarkClass:
    """Targets of the level construction as known through its final stage.

    Index e gives {x >= d : level(x) <= e}; index -1 via ``by_param`` gives {d, d+1, ...}.
    Membership is only meaningful below d + stages.
    """
    d, levels = assignment.d, dict(assignment.levels)

    def level_target(e: int) -> Target:
        D = [x for x, lv in levels.items() if lv <= e]
        return finite_target(D, name=f"sep{d}_{e}")

    def by_param(e: int | None = None) -> Target:
        return level_target(e) if e is not None else target_from_code(f"sep{d}_tail", K.Tail(d))

    return BenchmarkClass(f"separation_d{d}", level_target, None, by_param,
                          note="finite at horizon; cofinite tail reached via by_param()")


@lru_cache(maxsize=1)
def _plain_classes() -> tuple[BenchmarkClass, ...]:
    return (
        BenchmarkClass("gold", gold_target, GOLD,
                       by_param=lambda m=None: NATURALS if m is None else segment(m),
                       note="by_param(m) = {0..m}, by_param() = naturals"),
        BenchmarkClass("cofinite", cofinite_target, COFINITE, by_param=cofinite_target),
        BenchmarkClass("evenodd", evenodd_target, EVENODD, by_param=evenodd_target),
        BenchmarkClass("propsep", propsep_target, PROPSEP, by_param=propsep_target),
        BenchmarkClass("sampled_infinite", sampled_target, SAMPLED, by_param=sampled_target),
    )


@lru_cache(maxsize=1)
def _separation() -> BenchmarkClass:
    from .adversaries import separation_levels
    from .learners import range_learner
    return separation_class(separation_levels(0, range_learner(), 200, 200))


def benchmark_classes() -> tuple[BenchmarkClass, ...]:
    return _plain_classes() + (_separation(),)


def get_class(name: str) -> BenchmarkClass:
    for cls in _plain_classes():
        if cls.name == name:
            return cls
    if name == "separation" or name.startswith("separation_"):
        return _separation()
    raise KeyError(f"unknown benchmark class {name!r}")
