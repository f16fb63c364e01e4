"""Learners: total deterministic maps from text prefixes to hypothesis codes.

A learner is driven through a *session* that is fed one symbol at a time, so
a whole trace costs one pass over the text. ``learner.step(prefix)`` replays a
fresh session and is therefore a pure function of the prefix.
"""

from __future__ import annotations

import json
from typing import Callable, Iterable, Sequence

import attrs

from . import kernel as K
from .texts import PAUSE


class Session:
    """Incremental state of one learner on one text; subclasses override ``_next``."""

    def __init__(self):
        self.prefix: list = []
        self.range: set[int] = set()
        self.max: int | None = None
        self.log: list[dict] = []
        self.current = self._initial()

    def _initial(self) -> K.HypCode:
        return K.EMPTY

    def feed(self, sym) -> K.HypCode:
        fresh = sym != PAUSE and sym not in self.range
        self.prefix.append(sym)
        if fresh:
            self.range.add(sym)
            self.max = sym if self.max is None else max(self.max, sym)
        self.current = self._next(sym, fresh)
        return self.current

    def _next(self, sym, fresh: bool) -> K.HypCode:
        raise NotImplementedError


@attrs.frozen(eq=False)
class Learner:
    id: str
    make_session: Callable[[], Session] = attrs.field(repr=False)
    meta: dict = attrs.field(factory=dict)

    def session(self) -> Session:
        return self.make_session()

    def step(self, prefix: Sequence) -> K.HypCode:
        sess = self.session()
        for sym in prefix:
            sess.feed(sym)
        return sess.current

    __call__ = step

    def run(self, prefix: Sequence) -> list:
        """Conjectures on prefix[:1], prefix[:2], ..., prefix[:len(prefix)]."""
        sess = self.session()
        return [sess.feed(sym) for sym in prefix]

    def debug_dump(self, prefix: Sequence) -> str:
        sess = self.session()
        for sym in prefix:
            sess.feed(sym)
        return json.dumps({"learner": self.id, "log": sess.log}, default=K._json_default)


@attrs.frozen
class Trace:
    learner_id: str
    prefix: tuple
    conjectures: tuple

    @property
    def first_appearance(self) -> list:
        seen, order = set(), []
        for c in self.conjectures:
            n = K.normalize(c)
            if n not in seen:
                seen.add(n)
                order.append(c)
        return order

    def to_json(self) -> dict:
        return {"learner": self.learner_id,
                "steps": [{"step": k, "datum": sym, "code": K.to_sexpr(c)}
                          for k, (sym, c) in enumerate(zip(self.prefix, self.conjectures))]}


def trace(learner: Learner, prefix: Sequence) -> Trace:
    prefix = tuple(prefix)
    return Trace(learner.id, prefix, tuple(learner.run(prefix)))


def constant_learner(code: K.HypCode, name: str | None = None) -> Learner:
    class S(Session):
        def _initial(self):
            return code

        def _next(self, sym, fresh):
            return code
    return Learner(name or f"constant[{K.to_sexpr(code)}]", S)


def function_learner(name: str, fn: Callable[[tuple], K.HypCode], meta: dict | None = None) -> Learner:
    """Wrap a plain prefix -> code function (quadratic; meant for fixtures)."""
    class S(Session):
        def _initial(self):
            return fn(())

        def _next(self, sym, fresh):
            return fn(tuple(self.prefix))
    return Learner(name, S, meta or {})


# -- the directly defined learners ------------------------------------------

def tail_union_learner() -> Learner:
    """Seen data plus everything above the largest datum."""
    class S(Session):
        def _initial(self):
            return K.NATURALS

        def _next(self, sym, fresh):
            if self.max is None:
                return K.NATURALS
            if not fresh:
                return self.current
            return K.Union(K.Fin(self.range), K.Tail(self.max + 1))
    return Learner("tail_union", S, {"consistent": True})


def range_learner() -> Learner:
    class S(Session):
        def _next(self, sym, fresh):
            return K.Fin(self.range) if fresh else self.current
    return Learner("range", S, {"consistent": True, "conservative": True})


def cofinite_learner() -> Learner:
    """On a new datum x, guess that the largest gap at or below x is the last one."""
    class S(Session):
        def _initial(self):
            return K.NATURALS

        def _next(self, sym, fresh):
            if not fresh:
                return self.current
            w = next((y for y in range(sym, -1, -1) if y not in self.range), None)
            if w is None:
                return K.NATURALS
            return K.Union(K.Fin(y for y in self.range if y <= w), K.Tail(w + 1))
    return Learner("cofinite", S, {"consistent": True})


def superset_approx_learner(W: K.HypCode) -> Learner:
    class S(Session):
        def _initial(self):
            return K.Union(K.EMPTY, W)

        def _next(self, sym, fresh):
            return K.Union(K.Fin(self.range), W) if fresh else self.current
    return Learner(f"superset_approx[{K.to_sexpr(W)}]", S, {"consistent": True})


def urec_cons_part_learner(F: K.Family | str) -> Learner:
    """Consistent partial learner for a uniformly recursive family.

    On a new datum x at stage s, pick the least i <= s whose member set contains
    the data and matches it exactly below x; otherwise fall back to the data.
    """
    fam = K.REGISTRY.family(F) if isinstance(F, str) else F
    if not (fam.decidable and fam.decide is not None):
        raise ValueError(f"family {fam.id!r} is not decidable")

    class S(Session):
        def _next(self, sym, fresh):
            s = len(self.prefix) - 1
            if fresh:
                for i in range(s + 1):
                    if all(fam.decide(i, y) == (y in self.range) for y in range(sym + 1)) \
                            and all(fam.decide(i, y) for y in self.range):
                        self.log.append({"step": s, "datum": sym, "index": i})
                        return K.Base(fam.id, i)
            return K.Fin(self.range)
    return Learner(f"urec_cons_part[{fam.id}]", S,
                   {"consistent": True, "class": fam.id})


def propsep_learner() -> Learner:
    class S(Session):
        def __init__(self):
            self.max_odd = None
            super().__init__()

        def _initial(self):
            return K.Stride(2, 0, 0)

        def _next(self, sym, fresh):
            if fresh and sym % 2 == 1:
                self.max_odd = sym if self.max_odd is None else max(self.max_odd, sym)
                return K.NATURALS
            d = self.max_odd
            if d is None:
                return K.Stride(2, 0, 0)
            return K.Union(K.Fin(range(d + 1)), K.Stride(2, 0, d + 1))
    return Learner("propsep", S, {"consistent": True, "class": "propsep"})


def gold_part_learner() -> Learner:
    """Partial learner for the naturals and the initial segments.

    Guesses the data seen so far once |range| steps have passed without a new
    datum, and the naturals otherwise. A finite guess D can only be made while the
    range is exactly D, and quiet spells must outlast the range, so on texts for
    the naturals wrong finite guesses are rare as well as finitely many.
    """
    class S(Session):
        def __init__(self):
            self.quiet = 0
            super().__init__()

        def _initial(self):
            return K.EMPTY

        def _next(self, sym, fresh):
            self.quiet = 0 if fresh else self.quiet + 1
            return K.Fin(self.range) if self.quiet >= len(self.range) else K.NATURALS
    return Learner("gold_part", S, {"class": "gold"})


def single_hole_learner() -> Learner:
    """Conservative partial learner for the sets N - {h}.

    Guesses N - {h} only while h is the unique gap below the largest datum, so the
    only guess ever containing the target is the right one.
    """
    class S(Session):
        def __init__(self):
            self.gaps: set[int] = set()  # values below the largest datum not yet seen
            self.top = -1
            super().__init__()

        def _next(self, sym, fresh):
            if fresh:
                if sym > self.top:
                    self.gaps.update(range(self.top + 1, sym))
                    self.top = sym
                self.gaps.discard(sym)
            if len(self.gaps) == 1:
                return K.Diff(K.NATURALS, self.gaps)
            return K.Fin(self.range)
    return Learner("single_hole", S, {"conservative": True, "class": "single_hole"})


def alternating_hole_learner(bound: int = 8) -> Learner:
    """Fixture for the classes {N - {x} : x < bound}: alternates N with N minus the least
    value below bound not yet seen. One anomaly on even steps, exact in the limit on odd ones."""
    class S(Session):
        def _initial(self):
            return K.NATURALS

        def _next(self, sym, fresh):
            if len(self.prefix) % 2 == 1:
                return K.NATURALS
            g = next((y for y in range(bound) if y not in self.range), None)
            return K.NATURALS if g is None else K.Diff(K.NATURALS, [g])
    return Learner(f"alternating_hole[{bound}]", S, {"class": f"single_hole<{bound}"})


def tail_gap_learner(gap: int = 2) -> Learner:
    """Fixture: seen data plus a tail starting k above the largest datum, k cycling
    through 0..gap. Never repeats a code on a growing text, yet is exact whenever k = 0
    and the data below the maximum are complete."""
    class S(Session):
        def _initial(self):
            return K.NATURALS

        def _next(self, sym, fresh):
            k = (len(self.prefix) - 1) % (gap + 1)
            top = -1 if self.max is None else self.max
            return K.Union(K.Fin(self.range), K.Tail(top + 1 + k))
    return Learner(f"tail_gap[{gap}]", S)


def repeat_or_tail_learner() -> Learner:
    """Fixture: the naturals on even steps, the tail-union guess on odd steps."""
    inner = tail_union_learner()

    class S(Session):
        def __init__(self):
            self.inner = inner.session()
            super().__init__()

        def _initial(self):
            return K.NATURALS

        def _next(self, sym, fresh):
            guess = self.inner.feed(sym)
            return K.NATURALS if len(self.prefix) % 2 == 1 else guess
    return Learner("repeat_or_tail", S)


# -- BC* learners yield weak approximators ----------------------------------

def _covering_sequences(values: list, length: int):
    """Sequences over values of the given length that use every value, in lexicographic order."""
    k = len(values)

    def grow(prefix: list, used: set):
        if len(prefix) == length:
            yield tuple(prefix)
            return
        for v in values:
            missing = k - len(used | {v})
            if missing <= length - len(prefix) - 1:
                prefix.append(v)
                yield from grow(prefix, used | {v})
                prefix.pop()
    if k == 0:
        yield ()
    else:
        yield from grow([], set())


def _first_stage_with(code: K.HypCode, count: int, cap: int):
    """Least stage s <= cap with |enum(code, s)| >= count, or None."""
    if len(K.enum_set(code, cap)) < count:
        return None
    lo, hi = 0, cap
    while lo < hi:
        mid = (lo + hi) // 2
        if len(K.enum_set(code, mid)) >= count:
            hi = mid
        else:
            lo = mid + 1
    return lo


def bcstar_to_weakapprox(O: Learner, stage_cap: int = 4096) -> Learner:
    """Each conjecture on sigma is a staged set that starts as range(sigma) and adds
    the tail-union guess once a witness tau turns up: same range as sigma, twice as
    long as that range, and O on tau followed by 0..|sigma| pauses enumerates at
    least |sigma| elements.

    Candidates are dovetailed: candidate i joins the search at stage i, and is
    confirmed at the first stage where all of O's conjectures reach the count.
    """
    def conjecture(sigma: tuple) -> K.HypCode:
        rng = sorted({x for x in sigma if x != PAUSE})
        base = K.Fin(rng)
        extra = K.Union(K.Fin(rng), K.Tail(rng[-1] + 1)) if rng else K.NATURALS
        key = K.opaque_key("bcsw", O.id, list(sigma))
        if key in _BCSW_STATE:
            return K.Opaque(key)
        need = len(sigma)
        state = {"scanned": 0, "best": None, "tau": None,
                 "candidates": _covering_sequences(rng, 2 * len(rng))}

        def confirm(cand) -> int | None:
            sess = O.session()
            for sym in cand:
                sess.feed(sym)
            worst = 0
            for k in range(need + 1):
                if k:
                    sess.feed(PAUSE)
                st = _first_stage_with(sess.current, need, stage_cap)
                if st is None:
                    return None
                worst = max(worst, st)
            return worst

        def witness_stage(s: int):
            # scan candidates that joined by stage s (and could still beat the best)
            while state["scanned"] <= s and (state["best"] is None or state["scanned"] < state["best"]):
                cand = next(state["candidates"], None)
                if cand is None:
                    break
                i = state["scanned"]
                state["scanned"] += 1
                st = confirm(cand)
                if st is not None:
                    at = max(i, st)
                    if state["best"] is None or at < state["best"]:
                        state["best"], state["tau"] = at, cand
            best = state["best"]
            return best if best is not None and best <= s else None

        def enumerate_at(s: int):
            out = set(K.enum_set(base, s))
            if witness_stage(s) is not None:
                out |= K.enum_set(extra, s)
            return out

        code = K.register_opaque(key, enumerate_at)
        _BCSW_STATE[key] = state
        return code

    class S(Session):
        def _initial(self):
            return conjecture(())

        def _next(self, sym, fresh):
            return conjecture(tuple(self.prefix))
    return Learner(f"bcstar_to_weakapprox[{O.id}]", S, {"wraps": O.id})


_BCSW_STATE: dict = {}


def bcsw_witness(code: K.Opaque, s: int):
    """(stage, tau) of the witness found for a bcstar_to_weakapprox conjecture by stage s."""
    K.enum_at(code, s)
    state = _BCSW_STATE.get(code.key)
    if state is None or state["best"] is None or state["best"] > s:
        return None
    return state["best"], state["tau"]


# -- registry ----------------------------------------------------------------

LEARNERS: dict[str, Callable[..., Learner]] = {
    "tail_union": tail_union_learner,
    "range": range_learner,
    "cofinite": cofinite_learner,
    "superset_approx": lambda W="(stride 2 0 0)": superset_approx_learner(
        K.from_sexpr(W) if isinstance(W, str) else W),
    "urec_cons_part": lambda family="gold": urec_cons_part_learner(family),
    "propsep": propsep_learner,
    "gold_part": gold_part_learner,
    "single_hole": single_hole_learner,
    "alternating_hole": lambda bound=8: alternating_hole_learner(int(bound)),
    "tail_gap": lambda gap=2: tail_gap_learner(int(gap)),
    "repeat_or_tail": repeat_or_tail_learner,
}


def make_learner(name: str, **params) -> Learner:
    """Resolve a registered learner id (wrapped learners use ``wrapper:inner``)."""
    if ":" in name:
        from .combinators import WRAPPERS
        outer, inner = name.split(":", 1)
        args = []
        if outer.endswith("]") and "[" in outer:  # e.g. bcn_part[1]
            outer, arg = outer[:-1].split("[", 1)
            args.append(arg)
        if outer not in WRAPPERS:
            raise KeyError(f"unknown wrapper {outer!r}")
        return WRAPPERS[outer](make_learner(inner, **params), *args)
    if name == "bcstar_to_weakapprox":
        return bcstar_to_weakapprox(make_learner(params.pop("inner", "tail_union"), **params))
    if name not in LEARNERS:
        raise KeyError(f"unknown learner {name!r}")
    return LEARNERS[name](**params)
