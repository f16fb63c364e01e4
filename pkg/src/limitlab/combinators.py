"""Learner-to-learner constructions.

Every wrapper returns an ordinary ``Learner`` whose session drives the inner
learner's session symbol by symbol. Schedules of the form "output X at least k
times iff ..." are run through an ``ObligationQueue``; steps with nothing due
fall back to a one-off padded code, so fallbacks never recur.
"""

from __future__ import annotations

import bisect
import math
from typing import Callable

import attrs

from . import kernel as K
from .learners import Learner, Session
from .texts import PAUSE

INF = math.inf


class Agreement:
    """The least points where a code's stage-s enumeration and the data disagree.

    ``update`` is called once per stage with the current range; it keeps the first
    ``keep`` disagreement points, rescanning only the points that changed.
    """

    def __init__(self, code: K.HypCode, keep: int = 1):
        self.code, self.keep = code, keep
        # pure codes enumerate x exactly at stage x, so no stage sets are needed
        self.prompt = K._pure_shape(code) is not None
        self.enum: frozenset = frozenset()
        self.stage = -1
        self.known: list[int] = []
        self.frontier = 0
        self.limit = -1

    def has(self, x: int) -> bool:
        """Membership of x in the stage-s enumeration."""
        if self.prompt:
            return x <= self.stage and K.decide_member(self.code, x) is True
        return x in self.enum

    def _bad(self, x: int, rng) -> bool:
        return self.has(x) != (x in rng)

    def update(self, s: int, rng, top: int, datum=None) -> list[int]:
        if self.prompt:
            touched = set(range(self.stage + 1, s + 1))
        else:
            new = K.enum_set(self.code, s)
            touched = set(new - self.enum) if len(new) != len(self.enum) else set()
            self.enum = new
        self.stage = s
        if datum is not None and datum != PAUSE:
            touched.add(datum)
        for x in touched:
            if x >= self.frontier:
                continue
            i = bisect.bisect_left(self.known, x)
            present = i < len(self.known) and self.known[i] == x
            bad = self._bad(x, rng)
            if bad and not present:
                self.known.insert(i, x)
            elif present and not bad:
                del self.known[i]
        self.limit = max(s, top)
        while len(self.known) < self.keep and self.frontier <= self.limit:
            if self._bad(self.frontier, rng):
                self.known.append(self.frontier)
            self.frontier += 1
        if len(self.known) > self.keep:
            self.frontier = self.known[self.keep]
            del self.known[self.keep:]
        return self.known

    @property
    def complete(self) -> bool:
        """True when ``known`` lists every disagreement."""
        return self.frontier > self.limit

    def first(self):
        return self.known[0] if self.known else INF


class ObligationQueue:
    """Per-key emission targets served round-robin in activation order."""

    def __init__(self):
        self.target: dict = {}
        self.emitted: dict = {}
        self.order: list = []
        self.cursor = 0

    def demand(self, key, count: int) -> None:
        if key not in self.target:
            self.target[key] = 0
            self.emitted[key] = 0
            self.order.append(key)
        if count > self.target[key]:
            self.target[key] = count

    def due(self) -> list:
        return [k for k in self.order if self.emitted[k] < self.target[k]]

    def pop(self):
        n = len(self.order)
        for i in range(n):
            j = (self.cursor + i) % n
            key = self.order[j]
            if self.emitted[key] < self.target[key]:
                self.emitted[key] += 1
                self.cursor = j + 1
                return key
        return None

    def to_json(self) -> list:
        return [{"key": K.to_sexpr(k) if isinstance(k, K.CODE_TYPES) else repr(k),
                 "target": self.target[k], "emitted": self.emitted[k]} for k in self.order]


@attrs.define
class QualityTable:
    """Current quality values of a construction, keyed by hypothesis position."""
    name: str
    values: dict = attrs.field(factory=dict)

    def to_json(self) -> dict:
        return {"name": self.name, "values": {str(k): v for k, v in self.values.items()}}


class _Wrapped(Session):
    def __init__(self, inner: Learner):
        self.inner = inner.session()
        self.step_no = -1
        super().__init__()

    def feed(self, sym):
        self.step_no += 1
        return super().feed(sym)

    def _top(self) -> int:
        return -1 if self.max is None else self.max


def _fallback(code: K.HypCode, step: int) -> K.Pad:
    # one-off code: a fallback never counts towards "infinitely often"
    return K.pad(code, step)


# -- finite approximation wrappers ----------------------------------------------

def finapprox_part_wrap(M1: Learner) -> Learner:
    class S(_Wrapped):
        def __init__(self):
            self.first: dict = {}
            super().__init__(M1)

        def _next(self, sym, fresh):
            e = self.inner.feed(sym)
            key = K.normalize(e)
            m = self.first.setdefault(key, self.step_no)
            D = [x for x in self.range if x <= m]
            self.log.append({"step": self.step_no, "m": m})
            return K.Union(K.Fin(D), K.Above(e, m))
    return Learner(f"finapprox_part_wrap({M1.id})", S, {"wraps": M1.id})


def finapprox_consv_part_wrap(M1: Learner) -> Learner:
    class S(_Wrapped):
        def __init__(self):
            self.first: dict = {}
            super().__init__(M1)

        def _next(self, sym, fresh):
            e = self.inner.feed(sym)
            key = K.normalize(e)
            m = self.first.setdefault(key, self.step_no)
            if not self.range:
                return K.EMPTY
            D = {x for x in self.range if x <= m}
            seen = {x for x in K.enum_set(e, self.step_no) if x <= m}
            if seen == D:
                self.log.append({"step": self.step_no, "m": m, "rule": "match"})
                return K.Union(K.Fin(D), K.Above(e, m))
            self.log.append({"step": self.step_no, "m": m, "rule": "hold"})
            return self.current
    return Learner(f"finapprox_consv_part_wrap({M1.id})", S, {"wraps": M1.id, "conservative": True})


# -- padding --------------------------------------------------------------------

def padding_normalize(N1: Learner) -> Learner:
    """Tag each emission with the number of emissions of earlier-appearing codes."""
    class S(_Wrapped):
        def __init__(self):
            self.index: dict = {}
            self.counts: list[int] = []
            super().__init__(N1)

        def _next(self, sym, fresh):
            e = self.inner.feed(sym)
            i = self.index.setdefault(K.normalize(e), len(self.counts))
            if i == len(self.counts):
                self.counts.append(0)
            self.counts[i] += 1
            return K.pad(e, sum(self.counts[:i]))
    return Learner(f"padding_normalize({N1.id})", S, {"wraps": N1.id})


# -- BC^n and BC* partial learners ----------------------------------------------

def _sets_up_to(n: int):
    """Canonical finite sets of size at most n, by increasing canonical index."""
    if n == 0:
        yield ()
        return
    e = 0
    while True:
        yield K.canonical_finite_set(e)
        e += 1
        while bin(e).count("1") > n:
            e += e & -e


def _all_sets():
    e = 0
    while True:
        yield K.canonical_finite_set(e)
        e += 1


class _SetList:
    def __init__(self, gen):
        self.gen, self.items = gen, []

    def __getitem__(self, j: int) -> tuple:
        while len(self.items) <= j:
            try:
                self.items.append(next(self.gen))
            except StopIteration:
                raise IndexError(j) from None
        return self.items[j]


def _first_disagreement(track: Agreement, F: tuple, sign: str, rng) -> float:
    """First disagreement of (code sign F) with the data, from the code's own list."""
    E = track.has
    Fs = set(F)
    best = INF
    for z in track.known:
        # z is a disagreement of the bare code; F can repair it
        fixed = z in Fs and (z in rng if sign == "+" else E(z))
        if not fixed:
            best = z
            break
    if best is INF and not track.complete:
        best = track.frontier  # all listed points repaired; nothing known beyond
    for x in F:
        if sign == "+" and not E(x) and x not in rng:
            best = min(best, x)
        elif sign == "-" and E(x) and x in rng:
            best = min(best, x)
    return best


def _modified(code: K.HypCode, F: tuple, sign: str) -> K.HypCode:
    if not F:
        return K.canonical_code(code)
    return K.canonical_code(K.Union(code, K.Fin(F)) if sign == "+" else K.Diff(code, F))


class _ModifiedSetsSession(_Wrapped):
    """Shared machinery of the two wrappers that emit an inner set plus F and minus F."""

    keep = 1

    def __init__(self, M: Learner, sets: _SetList):
        self.sets = sets
        self.tracks: dict = {}
        self.queue = ObligationQueue()
        self.canon: dict = {}
        super().__init__(M)

    def _observe(self, code) -> None:
        pass

    def _keys(self, code, track):
        raise NotImplementedError

    def _credit(self, j: int, m: int) -> bool:
        return m > 0

    def _next(self, sym, fresh):
        e = self.inner.feed(sym)
        key = K.normalize(e)
        if key not in self.tracks:
            self.tracks[key] = Agreement(key, self.keep)
        self._observe(key)
        s, top = self.step_no, self._top()
        for code, track in self.tracks.items():
            track.update(s, self.range, top, sym)
            for j, F, sign in self._keys(code, track):
                m = min(s - 1, _first_disagreement(track, F, sign, self.range))
                if self._credit(j, m):
                    ck = (code, j, sign)
                    if ck not in self.canon:
                        self.canon[ck] = _modified(code, F, sign)
                    self.queue.demand(self.canon[ck], int(m))
        out = self.queue.pop()
        self.log.append({"step": s, "emit": None if out is None else K.to_sexpr(out),
                         "keys": len(self.queue.order)})
        return out if out is not None else _fallback(e, s)


def bcn_part(M: Learner, n: int = 1) -> Learner:
    sets = _SetList(_sets_up_to(n))

    class S(_ModifiedSetsSession):
        keep = n + 1

        def __init__(self):
            self.cond1: dict = {}
            super().__init__(M, sets)

        def _keys(self, code, track):
            s = self.step_no
            z = track.known[n] if len(track.known) > n else INF
            J = max(self.cond1.get(code, -1), min(s - 1, z))
            self.cond1[code] = J
            # a key j can only earn credit m > j below the (n+1)-th disagreement
            hi = min(J, s - 2, z - 1 if z is not INF else s)
            for j in range(int(hi) + 1):
                try:
                    F = self.sets[j]
                except IndexError:
                    break
                yield j, F, "+"
                if F:
                    yield j, F, "-"

        def _credit(self, j, m):
            return m > j

    N1 = Learner(f"bcn_part_core[{n}]({M.id})", S, {"wraps": M.id, "n": n})
    return _renamed(padding_normalize(N1), f"bcn_part[{n}]({M.id})")


def bcstar_part_inf_often(M: Learner) -> Learner:
    sets = _SetList(_all_sets())

    class S(_ModifiedSetsSession):
        keep = 16  # repairs by sets F with up to 15 points are seen exactly

        def __init__(self):
            self.seen: dict = {}
            super().__init__(M, sets)

        def _observe(self, code):
            self.seen[code] = self.seen.get(code, 0) + 1

        def _keys(self, code, track):
            # key l is live once M has output the code l + 1 times
            for l in range(self.seen.get(code, 0)):
                F = self.sets[l]
                yield l, F, "+"
                if F:
                    yield l, F, "-"

    N1 = Learner(f"bcstar_inf_core({M.id})", S, {"wraps": M.id})
    return _renamed(padding_normalize(N1), f"bcstar_part_inf_often({M.id})")


def _renamed(learner: Learner, name: str) -> Learner:
    return Learner(name, learner.make_session, learner.meta)


def bcstar_part_once_correct(M: Learner) -> Learner:
    class S(_Wrapped):
        def __init__(self):
            self.codes: list = []
            self.tracks: dict = {}
            self.emitted: dict = {}
            self.quality = QualityTable("q")
            super().__init__(M)

        def _next(self, sym, fresh):
            e = K.normalize(self.inner.feed(sym))
            if e not in self.tracks:
                self.codes.append(e)
                self.tracks[e] = Agreement(e, 1)
                self.emitted[e] = 0
            n, top = self.step_no, self._top()
            q = {}
            for c in self.codes:
                t = self.tracks[c]
                t.update(n, self.range, top, sym)
                q[c] = min(n, t.first() - 1)
            pick = next((c for c in self.codes if self.emitted[c] < q[c]), None)
            rule = "a"
            if pick is None:
                # rule (b): over the observed codes, the least one of maximal quality
                best = max(q.values())
                pick, rule = next(c for c in self.codes if q[c] == best), "b"
            self.emitted[pick] += 1
            self.quality.values = {i: int(q[c]) for i, c in enumerate(self.codes[:16])}
            self.log.append({"step": n, "rule": rule, "emit": K.to_sexpr(pick),
                             "q": self.quality.to_json()["values"]})
            return pick

    O = Learner(f"bcstar_once_core({M.id})", S, {"wraps": M.id})
    return _renamed(padding_normalize(O), f"bcstar_part_once_correct({M.id})")


def vacstar_wpart_to_vac(M: Learner) -> Learner:
    class S(_Wrapped):
        def __init__(self):
            self.codes: list = []
            self.tracks: dict = {}
            super().__init__(M)

        def _next(self, sym, fresh):
            e = self.inner.feed(sym)
            key = K.normalize(e)
            if key not in self.tracks:
                self.codes.append(e)
                self.tracks[key] = Agreement(key, 1)
            stage, top = len(self.prefix), self._top()
            p = []
            for c in self.codes:
                t = self.tracks[K.normalize(c)]
                t.update(stage, self.range, top, sym)
                p.append(t.first())
            q = max(p)
            m = p.index(q)
            self.log.append({"step": self.step_no, "p": [None if v is INF else v for v in p[:16]],
                             "pick": m})
            return self.codes[m]
    return Learner(f"vacstar_wpart_to_vac({M.id})", S, {"wraps": M.id})


# -- conservative partial learners to approximate BC* partial learners ----------

def _entry_stage(code: K.HypCode, y: int, lo: int, hi: int):
    """Least stage in [lo, hi] at which y has been enumerated into code, or None."""
    if not K.member_at(code, y, hi):
        return None
    while lo < hi:
        mid = (lo + hi) // 2
        if K.member_at(code, y, mid):
            hi = mid
        else:
            lo = mid + 1
    return lo


class HSet:
    """The set built from hypotheses e_0..e_n and a text segment sigma.

    For each u, the active hypothesis is e_m for the least m whose enumeration has
    covered range(sigma) by stage u + t (t = |sigma|), else e_n; x belongs to the
    set when some active hypothesis at some u >= x contains x.
    """

    def __init__(self, codes: tuple, sigma: tuple):
        self.codes, self.sigma = codes, sigma
        self.t = len(sigma)
        self.data = sorted({x for x in sigma if x != PAUSE})
        self.cover: dict[int, int | None] = {}
        self.searched: dict[int, int] = {}
        self.decidable = all(K.is_decidable(c) for c in codes)

    def coverage(self, m: int, cap: int):
        """Least u <= cap with range(sigma) enumerated into e_m by stage u + t."""
        if m in self.cover:
            return self.cover[m]
        done = self.searched.get(m, -1)
        if done >= cap:
            return None
        code, stage = self.codes[m], cap + self.t
        entries = [_entry_stage(code, y, 0, stage) for y in self.data]
        self.searched[m] = cap
        if any(v is None for v in entries):
            return None
        u = max(max(entries, default=0) - self.t, 0)
        self.cover[m] = u
        return u

    def _segments(self, cap: int) -> list[tuple[int, int]]:
        """(start u, hypothesis position) change points of the active hypothesis, u <= cap."""
        n = len(self.codes) - 1
        starts = sorted((u, m) for m in range(n) if (u := self.coverage(m, cap)) is not None)
        out, active = [(0, n)], n
        for u, m in starts:
            if m < active:
                active = m
                if out[-1][0] == u:
                    out[-1] = (u, m)
                else:
                    out.append((u, m))
        return out

    def enumerate(self, s: int) -> set:
        segs = self._segments(s)
        out: set = set()
        for i, (u, m) in enumerate(segs):
            end = segs[i + 1][0] - 1 if i + 1 < len(segs) else s
            out.update(x for x in K.enum_set(self.codes[m], s) if x <= end)
        return out

    def _exact_cover(self, m: int):
        if m in self.cover:
            return self.cover[m]
        if not all(K.decide_member(self.codes[m], y) is True for y in self.data):
            self.cover[m] = None
            return None
        cap = max(self.t, 8)
        while (u := self.coverage(m, cap)) is None:
            cap *= 2
        return u

    def decide(self, x: int) -> bool:
        n = len(self.codes) - 1
        covers = {m: self._exact_cover(m) for m in range(n)}
        points = sorted({x} | {u for u in covers.values() if u is not None and u > x})
        for u in points:
            m = min((k for k, c in covers.items() if c is not None and c <= u), default=n)
            if K.decide_member(self.codes[m], x) is True:
                return True
        return False


def h_code(codes, sigma) -> K.Opaque:
    codes = tuple(K.normalize(c) for c in codes)
    sigma = tuple(sigma)
    key = K.opaque_key("H", list(codes), list(sigma))
    if key in K.REGISTRY.opaque:
        return K.Opaque(key)
    h = HSet(codes, sigma)
    return K.register_opaque(key, h.enumerate, h.decide if h.decidable else None)


def _consv_core(M: Learner) -> Learner:
    """The intermediate learner: H-sets scheduled by the quality numbers b and a."""
    class S(_Wrapped):
        def __init__(self):
            self.hyps: list = []
            self.b: list[list[int]] = []  # b[n][stage]
            self.ptr: list[int] = []
            self.queue = ObligationQueue()
            self.last = K.EMPTY
            self.table = QualityTable("a,b")
            super().__init__(M)

        def _b_at(self, n: int, stage: int) -> int:
            # largest s <= stage with T(0..s-1) inside W_{e_n, stage} plus pauses
            code, p = self.hyps[n], self.ptr[n]
            while p < stage and (self.prefix[p] == PAUSE or K.member_at(code, self.prefix[p], stage)):
                p += 1
            self.ptr[n] = p
            return p

        def _next(self, sym, fresh):
            N = self.step_no
            e = K.normalize(self.inner.feed(sym))
            if e not in self.hyps:
                self.hyps.append(e)
                self.ptr.append(0)
                self.b.append([self._b_at(len(self.hyps) - 1, st) for st in range(N)])
            for n in range(len(self.hyps)):
                self.b[n].append(self._b_at(n, N))
            rows = {}
            for n in range(len(self.hyps)):
                t = N - n
                if t < 0:
                    continue
                a = 1 + max((self.b[m][m + t] for m in range(n)), default=-1)
                b = self.b[n][N]
                rows[n] = (a, b)
                if b - 1 >= 1:
                    self.queue.demand(h_code(self.hyps[: n + 1], self.prefix[: a + 1]), b - 1)
            out = self.queue.pop()
            self.table.values = {n: {"a": a, "b": b} for n, (a, b) in list(rows.items())[:16]}
            self.log.append({"step": N, "emit": None if out is None else K.to_sexpr(out),
                             "table": self.table.to_json()["values"]})
            if out is None:
                return _fallback(self.last, N)
            self.last = out
            return out
    return Learner(f"consv_core({M.id})", S, {"wraps": M.id})


def _delay(O: Learner) -> Learner:
    """Copy O's outputs in order, holding each while the data stay inside it."""
    class S(_Wrapped):
        def __init__(self):
            self.outputs: list = []
            self.k = -1
            self.held_range: frozenset = frozenset()
            super().__init__(O)

        def _next(self, sym, fresh):
            self.outputs.append(self.inner.feed(sym))
            rng = frozenset(self.range)
            if self.k >= 0:
                d = self.outputs[self.k]
                if rng <= self.held_range and K.enum_set(d, len(self.prefix)) == rng:
                    return d
            self.k += 1
            self.held_range = rng
            self.log.append({"step": self.step_no, "release": self.k})
            return self.outputs[self.k]
    return Learner(f"delay({O.id})", S, {"wraps": O.id})


def consv_to_approxpart_bcstar(M: Learner) -> Learner:
    inner = finapprox_part_wrap(_delay(_consv_core(M)))
    return _renamed(inner, f"consv_to_approxpart_bcstar({M.id})")


WRAPPERS: dict[str, Callable[..., Learner]] = {
    "finapprox_part_wrap": lambda M: finapprox_part_wrap(M),
    "finapprox_consv_part_wrap": lambda M: finapprox_consv_part_wrap(M),
    "bcn_part": lambda M, n=1: bcn_part(M, int(n)),
    "bcstar_part_once_correct": lambda M: bcstar_part_once_correct(M),
    "bcstar_part_inf_often": lambda M: bcstar_part_inf_often(M),
    "consv_to_approxpart_bcstar": lambda M: consv_to_approxpart_bcstar(M),
    "vacstar_wpart_to_vac": lambda M: vacstar_wpart_to_vac(M),
    "padding_normalize": lambda M: padding_normalize(M),
}
