"""Diagonalizing text builders.

Each adversary plays against a concrete learner, one symbol at a time, and keeps
an audit log of the hypotheses it saw and the membership questions it asked.
Membership is read at a caller-supplied stage budget; rerunning with a larger
budget is how tests check that an outcome does not hinge on the cutoff.
"""

from __future__ import annotations

import json
from typing import Callable

import attrs

from . import kernel as K
from .learners import Learner
from .texts import PAUSE, Target


class AdversaryError(ValueError):
    pass


def _log(audit: list | None, **entry) -> None:
    if audit is not None:
        audit.append(entry)


def _member(code: K.HypCode, x: int, budget: int) -> tuple[bool, str]:
    """Exact membership when the code settles it, else x enumerated within budget stages."""
    v = K.decide_member(code, x)
    if v is K.UNDECIDABLE:
        return K.member_at(code, x, x + budget), "budget"
    return v, "exact"


def audit_json(audit: list) -> str:
    return json.dumps(audit, default=K._json_default)


# -- Gold's class -------------------------------------------------------------

def gold_adversary(learner: Learner, budget: int, n: int, audit: list | None = None) -> tuple:
    """Repeat the last datum while the learner's guess already contains the next one."""
    if n <= 0:
        return ()
    sess = learner.session()
    text = [0]
    while len(text) < n:
        k = len(text) - 1
        hyp = sess.feed(text[k])
        nxt = text[k] + 1
        inside, tier = _member(hyp, nxt, budget)
        _log(audit, step=k, code=K.to_sexpr(hyp), query=nxt, budget=budget, tier=tier, member=inside)
        text.append(text[k] if inside else nxt)
    return tuple(text)


# -- even/odd class -----------------------------------------------------------

EVEN_HEAVY = (K.Density.ALL_BUT_FINITELY, K.Density.FINITELY)
ODD_HEAVY = (K.Density.FINITELY, K.Density.ALL_BUT_FINITELY)


def approximate_profile(code: K.HypCode, window: int) -> K.CofinalProfile:
    """Read densities off the stage-2w enumeration restricted to [w, 2w)."""
    seen = K.enum_set(code, 2 * window)

    def density(r):
        xs = [x for x in range(window, 2 * window) if x % 2 == r]
        hits = sum(x in seen for x in xs)
        if hits == len(xs):
            return K.Density.ALL_BUT_FINITELY
        return K.Density.FINITELY if hits == 0 else K.Density.INFINITELY_MANY
    return K.CofinalProfile(density(0), density(1), exact=False)


def evenodd_adversary(learner: Learner, n: int, approx_window: int | None = None,
                      audit: list | None = None) -> tuple[tuple, int]:
    """Feed evens until the guess is even-heavy, then odds until it is odd-heavy, and so on.

    Returns the prefix and the number of completed switches.
    """
    sess = learner.session()
    hyp = sess.current
    next_num = [0, 1]
    want, switches, text = 0, 0, []

    def shape(code):
        prof = K.profile(code)
        if prof is None:
            if approx_window is None:
                raise AdversaryError(f"no profile for {K.to_sexpr(code)}; pass approx_window")
            prof = approximate_profile(code, approx_window)
        return prof.even, prof.odd

    while len(text) < n:
        target = EVEN_HEAVY if want == 0 else ODD_HEAVY
        got = shape(hyp)
        if got == target:
            want = 1 - want
            switches += 1
            _log(audit, step=len(text), code=K.to_sexpr(hyp), switch_to="odd" if want else "even")
            continue
        x = next_num[want]
        next_num[want] += 2
        text.append(x)
        hyp = sess.feed(x)
    return tuple(text), switches


# -- cofinite sets ------------------------------------------------------------

@attrs.frozen
class CofiniteOutcome:
    kind: str  # StuckInA, InfinitelyManyAlternations or Undetermined
    phase: str
    w: int
    alternations: int
    log: tuple = attrs.field(repr=False)

    def to_json(self) -> dict:
        return {"kind": self.kind, "phase": self.phase, "w": self.w,
                "alternations": self.alternations, "log": list(self.log)}


def _contains(S, x: int) -> bool:
    if isinstance(S, Target):
        return S.contains(x)
    return K.decide_member(S, x) is True


def cofinite_adversary(L: Target, W, learner: Learner, budget: int, n: int,
                       alternation_evidence: int = 5) -> tuple[tuple, CofiniteOutcome]:
    """Withhold a point w of L and W until the learner drops it, then release it."""
    sess = learner.session()
    hyp = sess.current
    text: list = []
    fed: set[int] = set()
    log: list[dict] = []
    alternations = 0

    def pick_w() -> int:
        x = max(fed, default=-1) + 1
        while not (_contains(L, x) and _contains(W, x)):
            x += 1
        return x

    def feed(x):
        nonlocal hyp
        text.append(x)
        if x != PAUSE:
            fed.add(x)
        hyp = sess.feed(x)

    phase, w = "a", pick_w()
    log.append({"step": 0, "phase": "a", "w": w})
    cursor = 0  # next candidate for the ascending feed
    while len(text) < n:
        if phase == "a":
            inside, tier = _member(hyp, w, budget)
            if not inside:
                alternations += 1
                phase = "b"
                log.append({"step": len(text), "phase": "b", "w": w, "tier": tier,
                            "code": K.to_sexpr(hyp)})
                continue
            while cursor == w or cursor in fed or not _contains(L, cursor):
                cursor += 1
            feed(cursor)
        else:
            missing = [x for x in range(w + 1) if _contains(L, x) and x not in fed]
            if missing:
                feed(missing[0])
                continue
            phase, w = "a", pick_w()
            log.append({"step": len(text), "phase": "a", "w": w})
    if alternations >= alternation_evidence:
        kind = "InfinitelyManyAlternations"
    elif phase == "a":
        kind = "StuckInA"
    else:
        kind = "Undetermined"
    return tuple(text), CofiniteOutcome(kind, phase, w, alternations, tuple(log))


# -- the level construction ---------------------------------------------------

@attrs.frozen
class LevelAssignment:
    d: int
    learner: str
    stages: int
    budget: int
    levels: dict = attrs.field(repr=False)  # x -> level, for d <= x < d + stages
    cancelled: tuple = attrs.field(repr=False)  # per stage, the levels cancelled there

    def tau(self, e: int, s: int | None = None) -> tuple:
        """Members of level e below d + s, ascending (s defaults to the final stage)."""
        s = self.stages if s is None else s
        return tuple(x for x in range(self.d, self.d + s) if self.levels[x] == e)

    def cancelled_by(self, s: int) -> frozenset:
        out: set[int] = set()
        for c in self.cancelled[:s]:
            out |= c
        return frozenset(out)

    def to_json(self) -> dict:
        return {"d": self.d, "learner": self.learner, "stages": self.stages, "budget": self.budget,
                "levels": {str(x): lv for x, lv in sorted(self.levels.items())},
                "cancelled": [sorted(c) for c in self.cancelled]}


def separation_levels(d: int, learner: Learner, stages: int, budget: int) -> LevelAssignment:
    levels: dict[int, int] = {}
    cancelled: set[int] = set()
    history: list[frozenset] = []
    for s in range(stages):
        taus: dict[int, list[int]] = {}
        for x in range(d, d + s):
            taus.setdefault(levels[x], []).append(x)
        stage = min(s, budget)
        chosen = None
        for e in range(s):
            if e in cancelled:
                continue
            tau_e = taus.get(e, [])
            above = {y for y in range(d, d + s) if levels[y] > e}
            sess = learner.session()
            for lower in range(e):
                for x in taus.get(lower, []):
                    sess.feed(x)
            ok = len(K.enum_set(sess.current, stage) & above) >= len(tau_e)
            for x in tau_e:
                if not ok:
                    break
                sess.feed(x)
                ok = len(K.enum_set(sess.current, stage) & above) >= len(tau_e)
            if ok:
                chosen = e
                break
        if chosen is None:
            levels[d + s] = s
            history.append(frozenset())
        else:
            levels[d + s] = chosen
            newly = frozenset(range(chosen + 1, s + 1)) - cancelled
            cancelled |= newly
            history.append(newly)
    return LevelAssignment(d, learner.id, stages, budget, levels, tuple(history))


def separation_text(assignment: LevelAssignment, n: int) -> tuple:
    """Concatenate the level blocks; stop inside a block that is still growing at the horizon."""
    A = assignment
    by_level: dict[int, list[int]] = {}
    for x in sorted(A.levels):
        by_level.setdefault(A.levels[x], []).append(x)
    late = A.d + A.stages - A.stages // 4
    out: list[int] = []
    for e in sorted(by_level):
        block = by_level[e]
        out.extend(block)
        if len(out) >= n:
            break
        if len(block) >= 2 and block[-1] >= late:
            break  # this block looks infinite: the text stays inside it
    if len(out) < n:
        raise AdversaryError(f"{A.stages} stages give only {len(out)} symbols; "
                             f"rerun separation_levels with more stages")
    return tuple(out[:n])


ADVERSARIES: dict[str, Callable] = {
    "gold": gold_adversary,
    "evenodd": evenodd_adversary,
    "cofinite": cofinite_adversary,
}
