"""Finite-horizon verdicts for the learning criteria.

Limit properties cannot be settled from a prefix, so every check returns one of
three statuses and carries the evidence it used. "Infinitely often" is read as
"at least twice in the final window" and "almost always" as "from some step
k* <= n - w on", where n is the trace length and w the window.
"""

from __future__ import annotations

import enum
import json
import math
from collections import Counter
from functools import lru_cache
from typing import Iterable, Sequence

import attrs

from . import kernel as K
from .learners import Trace
from .texts import PAUSE, Target


class Status(str, enum.Enum):
    SUPPORTED = "Supported"
    REFUTED = "Refuted"
    INCONCLUSIVE = "Inconclusive"


class ConfigError(ValueError):
    pass


@attrs.frozen
class CheckConfig:
    horizon: int = 600
    budget: int = 600
    window: int | None = None
    domain: int = 64
    anomaly_cap: int | None = None

    def __attrs_post_init__(self):
        if min(self.horizon, self.budget, self.domain) < 1:
            raise ConfigError("horizon, budget and domain must be at least 1")
        if self.window is not None and not 1 <= self.window <= self.horizon:
            raise ConfigError("window must lie in [1, horizon]")

    def w(self, n: int) -> int:
        return self.window if self.window is not None else math.ceil(n / 3)

    @property
    def cap(self) -> int:
        """Largest anomaly count BC* accepts on the checked domain."""
        return self.anomaly_cap if self.anomaly_cap is not None else (self.domain + 1) // 4

    def to_json(self) -> dict:
        return attrs.asdict(self)


@attrs.frozen
class Verdict:
    criterion: str
    status: Status
    witness: dict
    config: dict
    failures: list = attrs.field(factory=list)

    @property
    def supported(self) -> bool:
        return self.status is Status.SUPPORTED

    def to_json(self) -> dict:
        return {"criterion": self.criterion, "status": self.status.value,
                "witness": self.witness, "config": self.config, "failures": self.failures}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, default=K._json_default)


def _codes(trace) -> list:
    return list(trace.conjectures if isinstance(trace, Trace) else trace)


# -- membership evidence ------------------------------------------------------

@lru_cache(maxsize=50_000)
def membership_vector(code: K.HypCode, m: int, budget: int) -> tuple[tuple, bool]:
    """Membership of 0..m in code, and whether every entry was decided exactly."""
    out, exact = [], True
    for x in range(m + 1):
        v = K.decide_member(code, x)
        if v is K.UNDECIDABLE:
            exact = False
            v = K.member_at(code, x, budget)
        out.append(bool(v))
    return tuple(out), exact


def _target_vector(target, m: int) -> tuple:
    if isinstance(target, Target):
        return tuple(target.contains(x) for x in range(m + 1))
    return membership_vector(target, m, max(m, 1))[0]


def _points(V, m: int) -> list[int]:
    if V is None:
        return list(range(m + 1))
    if isinstance(V, Target):
        return [x for x in range(m + 1) if V.contains(x)]
    if isinstance(V, (set, frozenset, list, tuple)):
        return sorted(x for x in V if x <= m)
    return [x for x in range(m + 1) if K.decide_member(V, x) is True]


def anomalies(code: K.HypCode, target, cfg: CheckConfig, points=None) -> tuple[int, bool]:
    vec, exact = membership_vector(code, cfg.domain, cfg.budget)
    tvec = _target_vector(target, cfg.domain)
    xs = range(cfg.domain + 1) if points is None else points
    return sum(vec[x] != tvec[x] for x in xs), exact


def _candidates(codes: list, w: int, key=K.normalize) -> tuple[list, Counter]:
    """Codes seen at least twice in the final window, spread over half of it or more.

    A code output finitely often can still repeat on neighbouring prefixes (a
    fallback guess held through pauses); the spread rule keeps such local runs out.
    """
    window = [key(c) for c in codes[len(codes) - w:]]
    counts = Counter(window)
    first: dict = {}
    last: dict = {}
    for j, c in enumerate(window):
        first.setdefault(c, j)
        last[c] = j
    return [c for c, k in counts.items() if k >= 2 and last[c] - first[c] >= w // 2], counts


def _count_table(counts: Counter, limit: int = 50) -> dict:
    return {K.to_sexpr(c): k for c, k in counts.most_common(limit)}


# -- consistency and the partial-learning family ------------------------------

def check_cons(trace: Trace, cfg: CheckConfig) -> Verdict:
    codes, prefix = _codes(trace), trace.prefix
    seen: list[int] = []
    seen_set: set[int] = set()
    unwitnessed = []
    for k, (sym, code) in enumerate(zip(prefix, codes)):
        if sym != PAUSE and sym not in seen_set:
            seen_set.add(sym)
            seen.append(sym)
        for x in seen:
            v = K.decide_member(code, x)
            if v is False:
                return Verdict("cons", Status.REFUTED,
                               {"step": k, "x": x, "code": K.to_sexpr(code), "tier": "exact"},
                               cfg.to_json(), [{"step": k, "x": x}])
            if v is K.UNDECIDABLE and not K.member_at(code, x, cfg.budget):
                unwitnessed.append({"step": k, "x": x})
    if unwitnessed:
        return Verdict("cons", Status.INCONCLUSIVE, {"unwitnessed": len(unwitnessed)},
                       cfg.to_json(), unwitnessed[:100])
    return Verdict("cons", Status.SUPPORTED, {"steps": len(codes)}, cfg.to_json())


def _agrees(code: K.HypCode, target, cfg: CheckConfig) -> tuple[bool, bool, list]:
    vec, exact = membership_vector(code, cfg.domain, cfg.budget)
    tvec = _target_vector(target, cfg.domain)
    bad = [x for x in range(cfg.domain + 1) if vec[x] != tvec[x]]
    return not bad, exact, bad


def check_part(trace, target, cfg: CheckConfig, name: str = "part") -> Verdict:
    codes = _codes(trace)
    w = cfg.w(len(codes))
    cands, counts = _candidates(codes, w)
    witness = {"window": w, "counts": _count_table(counts), "candidates": [K.to_sexpr(c) for c in cands]}
    if len(cands) != 1:
        witness["reason"] = f"{len(cands)} candidates"
        return Verdict(name, Status.INCONCLUSIVE, witness, cfg.to_json())
    ok, exact, bad = _agrees(cands[0], target, cfg)
    witness.update(candidate=K.to_sexpr(cands[0]), tier="exact" if exact else "budget")
    if not ok:
        witness["reason"] = "sole candidate disagrees with target"
        return Verdict(name, Status.INCONCLUSIVE, witness, cfg.to_json(),
                       [{"x": x} for x in bad])
    return Verdict(name, Status.SUPPORTED, witness, cfg.to_json())


def check_conf_part(trace, cfg: CheckConfig) -> Verdict:
    codes = _codes(trace)
    w = cfg.w(len(codes))
    cands, counts = _candidates(codes, w)
    witness = {"window": w, "counts": _count_table(counts), "candidates": [K.to_sexpr(c) for c in cands]}
    if len(cands) == 1:
        witness["candidate"] = K.to_sexpr(cands[0])
        return Verdict("conf_part", Status.SUPPORTED, witness, cfg.to_json())
    witness["reason"] = f"{len(cands)} candidates"
    return Verdict("conf_part", Status.INCONCLUSIVE, witness, cfg.to_json())


def _pure_bound(*codes) -> int | None:
    """A point past which all the given pure codes are periodic with a common period."""
    start, period = 0, 1
    for c in codes:
        shape = K._pure_shape(c)
        if shape is None:
            return None
        start, period = max(start, shape[0]), math.lcm(period, shape[1])
    return start + 2 * period


def superset_of_target(code: K.HypCode, target: Target, cfg: CheckConfig):
    """(answer, exact): whether code's extension contains the target."""
    tcode = target.code
    bound = _pure_bound(code, tcode) if tcode is not None else None
    if bound is not None:
        return all(K.decide_member(code, x) is True
                   for x in range(bound) if target.contains(x)), True
    vec, exact = membership_vector(code, cfg.domain, cfg.budget)
    ans = all(vec[x] for x in range(cfg.domain + 1) if target.contains(x))
    return ans, False


def check_consv_part(trace, target: Target, cfg: CheckConfig) -> Verdict:
    codes = _codes(trace)
    distinct = list(dict.fromkeys(K.normalize(c) for c in codes))
    exact_sup, apparent = [], []
    for c in distinct:
        ans, exact = superset_of_target(c, target, cfg)
        if ans:
            (exact_sup if exact else apparent).append(K.to_sexpr(c))
    witness = {"supersets": exact_sup, "apparent_supersets": apparent}
    if len(exact_sup) >= 2:
        return Verdict("consv_part", Status.REFUTED, witness, cfg.to_json(),
                       [{"superset": s} for s in exact_sup])
    part = check_part(codes, target, cfg)
    witness.update(part=part.witness)
    if apparent and len(exact_sup) + len(apparent) >= 2:
        witness["reason"] = "superset test not exact for some codes"
        return Verdict("consv_part", Status.INCONCLUSIVE, witness, cfg.to_json())
    return Verdict("consv_part", part.status, witness, cfg.to_json(), part.failures)


# -- anomaly-counting criteria -------------------------------------------------

def _anomaly_profile(codes: list, target, cfg: CheckConfig):
    cache: dict = {}
    profile, exact = [], True
    for c in codes:
        key = K.normalize(c)
        if key not in cache:
            cache[key] = anomalies(c, target, cfg)
        a, ex = cache[key]
        exact = exact and ex
        profile.append(a)
    return profile, exact


def _suffix_start(flags: Sequence[bool]) -> int:
    """Least k such that flags[j] holds for every j >= k."""
    k = len(flags)
    while k > 0 and flags[k - 1]:
        k -= 1
    return k


def check_bc_family(trace, target, cfg: CheckConfig, a=0) -> Verdict:
    """a = 0 for BC, a natural for BC^a, None or "*" or math.inf for BC*."""
    codes = _codes(trace)
    n, w = len(codes), cfg.w(len(codes))
    star = a is None or a == "*" or a == math.inf
    bound = cfg.cap if star else int(a)
    name = "bc_star" if star else ("bc" if bound == 0 else f"bc{bound}")
    profile, exact = _anomaly_profile(codes, target, cfg)
    kstar = _suffix_start([p <= bound for p in profile])
    failures = [{"step": j, "anomalies": p} for j, p in enumerate(profile) if p > bound]
    witness = {"bound": bound, "suffix_start": kstar, "tier": "exact" if exact else "budget",
               "suffix_max": max(profile[n - w:], default=0)}
    if star:
        witness["profile_tail"] = profile[n - w:][-20:]
    if not exact:
        witness["reason"] = "anomalies counted at budget, not exactly"
        return Verdict(name, Status.INCONCLUSIVE, witness, cfg.to_json(), failures[-100:])
    status = Status.SUPPORTED if kstar <= n - w else Status.INCONCLUSIVE
    return Verdict(name, status, witness, cfg.to_json(), failures[-100:])


def _final_run_start(codes: list) -> int:
    keys = [K.normalize(c) for c in codes]
    k = len(keys) - 1
    while k > 0 and keys[k - 1] == keys[-1]:
        k -= 1
    return max(k, 0)


def _convergence(codes, target, cfg, bound: int, name: str) -> Verdict:
    n, w = len(codes), cfg.w(len(codes))
    if not codes:
        return Verdict(name, Status.INCONCLUSIVE, {"reason": "empty trace"}, cfg.to_json())
    k = _final_run_start(codes)
    a, exact = anomalies(codes[-1], target, cfg)
    witness = {"code": K.to_sexpr(codes[-1]), "run_start": k, "anomalies": a,
               "tier": "exact" if exact else "budget"}
    # the run must start before the window, so the final code is not new there
    ok = exact and k < n - w and a <= bound
    return Verdict(name, Status.SUPPORTED if ok else Status.INCONCLUSIVE, witness, cfg.to_json())


def check_ex(trace, target, cfg: CheckConfig) -> Verdict:
    return _convergence(_codes(trace), target, cfg, 0, "ex")


def check_exstar(trace, target, cfg: CheckConfig) -> Verdict:
    return _convergence(_codes(trace), target, cfg, cfg.cap, "ex_star")


def _vacillation(codes, target, cfg, bound: int, name: str) -> Verdict:
    n, w = len(codes), cfg.w(len(codes))
    keys = [K.normalize(c) for c in codes]
    before = set(keys[: n - w])
    window = list(dict.fromkeys(keys[n - w:]))
    fresh = [c for c in window if c not in before]
    scored = {K.to_sexpr(c): anomalies(c, target, cfg) for c in window}
    exact = all(ex for _, ex in scored.values())
    witness = {"window_codes": {s: a for s, (a, _) in scored.items()},
               "new_in_window": [K.to_sexpr(c) for c in fresh],
               "tier": "exact" if exact else "budget"}
    ok = exact and not fresh and all(a <= bound for a, _ in scored.values())
    return Verdict(name, Status.SUPPORTED if ok else Status.INCONCLUSIVE, witness, cfg.to_json())


def check_vac(trace, target, cfg: CheckConfig) -> Verdict:
    return _vacillation(_codes(trace), target, cfg, 0, "vac")


def check_vacstar(trace, target, cfg: CheckConfig) -> Verdict:
    return _vacillation(_codes(trace), target, cfg, cfg.cap, "vac_star")


# -- approximation ---------------------------------------------------------------

@lru_cache(maxsize=256)
def _disagreement_table(codes: tuple, tvec: tuple, budget: int) -> tuple[tuple, bool]:
    # the target enters only through its vector on 0..m, which keeps this cacheable
    m = len(tvec) - 1
    last = [-1] * (m + 1)
    exact = True
    wrong: dict = {}
    for j, c in enumerate(codes):
        key = K.normalize(c)
        if key not in wrong:
            vec, ex = membership_vector(c, m, budget)
            wrong[key] = ([x for x in range(m + 1) if vec[x] != tvec[x]], ex)
        xs, ex = wrong[key]
        exact = exact and ex
        for x in xs:
            last[x] = j
    return tuple(last), exact


def _last_disagreements(codes: list, target, cfg: CheckConfig, points: Iterable[int]):
    """Per point, the last step whose conjecture disagrees with the target there (or -1)."""
    table, exact = _disagreement_table(tuple(codes), _target_vector(target, cfg.domain), cfg.budget)
    return {x: table[x] for x in points}, exact


def check_finapprox(trace, target, D: Iterable[int], cfg: CheckConfig) -> Verdict:
    codes = _codes(trace)
    n, w = len(codes), cfg.w(len(codes))
    D = K.finite_set(D)
    if D and D[-1] > cfg.domain:
        cfg = attrs.evolve(cfg, domain=D[-1])
    last, exact = _last_disagreements(codes, target, cfg, D)
    kstar = max(last.values(), default=-1) + 1
    failures = [{"x": x, "last_step": s} for x, s in last.items() if s >= 0]
    witness = {"D": list(D), "k_star": kstar, "tier": "exact" if exact else "budget"}
    status = Status.SUPPORTED if kstar <= n - w else Status.INCONCLUSIVE
    return Verdict("finapprox", status, witness, cfg.to_json(), failures)


def check_weakapprox(trace, target, V, cfg: CheckConfig) -> Verdict:
    """Agreement on V from k* on, plus per-point settling on all of 0..m (the
    finite variants of V restricted to the domain)."""
    codes = _codes(trace)
    n, w = len(codes), cfg.w(len(codes))
    vpoints = _points(V, cfg.domain)
    last, exact = _last_disagreements(codes, target, cfg, range(cfg.domain + 1))
    kstar = max((last[x] for x in vpoints), default=-1) + 1
    unsettled = [x for x, s in last.items() if s >= n - w]
    witness = {"k_star": kstar, "V_points": len(vpoints), "tier": "exact" if exact else "budget",
               "last_disagreement": {str(x): s for x, s in last.items() if s >= 0},
               "finite_variants_certified": not unsettled}
    failures = [{"x": x, "last_step": last[x]} for x in unsettled]
    ok = bool(vpoints) and kstar <= n - w and not unsettled
    return Verdict("weakapprox", Status.SUPPORTED if ok else Status.INCONCLUSIVE,
                   witness, cfg.to_json(), failures)


def check_approx(traces: Sequence, target, V, cfg: CheckConfig) -> Verdict:
    if len(traces) < 2:
        raise ConfigError("check_approx needs traces on at least two texts")
    parts = [check_weakapprox(t, target, V, cfg) for t in traces]
    ok = all(p.supported for p in parts)
    witness = {"per_text": [p.witness["k_star"] for p in parts],
               "statuses": [p.status.value for p in parts]}
    failures = [f for p in parts for f in p.failures]
    return Verdict("approx", Status.SUPPORTED if ok else Status.INCONCLUSIVE, witness,
                   cfg.to_json(), failures)


CRITERIA = {
    "cons": lambda tr, tg, cfg, **kw: check_cons(tr, cfg),
    "part": lambda tr, tg, cfg, **kw: check_part(tr, tg, cfg),
    "consv_part": lambda tr, tg, cfg, **kw: check_consv_part(tr, tg, cfg),
    "conf_part": lambda tr, tg, cfg, **kw: check_conf_part(tr, cfg),
    "bc": lambda tr, tg, cfg, **kw: check_bc_family(tr, tg, cfg, 0),
    "bc_a": lambda tr, tg, cfg, a=1, **kw: check_bc_family(tr, tg, cfg, a),
    "bc_star": lambda tr, tg, cfg, **kw: check_bc_family(tr, tg, cfg, None),
    "ex": lambda tr, tg, cfg, **kw: check_ex(tr, tg, cfg),
    "ex_star": lambda tr, tg, cfg, **kw: check_exstar(tr, tg, cfg),
    "vac": lambda tr, tg, cfg, **kw: check_vac(tr, tg, cfg),
    "vac_star": lambda tr, tg, cfg, **kw: check_vacstar(tr, tg, cfg),
    "finapprox": lambda tr, tg, cfg, D=(0, 1, 2), **kw: check_finapprox(tr, tg, D, cfg),
    "weakapprox": lambda tr, tg, cfg, V=None, **kw: check_weakapprox(tr, tg, V, cfg),
}
