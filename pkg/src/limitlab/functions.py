"""Learning total functions from their graphs over a finite, disciplined lab.

A lab is a finite list of partial functions together with a schedule that
defines exactly one new point (e, x) per stage, each function's domain growing
as an initial segment. The learner below conjectures ``theta`` codes, which are
registered in the kernel registry with their graphs as extensions (points are
encoded by ``cantor_pair(x, value)``).
"""

from __future__ import annotations

import hashlib
import json
import math
from typing import Callable, Sequence

import attrs

from . import kernel as K
from .criteria import CheckConfig, Status, Verdict, _candidates


class LabError(ValueError):
    pass


# -- raw functions and the lab file format -----------------------------------

@attrs.frozen
class RawFunction:
    """A partial function known through ``horizon``: value(x) or None, defined from stage ``start``."""
    name: str
    value: Callable[[int], int | None] = attrs.field(repr=False, eq=False)
    start: int = 0


def _rule(spec: dict) -> Callable[[int], int | None]:
    kind = spec.get("rule")
    if kind == "constant":
        c = int(spec["value"])
        return lambda x: c
    if kind == "identity":
        return lambda x: x
    if kind == "step":
        at, lo, hi = int(spec["at"]), int(spec.get("before", 0)), int(spec.get("after", 1))
        return lambda x: lo if x < at else hi
    if kind == "mod":
        a, b = int(spec["modulus"]), int(spec.get("offset", 0))
        return lambda x: (x + b) % a
    if kind == "table":
        vals = [None if v is None else int(v) for v in spec["values"]]
        rest = _rule(spec["then"]) if "then" in spec else (lambda x: None)
        return lambda x: vals[x] if x < len(vals) else rest(x)
    raise LabError(f"unknown function rule {kind!r}")


def raw_from_json(spec: dict, i: int) -> RawFunction:
    return RawFunction(spec.get("name", f"f{i}"), _rule(spec), int(spec.get("start", 0)))


# -- the disciplined enumeration -----------------------------------------------

@attrs.frozen
class PsiLab:
    id: str
    names: tuple
    horizon: int
    schedule: tuple = attrs.field(repr=False)   # stage -> (e, x)
    values: tuple = attrs.field(repr=False)     # e -> tuple of values on the domain
    defined_at: tuple = attrs.field(repr=False)  # e -> tuple of stages, defined_at[e][x]
    raw: tuple = attrs.field(default=(), repr=False, eq=False)  # the unscheduled functions

    def __len__(self) -> int:
        return len(self.names)

    def value(self, e: int, x: int):
        v = self.values[e]
        return v[x] if x < len(v) else None

    def defined_by(self, e: int, x: int, s: int) -> bool:
        """Whether function e is defined at x by stage s."""
        d = self.defined_at[e]
        return x < len(d) and d[x] <= s

    def dom_len(self, e: int, s: int) -> int:
        """Length of function e's domain at stage s (an initial segment)."""
        d = self.defined_at[e]
        lo, hi = 0, len(d)
        while lo < hi:
            mid = (lo + hi) // 2
            if d[mid] <= s:
                lo = mid + 1
            else:
                hi = mid
        return lo

    def check_discipline(self) -> None:
        seen = set()
        for s, (e, x) in enumerate(self.schedule):
            if (e, x) in seen:
                raise LabError(f"pair {(e, x)} defined twice")
            if any(not self.defined_by(e, y, s - 1) for y in range(x)):
                raise LabError(f"stage {s} defines {(e, x)} before its predecessors")
            seen.add((e, x))

    def to_json(self) -> dict:
        return {"id": self.id, "names": list(self.names), "horizon": self.horizon,
                "schedule": [list(p) for p in self.schedule]}


def normalize_enumeration(raw: Sequence[RawFunction], horizon: int, lab_id: str | None = None,
                          probe: int | None = None) -> PsiLab:
    """Schedule one definition per stage, round-robin over functions with a next point ready.

    Each function's values are read on 0..probe (default: the horizon); a function
    defined somewhere past a gap there is rejected.
    """
    probe = horizon if probe is None else probe
    tables = []
    for f in raw:
        vals = [f.value(x) for x in range(probe + 1)]
        known = [x for x, v in enumerate(vals) if v is not None]
        if known and known[-1] + 1 != len(known):
            gap = next(x for x in range(len(vals)) if vals[x] is None)
            raise LabError(f"{f.name}: domain is not an initial segment (undefined at {gap}, "
                           f"defined at {known[-1]})")
        tables.append(vals[: len(known)])
    next_x = [0] * len(raw)
    schedule, defined = [], [[] for _ in raw]
    cursor = 0
    for s in range(horizon):
        for i in range(len(raw)):
            e = (cursor + i) % len(raw)
            if next_x[e] < len(tables[e]) and raw[e].start <= s:
                break
        else:
            raise LabError(f"no function has a point ready at stage {s}")
        schedule.append((e, next_x[e]))
        defined[e].append(s)
        next_x[e] += 1
        cursor = e + 1
    if lab_id is None:
        blob = json.dumps([[f.name, f.start, tables[i][:50]] for i, f in enumerate(raw)])
        lab_id = "lab-" + hashlib.sha1(blob.encode()).hexdigest()[:10]
    values = tuple(tuple(t[: len(d)]) for t, d in zip(tables, defined))
    lab = PsiLab(lab_id, tuple(f.name for f in raw), horizon, tuple(schedule),
                 values, tuple(tuple(d) for d in defined), tuple(f.value for f in raw))
    lab.check_discipline()
    return lab


def lab_from_json(data: dict | str) -> PsiLab:
    if isinstance(data, str):
        data = json.loads(data)
    raw = [raw_from_json(spec, i) for i, spec in enumerate(data["functions"])]
    return normalize_enumeration(raw, int(data["horizon"]), data.get("id"))


# -- progress and theta -------------------------------------------------------

def _agree_len(lab: PsiLab, e: int, sigma: Sequence[int]) -> int:
    """Number of initial points where function e is defined and equals sigma."""
    vals = lab.values[e]
    k = 0
    while k < len(sigma) and k < len(vals) and vals[k] == sigma[k]:
        k += 1
    return k


def progress(lab: PsiLab, e: int, sigma: Sequence[int], s: int) -> bool:
    if not 0 <= s < len(lab.schedule):
        return False
    d, x = lab.schedule[s]
    return d == e and x < len(sigma) and _agree_len(lab, e, sigma) > x


def _progress_steps(lab: PsiLab, e: int, sigma: Sequence[int]) -> list[int]:
    k = min(_agree_len(lab, e, sigma), len(sigma))
    return [lab.defined_at[e][x] for x in range(min(k, len(lab.defined_at[e])))]


FN_EVAL: dict[K.OpaqueKey, Callable[[int], int | None]] = {}
UNDEFINED_KEY = K.opaque_key("fn-undefined")


def _register_fn(key: K.OpaqueKey, fn: Callable[[int], int | None], bound: int) -> K.Opaque:
    FN_EVAL.setdefault(key, fn)

    def graph(s: int):
        out = []
        for x in range(min(s, bound) + 1):
            v = fn(x)
            if v is not None and K.cantor_pair(x, v) <= s:
                out.append(K.cantor_pair(x, v))
        return out
    return K.register_opaque(key, graph)


DEFAULT_FN = _register_fn(UNDEFINED_KEY, lambda x: None, 0)


def evaluate(code: K.Opaque, x: int):
    """Value of a function code at x, or None if undefined within the lab horizon."""
    try:
        return FN_EVAL[code.key](x)
    except KeyError:
        raise K.RegistryError(f"not a function code: {code!r}") from None


class Theta:
    """Values of the theta function for (e, sigma, t) under a lab's schedule."""

    def __init__(self, lab: PsiLab, e: int, sigma: tuple, t: int):
        self.lab, self.sigma, self.t = lab, sigma, t
        # tracked index after stage s: drops to d < current whenever d makes progress on sigma
        steps = {s: d for d in range(e) for s in _progress_steps(lab, d, sigma)}
        self.track: list[int] = []
        cur = e
        for s in range(t, lab.horizon):
            if s > t and steps.get(s, e) < cur:
                cur = steps[s]
            self.track.append(cur)
        self.cache: dict[int, int | None] = {}

    def index_at(self, s: int) -> int:
        return self.track[s - self.t]

    def __call__(self, x: int):
        if x < len(self.sigma):
            return self.sigma[x]
        if x not in self.cache:
            val = None
            for s in range(self.t + x, self.lab.horizon):
                e = self.track[s - self.t]
                if self.lab.defined_by(e, x, s):
                    val = self.lab.value(e, x)
                    break
            self.cache[x] = val
        return self.cache[x]


def theta(lab: PsiLab, e: int, sigma: Sequence[int], t: int) -> K.Opaque:
    sigma = tuple(sigma)
    key = K.opaque_key("theta", lab.id, e, list(sigma), t)
    if key in FN_EVAL:
        return K.Opaque(key)
    return _register_fn(key, Theta(lab, e, sigma, t), lab.horizon)


# -- the learner --------------------------------------------------------------

@attrs.frozen(eq=False)
class FunctionLearner:
    id: str
    conjecture: Callable[[tuple], K.HypCode] = attrs.field(repr=False)

    def __call__(self, tau: Sequence[int]) -> K.HypCode:
        return self.conjecture(tuple(tau))

    def run(self, graph: Sequence[int]) -> list:
        """Conjectures on the graph prefixes of length 1..len(graph)."""
        graph = tuple(graph)
        return [self.conjecture(graph[:k]) for k in range(1, len(graph) + 1)]


@attrs.frozen
class FnTrace:
    learner_id: str
    graph: tuple
    conjectures: tuple

    def to_json(self) -> dict:
        return {"learner": self.learner_id, "graph": list(self.graph),
                "steps": [K.to_sexpr(c) for c in self.conjectures]}


def fn_trace(learner: FunctionLearner, graph: Sequence[int]) -> FnTrace:
    graph = tuple(graph)
    return FnTrace(learner.id, graph, tuple(learner.run(graph)))


def fj_choice(lab: PsiLab, tau: tuple):
    """(e, |sigma|, t) chosen on tau, or None when the default hypothesis is due.

    Stages are 0-based, so the progress search starts at |tau| - 1: with a
    single function, stage x defines x and a search from |tau| never succeeds.
    """
    n = len(tau)
    t = next((s for s in range(max(n - 1, 0), lab.horizon)
              if progress(lab, lab.schedule[s][0], tau, s)), None)
    if t is None:
        return None
    e = lab.schedule[t][0]
    agree = [_agree_len(lab, d, tau) for d in range(e)]
    prog = [_progress_steps(lab, d, tau) for d in range(e)]
    for k in range(n + 1):
        ok = True
        for d in range(e):
            if any(k <= s <= t for s in prog[d]):
                ok = False
                break
            if lab.dom_len(d, k) >= k and agree[d] >= k:
                ok = False  # function d is already defined on sigma by stage |sigma| and agrees with it
                break
        if ok:
            return e, k, t
    return None


def fj_learner(lab: PsiLab) -> FunctionLearner:
    def conj(tau: tuple) -> K.HypCode:
        pick = fj_choice(lab, tau)
        if pick is None:
            return DEFAULT_FN
        e, k, _ = pick
        # the start time is bound to |sigma|, so the code depends on (e, sigma) alone
        return theta(lab, e, tau[:k], k)
    return FunctionLearner(f"fj[{lab.id}]", conj)


# -- progress bookkeeping for a target ------------------------------------------

@attrs.frozen
class ProgressLog:
    target: int
    u: int
    times: tuple  # self-progress times after u

    def to_json(self) -> dict:
        return attrs.asdict(self)


def least_index(lab: PsiLab, e: int, upto: int) -> int:
    """Least lab index agreeing with function e on 0..upto."""
    ref = lab.values[e][: upto + 1]
    return next(d for d in range(len(lab)) if lab.values[d][: upto + 1] == ref)


def progress_log(lab: PsiLab, d: int) -> ProgressLog:
    graph = lab.values[d]
    u = max((s for e in range(d) for s in _progress_steps(lab, e, graph)), default=-1)
    times = tuple(s for s in lab.defined_at[d] if s > u)
    return ProgressLog(d, u, times)


# -- verdicts -------------------------------------------------------------------

def _fn_target(target) -> Callable[[int], int]:
    if callable(target):
        return target
    seq = tuple(target)
    return lambda x: seq[x] if x < len(seq) else None


def _fn_anomalies(code, f, m: int) -> list[int]:
    return [x for x in range(m + 1) if evaluate(code, x) is None or evaluate(code, x) != f(x)]


def _fn_codes(trace) -> list:
    return list(trace.conjectures if isinstance(trace, FnTrace) else trace)


def check_fn_part(trace, target, cfg: CheckConfig) -> Verdict:
    codes, f = _fn_codes(trace), _fn_target(target)
    w = cfg.w(len(codes))
    cands, counts = _candidates(codes, w, key=lambda c: c)
    witness = {"window": w, "counts": {K.to_sexpr(c): k for c, k in counts.most_common(50)},
               "candidates": [K.to_sexpr(c) for c in cands]}
    if len(cands) != 1:
        witness["reason"] = f"{len(cands)} candidates"
        return Verdict("fn_part", Status.INCONCLUSIVE, witness, cfg.to_json())
    bad = _fn_anomalies(cands[0], f, cfg.domain)
    witness["candidate"] = K.to_sexpr(cands[0])
    if bad:
        witness["reason"] = "sole candidate disagrees with target"
        return Verdict("fn_part", Status.INCONCLUSIVE, witness, cfg.to_json(),
                       [{"x": x} for x in bad])
    return Verdict("fn_part", Status.SUPPORTED, witness, cfg.to_json())


def _profile(codes, f, m):
    cache: dict = {}
    out = []
    for c in codes:
        if c not in cache:
            cache[c] = _fn_anomalies(c, f, m)
        out.append(cache[c])
    return out


def check_fn_bcstar(trace, target, cfg: CheckConfig) -> Verdict:
    codes, f = _fn_codes(trace), _fn_target(target)
    n, w = len(codes), cfg.w(len(codes))
    prof = [len(a) for a in _profile(codes, f, cfg.domain)]
    k = n
    while k > 0 and prof[k - 1] <= cfg.cap:
        k -= 1
    witness = {"bound": cfg.cap, "suffix_start": k, "suffix_max": max(prof[n - w:], default=0),
               "profile_tail": prof[-20:]}
    failures = [{"step": j, "anomalies": a} for j, a in enumerate(prof) if a > cfg.cap][-100:]
    status = Status.SUPPORTED if k <= n - w else Status.INCONCLUSIVE
    return Verdict("fn_bc_star", status, witness, cfg.to_json(), failures)


def _last_wrong(codes, f, m) -> dict[int, int]:
    last = {x: -1 for x in range(m + 1)}
    for j, bad in enumerate(_profile(codes, f, m)):
        for x in bad:
            last[x] = j
    return last


def check_fulkjain(trace, target, S, cfg: CheckConfig) -> Verdict:
    codes, f = _fn_codes(trace), _fn_target(target)
    n, w = len(codes), cfg.w(len(codes))
    last = _last_wrong(codes, f, cfg.domain)
    s_points = sorted(x for x in _points(S) if x <= cfg.domain)
    kstar = max((last[x] for x in s_points), default=-1) + 1
    unsettled = [x for x, j in last.items() if j >= n - w]
    ok = bool(s_points) and kstar <= n - w and not unsettled
    witness = {"k_star": kstar, "S_points": s_points, "condition_d": not unsettled,
               "condition_e": bool(s_points) and kstar <= n - w,
               "last_wrong": {str(x): j for x, j in last.items() if j >= 0}}
    failures = [{"x": x, "last_step": last[x]} for x in unsettled]
    return Verdict("fulkjain", Status.SUPPORTED if ok else Status.INCONCLUSIVE, witness,
                   cfg.to_json(), failures)


def _points(S) -> list[int]:
    if isinstance(S, K.CODE_TYPES):
        return [x for x in range(10_000) if K.decide_member(S, x) is True]
    return list(S)


def materialize_Sn(S, trace, target, n: int, cfg: CheckConfig) -> frozenset:
    """The stage-n set of the ascending-sets construction, restricted to 0..m."""
    verdict = check_fulkjain(trace, target, S, cfg)
    if not verdict.supported:
        raise ValueError("materialize_Sn needs a trace that satisfies conditions (d) and (e) for S")
    codes, f, m = _fn_codes(trace), _fn_target(target), cfg.domain
    onset = verdict.witness["k_star"]
    last = _last_wrong(codes, f, m)
    s_points = sorted(x for x in _points(S) if x <= m)
    current: set[int] = set()
    for j in range(min(n, len(codes) - 1) + 1):
        if j < onset:
            continue
        current |= {x for x in range(min(j, m) + 1) if last[x] < j}
        rest = [x for x in s_points if x not in current]
        current |= set(rest[: len(rest) // 2])
    return frozenset(current)


def lab_function(lab: PsiLab, e: int) -> Callable[[int], int | None]:
    """Function e in the limit, past the lab horizon too."""
    return lab.raw[e] if lab.raw else (lambda x: lab.value(e, x))


def default_horizon(lab_size: int, trace_len: int, domain: int) -> int:
    """A schedule long enough for theta codes to settle on 0..domain."""
    return trace_len + (domain + 2) * lab_size * 2 + 64 + math.ceil(trace_len / 2)
