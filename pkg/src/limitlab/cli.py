"""Command-line surface: run experiment specs, stage duels, aggregate verdicts."""

from __future__ import annotations

import csv
import glob as globmod
import io
import json
import os
from concurrent.futures import ThreadPoolExecutor
from importlib import resources
from pathlib import Path

import click
import jsonschema

from . import adversaries as A
from . import functions as F
from . import kernel as K
from . import texts as T
from .criteria import CRITERIA, CheckConfig, ConfigError, Status
from .learners import make_learner, trace

OUT_ENV = "LIMITLAB_OUT"
CSV_COLUMNS = ["learner", "class", "target", "criterion", "status", "witness", "horizon", "budget"]

# report rows, strongest notion first
HIERARCHY = ["ex", "ex_star", "vac", "vac_star", "bc", "bc_a", "bc_star", "cons", "consv_part",
             "conf_part", "part", "approx", "weakapprox", "finapprox",
             "fn_part", "fn_bc_star", "fulkjain"]


class SpecError(Exception):
    pass


def schema(name: str) -> dict:
    return json.loads(resources.files("limitlab").joinpath("schemas", f"{name}.schema.json").read_text())


def validate(doc, name: str) -> None:
    jsonschema.validate(doc, schema(name))


def dumps(doc) -> str:
    return json.dumps(doc, sort_keys=True, indent=2, default=K._json_default) + "\n"


def out_dir() -> Path:
    return Path(os.environ.get(OUT_ENV, "limitlab-out"))


# -- resolving spec references ----------------------------------------------------

def resolve_target(cls_name: str | None, ref) -> T.Target:
    if isinstance(ref, dict) and "code" in ref:
        return T.target_from_code(ref.get("name", "custom"), K.from_sexpr(ref["code"]))
    if isinstance(ref, dict) and "finite" in ref:
        return T.finite_target(ref["finite"])
    try:
        cls = T.get_class(cls_name or "gold")
    except KeyError as e:
        raise SpecError(str(e)) from None
    if isinstance(ref, dict):
        return cls.by_param(ref.get("param")) if cls.by_param else cls.targets(ref["param"])
    return cls.targets(int(ref))


def resolve_learner(name: str, params: dict):
    try:
        return make_learner(name, **params)
    except (KeyError, TypeError) as e:
        raise SpecError(f"cannot build learner {name!r}: {e}") from None


def build_text(src: dict, target: T.Target, learner, n: int, budget: int) -> tuple[tuple, dict]:
    kind = src.get("kind", "canonical")
    if kind == "canonical":
        return T.canonical_text(target, n), {}
    if kind == "seeded":
        return T.seeded_text(target, int(src["seed"]), n), {}
    if kind == "adversary":
        return run_adversary(src["name"], learner, dict(src.get("params", {})), n, budget, target)
    raise SpecError(f"unknown text source {kind!r}")


def run_adversary(name: str, learner, params: dict, n: int, budget: int,
                  target: T.Target | None = None) -> tuple[tuple, dict]:
    audit: list = []
    n = int(params.pop("n", n))
    budget = int(params.pop("budget", budget))
    if name == "gold":
        text = A.gold_adversary(learner, budget, n, audit=audit)
        tail = text[3 * len(text) // 4:]
        shape = "ascending" if len(set(tail)) > 1 else "stuck"
        return text, {"adversary": name, "classification": shape, "distinct": len(set(text)),
                      "audit": audit}
    if name == "evenodd":
        window = params.pop("approx_window", None)
        text, switches = A.evenodd_adversary(learner, n, None if window is None else int(window),
                                             audit=audit)
        return text, {"adversary": name, "alternations": switches, "audit": audit}
    if name == "cofinite":
        L = target or T.cofinite_target(int(params.pop("target", 0)))
        W = K.from_sexpr(params.pop("W", "(tail 0)"))
        text, outcome = A.cofinite_adversary(L, W, learner, budget, n,
                                             int(params.pop("alternation_evidence", 5)))
        return text, {"adversary": name, **outcome.to_json()}
    raise SpecError(f"unknown adversary {name!r}")


def _criterion_args(entry, target: T.Target) -> tuple[str, dict]:
    if isinstance(entry, str):
        return entry, {}
    args = {k: v for k, v in entry.items() if k != "name"}
    if "D" in args:
        args["D"] = tuple(args["D"])
    if "V" in args:
        V = args["V"]
        args["V"] = target if V == "target" else set(V) if isinstance(V, list) else K.from_sexpr(V)
    return entry["name"], args


# -- run --------------------------------------------------------------------------

def _record(spec: dict, cls_name: str, target_name: str, verdict) -> dict:
    return {"learner": spec["learner"], "class": cls_name, "target": target_name,
            "horizon": spec["horizon"], "budget": spec.get("budget", spec["horizon"]),
            "verdict": verdict.to_json()}


def _csv_rows(records: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in records:
        v = r["verdict"]
        w.writerow([r["learner"], r["class"], r["target"], v["criterion"], v["status"],
                    json.dumps(v["witness"], sort_keys=True, default=K._json_default),
                    r["horizon"], r["budget"]])
    return buf.getvalue()


def _run_lab(spec: dict, cfg: CheckConfig):
    lab_doc = spec["lab"]
    if isinstance(lab_doc, str):
        lab_doc = json.loads(Path(lab_doc).read_text())
    validate(lab_doc, "lab")
    lab = F.lab_from_json(lab_doc)
    e = int(spec["target"])
    if not 0 <= e < len(lab):
        raise SpecError(f"lab {lab.id} has no function {e}")
    f = F.lab_function(lab, e)
    tr = F.fn_trace(F.fj_learner(lab), [f(x) for x in range(cfg.horizon)])
    S = set(F.progress_log(lab, F.least_index(lab, e, len(lab.values[e]) - 1)).times)
    checks = {"fn_part": lambda: F.check_fn_part(tr, f, cfg),
              "fn_bc_star": lambda: F.check_fn_bcstar(tr, f, cfg),
              "fulkjain": lambda: F.check_fulkjain(tr, f, S, cfg)}
    verdicts = []
    for entry in spec.get("criteria", list(checks)):
        name = entry if isinstance(entry, str) else entry["name"]
        if name not in checks:
            raise SpecError(f"unknown function criterion {name!r}")
        verdicts.append(checks[name]())
    return tr.to_json(), {}, lab.id, f"psi{e}", verdicts


def execute(spec: dict) -> dict[str, str]:
    """Run one experiment spec; returns file name -> contents."""
    validate(spec, "experiment")
    try:
        cfg = CheckConfig(horizon=spec["horizon"], budget=spec.get("budget", spec["horizon"]),
                          window=spec.get("window"), domain=spec.get("domain", 64),
                          anomaly_cap=spec.get("anomaly_cap"))
    except ConfigError as e:
        raise SpecError(str(e)) from None
    if "lab" in spec:
        trace_doc, extra, cls_name, target_name, verdicts = _run_lab(spec, cfg)
    else:
        cls_name = spec.get("class", "gold")
        target = resolve_target(cls_name, spec.get("target", 0))
        learner = resolve_learner(spec["learner"], dict(spec.get("learner_params", {})))
        prefix, extra = build_text(spec.get("text", {}), target, learner, cfg.horizon, cfg.budget)
        tr = trace(learner, prefix)
        trace_doc, target_name = tr.to_json(), target.name
        verdicts = []
        for entry in spec.get("criteria", ["part"]):
            name, args = _criterion_args(entry, target)
            if name not in CRITERIA:
                raise SpecError(f"unknown criterion {name!r}")
            verdicts.append(CRITERIA[name](tr, target, cfg, **args))
    files = {"trace.json": dumps(trace_doc)}
    if extra:
        files["adversary.json"] = dumps(extra)
    records = [_record(spec, cls_name, target_name, v) for v in verdicts]
    for r in records:
        files[f"verdict-{r['verdict']['criterion']}.json"] = dumps(r)
    files["summary.csv"] = _csv_rows(records)
    return files


def write_outputs(name: str, files: dict[str, str]) -> Path:
    dest = out_dir() / name
    dest.mkdir(parents=True, exist_ok=True)
    for fname, body in files.items():
        (dest / fname).write_text(body)
    return dest


@click.group()
def main():
    """Finite-horizon experiments on learning in the limit."""


@main.command()
@click.argument("spec_files", nargs=-1, required=True, type=click.Path())
@click.option("--jobs", default=1, show_default=True, help="Specs run in parallel threads.")
def run(spec_files, jobs):
    """Run experiment specs (JSON) and write traces, verdicts and a CSV summary."""
    def one(path):
        try:
            spec = json.loads(Path(path).read_text())
            name = spec.get("name", Path(path).stem)
            return path, write_outputs(name, execute(spec)), None
        except (OSError, json.JSONDecodeError, jsonschema.ValidationError, SpecError) as e:
            msg = e.message if isinstance(e, jsonschema.ValidationError) else str(e)
            return path, None, msg
    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        results = list(pool.map(one, spec_files))
    failed = False
    for path, dest, err in results:
        if err:
            failed = True
            click.echo(f"{path}: {err}", err=True)
        else:
            summary = (dest / "summary.csv").read_text().splitlines()[1:]
            click.echo(f"{path} -> {dest}")
            for row in csv.reader(summary):
                click.echo(f"  {row[3]:<12} {row[4]}")
    if failed:
        raise SystemExit(2)


# -- duel -------------------------------------------------------------------------

def _parse_params(pairs) -> dict:
    out = {}
    for p in pairs:
        if "=" not in p:
            raise click.BadParameter(f"expected k=v, got {p!r}", param_hint="--param")
        k, v = p.split("=", 1)
        try:
            out[k] = json.loads(v)
        except json.JSONDecodeError:
            out[k] = v
    return out


@main.command()
@click.argument("learner")
@click.argument("adversary")
@click.option("--param", "params", multiple=True, help="Adversary parameter k=v (n, budget, ...).")
def duel(learner, adversary, params):
    """Play an adversary against a learner and record its audit log and outcome."""
    params = _parse_params(params)
    if adversary not in A.ADVERSARIES:
        click.echo(f"unknown adversary {adversary!r}; known: {', '.join(A.ADVERSARIES)}", err=True)
        raise SystemExit(2)
    try:
        lr = resolve_learner(learner, dict(params.pop("learner_params", {})))
        text, outcome = run_adversary(adversary, lr, params, 200, 200)
    except (SpecError, A.AdversaryError) as e:
        click.echo(str(e), err=True)
        raise SystemExit(2)
    doc = {"learner": learner, "text": list(text), **outcome}
    validate(doc, "duel")
    dest = out_dir() / f"duel-{learner.replace(':', '_')}-{adversary}"
    dest.mkdir(parents=True, exist_ok=True)
    (dest / "duel.json").write_text(dumps(doc))
    summary = {k: v for k, v in outcome.items() if k not in ("audit", "log")}
    click.echo(json.dumps(summary, sort_keys=True))


# -- report -------------------------------------------------------------------------

def load_records(paths) -> tuple[list[dict], list[str], list[str]]:
    """Verdict records keyed per cell, latest file wins; also bad files and overrides."""
    cells: dict[tuple, tuple[float, dict, str]] = {}
    bad, notes = [], []
    for p in sorted(paths):
        try:
            rec = json.loads(Path(p).read_text())
            validate(rec, "verdict")
        except (OSError, json.JSONDecodeError, jsonschema.ValidationError) as e:
            bad.append(f"{p}: {e.message if isinstance(e, jsonschema.ValidationError) else e}")
            continue
        key = (rec["verdict"]["criterion"], rec["learner"], rec["class"], rec["target"])
        stamp = os.path.getmtime(p)
        if key in cells:
            old_stamp, _, old_path = cells[key]
            keep_new = stamp >= old_stamp
            notes.append(f"{'/'.join(key)}: {p if keep_new else old_path} overrides "
                         f"{old_path if keep_new else p}")
            if not keep_new:
                continue
        cells[key] = (stamp, rec, p)
    return [v[1] for _, v in sorted(cells.items())], bad, notes


def matrix(records: list[dict]) -> tuple[list[str], list[str], dict]:
    """Criterion x learner cells summarizing statuses over targets."""
    table: dict[tuple, list[str]] = {}
    for r in records:
        table.setdefault((r["verdict"]["criterion"], r["learner"]), []).append(r["verdict"]["status"])
    crits = sorted({c for c, _ in table}, key=lambda c: (HIERARCHY.index(c) if c in HIERARCHY
                                                        else len(HIERARCHY), c))
    learners = sorted({lr for _, lr in table})
    cells = {}
    for key, statuses in table.items():
        sup = statuses.count(Status.SUPPORTED.value)
        if Status.REFUTED.value in statuses:
            cells[key] = f"Refuted {statuses.count(Status.REFUTED.value)}/{len(statuses)}"
        else:
            cells[key] = f"{'Supported' if sup == len(statuses) else 'Inconclusive'} {sup}/{len(statuses)}"
    return crits, learners, cells


@main.command()
@click.argument("pattern")
@click.option("--csv", "csv_path", type=click.Path(), help="Where to write the matrix CSV.")
def report(pattern, csv_path):
    """Aggregate verdict files matching a glob into a criterion-by-learner matrix."""
    records, bad, notes = load_records(globmod.glob(pattern, recursive=True))
    crits, learners, cells = matrix(records)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["criterion", *learners])
    for c in crits:
        w.writerow([c, *(cells.get((c, lr), "") for lr in learners)])
    dest = Path(csv_path) if csv_path else out_dir() / "report.csv"
    dest.parent.mkdir(parents=True, exist_ok=True)
    dest.write_text(buf.getvalue())
    width = max([len(c) for c in crits] + [9])
    cols = [max(len(lr), 16) for lr in learners]
    click.echo("criterion".ljust(width) + "".join(f"  {lr:<{n}}" for lr, n in zip(learners, cols)))
    for c in crits:
        click.echo(c.ljust(width) + "".join(f"  {cells.get((c, lr), '-'):<{n}}"
                                            for lr, n in zip(learners, cols)))
    for n in notes:
        click.echo(f"note: {n}")
    for b in bad:
        click.echo(f"skipped malformed {b}", err=True)
    if bad:
        raise SystemExit(1)


if __name__ == "__main__":
    main()
