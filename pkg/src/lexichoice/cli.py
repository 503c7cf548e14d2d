"""Command-line front end: read a spec file, run tasks, write a JSON report.

Exit codes: 0 when every verdict matches its expectation, 1 when some
verification failed (the report carries a replayable witness), 2 for input
or parse errors.
"""
from __future__ import annotations

import argparse
import re
import sys
import time
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

from . import __version__
from .compose import (
    Leaf,
    Node,
    eval_tree,
    fold_left,
    fold_right,
    procedure_aggregate_quota,
    procedure_individual_quota,
    quota_labels,
)
from .contracts import (
    classify_mto1_tlcr,
    is_equivalence_excluding,
    verify_lemma_mto1,
)
from .core import ChoiceFunction, Composed, ItemSet, Responsive
from .errors import BudgetExceeded, ConditionNotViolated, LexiChoiceError, PreconditionFailed, SpecError
from .families import Domain, rng_of, sample_mto1_responsive, sample_responsive
from .props import (
    Property,
    SafetyDomain,
    check_choice,
    check_domain_safety,
    check_singleton_profile,
    check_sm_safety,
    check_sv_sm_profile,
    sv_first_threshold_gap,
    classify_tlcr,
    verify_preservation,
)
from .serialize import Spec, dumps, function_out, load_spec, params_out, partition_out, ground_out, validate
from .witness import ProcedureWitness, Witness, procedure_witness, synthesize

THEOREMS = ("thm1", "prop-pi", "prop-sm", "sv-sub", "sub-sv", "sv-subsm", "subsm-sv", "remark-con", "claim-lr", "lemma-mto1")


@dataclass
class Context:
    spec: Spec
    seed: int
    samples: int
    exhaustive: bool
    verdicts: list = field(default_factory=list)
    witnesses: list = field(default_factory=list)
    functions: dict = field(default_factory=dict)
    caveats: list = field(default_factory=list)

    def caveat(self, text: str) -> None:
        if text not in self.caveats:
            self.caveats.append(text)

    # -- function registry -------------------------------------------------

    def register(self, name: str, f) -> str:
        """Store ``f`` (and the parts of a composition) under ``name``."""
        if isinstance(f, Composed):
            names = {
                id(f.first): self.register(name + ".first", f.first),
                id(f.second): self.register(name + ".second", f.second),
                id(f.exclusion): self.register(name + ".E", f.exclusion),
            }
            self.functions[name] = function_out(f, names)
        else:
            self.functions[name] = function_out(f)
        return name

    def add_witness(self, w: Witness) -> str:
        wid = f"w{len(self.witnesses)}"
        refs = {
            "C1": self.register(f"{wid}.C1", w.C1),
            "C2": self.register(f"{wid}.C2", w.C2),
            "E": self.register(f"{wid}.E", w.exclusion),
        }
        self.functions[f"{wid}.composed"] = {"kind": "lex", "first": refs["C1"], "second": refs["C2"], "exclusion": refs["E"]}
        refs["composed"] = f"{wid}.composed"
        self.witnesses.append(
            {
                "id": wid,
                "condition": w.condition,
                "property": w.property_broken,
                "Y_small": w.Y_small.sorted(),
                "Y_big": w.Y_big.sorted(),
                "narrative": w.narrative,
                "refs": refs,
            }
        )
        return wid

    def add_check_witness(self, C: ChoiceFunction, prop: Property, y: ItemSet, yp: ItemSet, detail: str) -> str:
        wid = f"w{len(self.witnesses)}"
        ref = self.register(f"{wid}.composed", C)
        self.witnesses.append(
            {
                "id": wid,
                "condition": "check",
                "property": prop.value,
                "Y_small": y.sorted(),
                "Y_big": yp.sorted(),
                "narrative": detail,
                "refs": {"composed": ref},
            }
        )
        return wid

    def add_procedure_witness(self, pw: ProcedureWitness) -> str:
        wid = f"w{len(self.witnesses)}"
        refs = {f"C{i + 1}": self.register(f"{wid}.C{i + 1}", c) for i, c in enumerate(pw.choices)}
        self.witnesses.append(
            {
                "id": wid,
                "condition": f"{pw.procedure}-procedure-vs-{pw.fold}-fold",
                "property": "procedure-mismatch",
                "Y_small": pw.Y.sorted(),
                "Y_big": pw.Y.sorted(),
                "narrative": pw.narrative,
                "refs": refs,
                "N": pw.N,
                "procedure_output": pw.procedure_output.sorted(),
                "fold_output": pw.fold_output.sorted(),
            }
        )
        return wid

    def verdict(self, task: str, ok: bool, outcome: str, witness: Optional[str] = None, **details) -> None:
        entry = {"task": task, "ok": bool(ok), "outcome": outcome, "witness": witness}
        entry.update(details)
        self.verdicts.append(entry)


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------


def _parse_set(spec: Spec, text) -> ItemSet:
    if isinstance(text, list):
        return spec.ground.itemset(text)
    text = text.strip()
    if text in ("", "[]", "{}"):
        return ItemSet()
    tokens = [t.strip() for t in text.strip("[]{}").split(",") if t.strip()]
    items = [int(t) if re.fullmatch(r"\d+", t) else t for t in tokens]
    return spec.ground.itemset(items)


_TOKEN = re.compile(r"\s*([A-Za-z_][\w.\-]*|\(|\)|,)")


def parse_tree(spec: Spec, expr: str):
    """Parse ``lex(E, A, B)`` expressions whose leaves name choice functions."""
    tokens, pos = [], 0
    while pos < len(expr):
        if expr[pos:].strip() == "":
            break
        m = _TOKEN.match(expr, pos)
        if not m:
            raise SpecError(f"--tree: unexpected text at column {pos + 1}: {expr[pos:]!r}")
        tokens.append(m.group(1))
        pos = m.end()
    i = 0

    def expect(tok):
        nonlocal i
        if i >= len(tokens) or tokens[i] != tok:
            got = tokens[i] if i < len(tokens) else "end of input"
            raise SpecError(f"--tree: expected {tok!r}, got {got!r}")
        i += 1

    def node():
        nonlocal i
        if i >= len(tokens):
            raise SpecError("--tree: unexpected end of input")
        name = tokens[i]
        i += 1
        if name == "lex":
            expect("(")
            label = tokens[i]
            i += 1
            expect(",")
            left = node()
            expect(",")
            right = node()
            expect(")")
            return Node(left, right, spec.exclusion(label))
        return Leaf(spec.choice(name))

    tree = node()
    if i != len(tokens):
        raise SpecError(f"--tree: trailing input {' '.join(tokens[i:])!r}")
    return tree


def _classify_payload(cls) -> dict:
    out = {
        "is_tlcr": cls.is_tlcr,
        "params": params_out(cls.params) if cls.params is not None else None,
        "failed_conditions": [c.value for c in cls.failed_conditions],
        "caveats": cls.caveats,
    }
    return out


def _preserve(ctx: Context, E, props, left: Domain, right: Domain, task: str, name: str, exhaustive: Optional[bool] = None):
    """Run preservation checks; record one verdict with a witness on failure."""
    ex = ctx.exhaustive if exhaustive is None else exhaustive
    checked = []
    for prop in props:
        try:
            rep = verify_preservation(E, prop, left, right, ex, ctx.seed, ctx.samples, ctx.spec.partition, max_failures=1)
        except BudgetExceeded as exc:
            ctx.caveat(f"{task}/{name}: exhaustive run over budget ({exc}); sampled {ctx.samples} pairs instead")
            rep = verify_preservation(E, prop, left, right, False, ctx.seed, ctx.samples, ctx.spec.partition, max_failures=1)
        checked.append({"property": prop.value, "pairs": rep.pairs_checked, "exhaustive": rep.exhaustive, "failures": rep.n_failures})
        if not rep.passed:
            f = rep.failures[0]
            w = Witness("search", E, f.C1, f.C2, f.Y, f.Yp, prop.value, f.detail, ctx.spec.partition)
            wid = ctx.add_witness(w)
            ctx.verdict(task, False, f"{prop.value} not preserved over {left.value} x {right.value}", wid, name=name, checks=checked)
            return False
    ctx.verdict(task, True, f"preserved over {left.value} x {right.value}", name=name, checks=checked)
    return True


def _expect_witness(ctx: Context, E, conditions, task: str, name: str, reason: str) -> bool:
    """A violation is predicted: record a validated witness for the first applicable condition."""
    notes = []
    for cond in conditions:
        try:
            w = synthesize(E, cond, ctx.spec.partition)
        except (ConditionNotViolated, PreconditionFailed) as exc:
            notes.append(f"{cond}: {exc}")
            continue
        except LexiChoiceError as exc:
            notes.append(f"{cond}: {type(exc).__name__}: {exc}")
            continue
        wid = ctx.add_witness(w)
        ctx.verdict(task, True, f"violation witnessed ({reason})", wid, name=name, condition=w.condition)
        return True
    ctx.verdict(task, False, f"predicted violation not witnessed ({reason})", None, name=name, notes=notes)
    return False


def _failed_conditions(cls) -> list[str]:
    return [c.value for c in cls.failed_conditions]


# ---------------------------------------------------------------------------
# Theorem drivers (one verdict per exclusion function)
# ---------------------------------------------------------------------------


def _thm1(ctx, E, name):
    cls = classify_tlcr(E)
    ctx.caveats.extend(c for c in (f"{name}: {x}" for x in cls.caveats) if c not in ctx.caveats)
    if cls.is_tlcr:
        _preserve(ctx, E, [Property.PI], Domain.RES, Domain.RES, "verify:thm1", name)
    else:
        _expect_witness(ctx, E, _failed_conditions(cls), "verify:thm1", name, "not threshold-linear")


def _prop_pi(ctx, E, name):
    cls = classify_tlcr(E)
    if not cls.is_tlcr:
        return _expect_witness(ctx, E, _failed_conditions(cls), "verify:prop-pi", name, "not threshold-linear")
    if check_domain_safety(cls.params, SafetyDomain.PI, E.ground):
        return _preserve(ctx, E, [Property.PI], Domain.PI_GEN, Domain.PI_GEN, "verify:prop-pi", name, exhaustive=False)
    return _expect_witness(ctx, E, ["pi-domain-threshold", "pi-domain-reuse"], "verify:prop-pi", name, "unsafe threshold or reuse")


def _prop_sm(ctx, E, name):
    cls = classify_tlcr(E)
    if not cls.is_tlcr:
        return _expect_witness(ctx, E, _failed_conditions(cls), "verify:prop-sm", name, "not threshold-linear")
    if check_sm_safety(cls.params, E.ground):
        return _preserve(ctx, E, [Property.PI, Property.SM], Domain.RES, Domain.RES, "verify:prop-sm", name)
    return _expect_witness(ctx, E, ["sm-reuse", "sm-threshold"], "verify:prop-sm", name, "size monotonicity unsafe")


def _sv_sub(ctx, E, name):
    if check_singleton_profile(E):
        return _preserve(ctx, E, [Property.PI], Domain.SV_RES, Domain.PI_GEN, "verify:sv-sub", name, exhaustive=False)
    return _expect_witness(ctx, E, ["sv-singleton"], "verify:sv-sub", name, "singleton profile fails")


def _sub_sv(ctx, E, name):
    cls = classify_tlcr(E)
    if not cls.is_tlcr:
        return _expect_witness(ctx, E, _failed_conditions(cls), "verify:sub-sv", name, "not threshold-linear")
    if check_domain_safety(cls.params, SafetyDomain.PI, E.ground):
        return _preserve(ctx, E, [Property.PI], Domain.PI_GEN, Domain.SV_RES, "verify:sub-sv", name, exhaustive=False)
    return _expect_witness(ctx, E, ["pi-domain-threshold", "pi-domain-reuse"], "verify:sub-sv", name, "unsafe threshold or reuse")


def _sv_subsm(ctx, E, name):
    if check_sv_sm_profile(E, "SV_FIRST") and sv_first_threshold_gap(E):
        ctx.caveat(f"verify:sv-subsm/{name}: singleton profile holds but every singleton shuts out two free items")
        return _expect_witness(ctx, E, ["sv-sm-threshold"], "verify:sv-subsm", name, "threshold 1 with two free items")
    if check_sv_sm_profile(E, "SV_FIRST"):
        return _preserve(ctx, E, [Property.PI, Property.SM], Domain.SV_RES, Domain.RES, "verify:sv-subsm", name)
    if not check_singleton_profile(E):
        return _expect_witness(ctx, E, ["sv-singleton"], "verify:sv-subsm", name, "singleton profile fails")
    return _expect_witness(ctx, E, ["sv-sm-reuse"], "verify:sv-subsm", name, "singleton reuse with two free items")


def _subsm_sv(ctx, E, name):
    if check_sv_sm_profile(E, "SV_SECOND"):
        return _preserve(ctx, E, [Property.PI, Property.SM], Domain.RES, Domain.SV_RES, "verify:subsm-sv", name)
    cls = classify_tlcr(E)
    if not cls.is_tlcr:
        return _expect_witness(ctx, E, _failed_conditions(cls), "verify:subsm-sv", name, "not threshold-linear")
    return _expect_witness(ctx, E, ["sm-reuse"], "verify:subsm-sv", name, "reuse with two free items")


def _remark_con(ctx, E, name):
    if E.ground.size > 4:
        ctx.caveat(f"verify:remark-con/{name}: consistent sampling needs ground size <= 4; skipped")
        ctx.verdict("verify:remark-con", True, "skipped: ground too large for consistent sampling", name=name)
        return
    _preserve(ctx, E, [Property.CON], Domain.CON_SAMPLED, Domain.CON_SAMPLED, "verify:remark-con", name, exhaustive=False)


def _lemma_mto1(ctx, E, name, count: Optional[int] = None):
    P = ctx.spec.partition
    task = "verify:lemma-mto1"
    if P is None:
        raise SpecError("lemma-mto1 needs a partition in the spec")
    if not is_equivalence_excluding(E, P):
        ctx.verdict(task, True, "skipped: not equivalence-excluding", name=name)
        return
    cls = classify_mto1_tlcr(E, P)
    if not cls.is_tlcr:
        ctx.verdict(task, True, "skipped: not many-to-one threshold-linear", name=name, failed_conditions=_failed_conditions(cls))
        return
    g = E.ground
    rng = rng_of(ctx.seed)
    n = count if count is not None else min(ctx.samples, 50)
    for i in range(n):
        C1 = sample_mto1_responsive(g, P, rng)
        C2 = sample_mto1_responsive(g, P, rng)
        C1bar = Responsive(g, C1.order, C1.quota)
        C2bar = Responsive(g, C2.order, C2.quota)
        if not verify_lemma_mto1(C1, C2, C1bar, C2bar, E, P):
            ctx.verdict(task, False, f"completion failed on instance {i}", name=name)
            return
    ctx.verdict(task, True, f"composition of completions completes the composition on {n} instances", name=name)


def _claim_lr(ctx: Context):
    g = ctx.spec.ground
    task = "verify:claim-lr"
    if g.size < 3:
        ctx.verdict(task, True, "skipped: needs at least 3 items")
        return
    N = max(2, min(3, (g.size + 1) // 2))
    rng = rng_of(ctx.seed)
    triples = max(1, min(ctx.samples, 20))
    for _ in range(triples):
        comps = [sample_responsive(g, rng) for _ in range(3)]
        labels = quota_labels(g, N, 2)
        agg, ind = procedure_aggregate_quota(comps, N), procedure_individual_quota(comps, N)
        if not (np.array_equal(agg.table, fold_right(comps, labels).table) and np.array_equal(ind.table, fold_left(comps, labels).table)):
            ctx.verdict(task, False, "procedure differs from its matching fold")
            return
    ids = []
    for proc in ("aggregate", "individual"):
        pw = procedure_witness(g, proc, N)
        if not pw.validate():
            ctx.verdict(task, False, f"{proc} procedure witness did not validate")
            return
        ids.append(ctx.add_procedure_witness(pw))
    ctx.verdict(task, True, f"aggregate = right fold, individual = left fold on {triples} triples (N={N})", None, mismatches=ids)


_PER_E = {
    "thm1": _thm1,
    "prop-pi": _prop_pi,
    "prop-sm": _prop_sm,
    "sv-sub": _sv_sub,
    "sub-sv": _sub_sv,
    "sv-subsm": _sv_subsm,
    "subsm-sv": _subsm_sv,
    "remark-con": _remark_con,
    "lemma-mto1": _lemma_mto1,
}


# ---------------------------------------------------------------------------
# Tasks
# ---------------------------------------------------------------------------


def task_classify(ctx: Context, name: str, expect: Optional[bool] = None):
    E = ctx.spec.exclusion(name)
    cls = classify_tlcr(E)
    payload = _classify_payload(cls)
    if ctx.spec.partition is not None:
        m = classify_mto1_tlcr(E, ctx.spec.partition)
        payload["mto1"] = _classify_payload(m)
    ok = expect is None or expect == cls.is_tlcr
    ctx.verdict("classify", ok, "threshold-linear" if cls.is_tlcr else "not threshold-linear", name=name, **payload)


def task_check(ctx: Context, name: str, prop: str, expect: Optional[bool] = None):
    C = ctx.spec.choice(name)
    prop = Property(prop)
    v = check_choice(C, prop, ctx.spec.partition)
    want = True if expect is None else expect
    wid = None
    if not v.holds:
        y, yp, detail = v.witness
        wid = ctx.add_check_witness(C, prop, y, yp, detail)
    ctx.verdict("check", v.holds == want, f"{prop.value} {'holds' if v.holds else 'fails'}", wid, name=name, property=prop.value, holds=v.holds)


def task_compose(ctx: Context, tree: str, at):
    t = parse_tree(ctx.spec, tree)
    C = eval_tree(t)
    Y = _parse_set(ctx.spec, at)
    out = C(Y)
    ctx.verdict("compose", True, ctx.spec.ground.fmt(out), tree=tree, input=Y.sorted(), output=out.sorted())


def task_verify(ctx: Context, theorem: str, name: Optional[str] = None):
    if theorem not in THEOREMS:
        raise SpecError(f"unknown theorem {theorem!r}; choose from {', '.join(THEOREMS)}")
    if theorem == "claim-lr":
        _claim_lr(ctx)
        return
    names = [name] if name else ctx.spec.exclusion_names()
    if not names:
        raise SpecError("spec defines no exclusion functions to verify")
    for n in names:
        _PER_E[theorem](ctx, ctx.spec.exclusion(n), n)


def task_witness(ctx: Context, name: str, condition: str, expect: Optional[bool] = None):
    E = ctx.spec.exclusion(name)
    want = True if expect is None else expect
    try:
        w = synthesize(E, condition, ctx.spec.partition)
    except (ConditionNotViolated, PreconditionFailed) as exc:
        ctx.verdict("witness", not want, f"no witness: {exc}", name=name, condition=condition)
        return
    except LexiChoiceError as exc:
        ctx.verdict("witness", False, f"construction failed: {type(exc).__name__}: {exc}", name=name, condition=condition)
        return
    wid = ctx.add_witness(w)
    ctx.verdict("witness", want, f"{w.property_broken} broken by {w.condition} construction", wid, name=name, condition=w.condition)


def run_task(ctx: Context, task: dict) -> None:
    kind = task["task"]
    expect = task.get("expect")
    if kind == "classify":
        task_classify(ctx, task["name"], expect)
    elif kind == "check":
        task_check(ctx, task["name"], task.get("prop", "PI"), expect)
    elif kind == "compose":
        task_compose(ctx, task["tree"], task.get("eval", []))
    elif kind == "verify":
        task_verify(ctx, task["theorem"], task.get("name"))
    elif kind == "witness":
        task_witness(ctx, task["name"], task["condition"], expect)
    elif kind == "lemma":
        task_verify(ctx, "lemma-mto1", task.get("name"))
    else:  # pragma: no cover - schema forbids
        raise SpecError(f"unknown task {kind!r}")


# ---------------------------------------------------------------------------
# Report and entry point
# ---------------------------------------------------------------------------


def build_report(ctx: Context, source: str, elapsed: Optional[float]) -> dict:
    doc: dict[str, Any] = {
        "tool": "lexichoice",
        "version": __version__,
        "format": 1,
        "seed": ctx.seed,
        "spec": source,
        "ground": ground_out(ctx.spec.ground),
        "partition": partition_out(ctx.spec.partition),
        "verdicts": ctx.verdicts,
        "witnesses": ctx.witnesses,
        "functions": ctx.functions,
        "caveats": ctx.caveats,
    }
    if elapsed is not None:
        doc["timing"] = {"seconds": round(elapsed, 3)}
    validate(doc, "report", "report")
    return doc


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="write the JSON report here instead of stdout")
    common.add_argument("--seed", type=int, default=0)
    mode = common.add_mutually_exclusive_group()
    mode.add_argument("--exhaustive", action="store_true", help="enumerate whole families where feasible")
    mode.add_argument("--samples", type=int, default=500, help="pairs drawn in sampled mode")
    common.add_argument("--timing", action="store_true", help="include wall-clock timing (breaks byte stability)")

    p = argparse.ArgumentParser(prog="lexichoice", description="Lexicographic composition of choice functions.")
    sub = p.add_subparsers(dest="command", required=True)
    c = sub.add_parser("classify", parents=[common], help="threshold-linear classification of an exclusion function")
    c.add_argument("spec")
    c.add_argument("name")
    c = sub.add_parser("check", parents=[common], help="test one property of a choice function")
    c.add_argument("spec")
    c.add_argument("name")
    c.add_argument("--prop", choices=[p.value for p in Property], default="PI")
    c = sub.add_parser("compose", parents=[common], help="evaluate a composition tree at one set")
    c.add_argument("spec")
    c.add_argument("--tree", required=True)
    c.add_argument("--eval", required=True, dest="at")
    c = sub.add_parser("verify", parents=[common], help="run a theorem battery over the spec's exclusion functions")
    c.add_argument("spec")
    c.add_argument("--theorem", required=True, choices=THEOREMS)
    c.add_argument("--name", help="restrict to one exclusion function")
    c = sub.add_parser("witness", parents=[common], help="construct a counterexample for a violated condition")
    c.add_argument("spec")
    c.add_argument("name")
    c.add_argument("--condition", required=True)
    c = sub.add_parser("run", parents=[common], help="run the task list stored in the spec file")
    c.add_argument("spec")
    return p


def run(argv) -> int:
    try:
        args = _parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    start = time.perf_counter()
    try:
        spec = load_spec(args.spec)
        samples = args.samples if args.samples is not None else 500
        if samples < 1:
            raise SpecError("--samples must be positive")
        ctx = Context(spec, args.seed, samples, args.exhaustive)
        if args.command == "classify":
            task_classify(ctx, args.name)
        elif args.command == "check":
            task_check(ctx, args.name, args.prop)
        elif args.command == "compose":
            task_compose(ctx, args.tree, args.at)
        elif args.command == "verify":
            task_verify(ctx, args.theorem, args.name)
        elif args.command == "witness":
            task_witness(ctx, args.name, args.condition)
        elif args.command == "run":
            if not spec.tasks:
                raise SpecError(f"{args.spec}: tasks: no tasks to run")
            for t in spec.tasks:
                run_task(ctx, t)
        report = build_report(ctx, args.spec, time.perf_counter() - start if args.timing else None)
    except (SpecError, LexiChoiceError, ValueError, KeyError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"lexichoice: error: {msg}", file=sys.stderr)
        return 2
    text = dumps(report)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0 if all(v["ok"] for v in report["verdicts"]) else 1


def main(argv=None) -> None:
    sys.exit(run(sys.argv[1:] if argv is None else argv))


if __name__ == "__main__":  # pragma: no cover
    main()
