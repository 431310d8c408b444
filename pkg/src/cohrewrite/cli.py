"""Command-line front end.

Exit codes: 0 when every check passes, 1 when a check fails with a
counterexample, 2 when a result is undetermined within the search bound and
3 on input errors.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

from .ars import ContractError
from .dsl import format_theory, load_theory, parse_zigzag, zigzag_arity
from .search import word_str
from .smc import BUILTINS, MONOIDAL, SWAPS, builtin, decide_equal_smc
from .syntax import ParseError, max_var_index, parse_term
from .terms import ArityError, print_term
from .trs import (
    NotCertified,
    Trs2,
    check_local_confluence_coherent,
    cohto_terms,
    critical_pairs,
    find_rewrite_loop,
    normalize_w,
)

PASS, FAIL, UNKNOWN, INPUT_ERROR = 0, 1, 2, 3
DEFAULT_BOUND = 10_000


class InputError(Exception):
    pass


@dataclass
class Report:
    command: str
    inputs: dict
    checks: list = field(default_factory=list)
    lines: list = field(default_factory=list)
    witnesses: dict = field(default_factory=dict)

    def add(self, name: str, status: str, detail: str = "", **data):
        self.checks.append({"check": name, "status": status, **data})
        self.lines.append(f"{name}: {status}" + (f" ({detail})" if detail else ""))

    @property
    def exit_code(self) -> int:
        states = {c["status"] for c in self.checks}
        if "fail" in states:
            return FAIL
        if "undetermined" in states:
            return UNKNOWN
        return PASS

    @property
    def verdict(self) -> str:
        return {PASS: "pass", FAIL: "fail", UNKNOWN: "undetermined"}[self.exit_code]

    def to_json(self) -> dict:
        return {
            "command": self.command,
            "inputs": self.inputs,
            "checks": self.checks,
            "witnesses": self.witnesses,
            "verdict": self.verdict,
        }


def load(source: str) -> tuple[Trs2, str]:
    """Read a theory file, or a built-in theory when no such file exists."""
    p = Path(source)
    if p.is_file():
        text = p.read_text()
        return load_theory(text, p.stem), text
    name = source[:-4] if source.endswith(".thy") else source
    if name in BUILTINS:
        T = builtin(name)
        return T, format_theory(T)
    raise InputError(f"no theory file or built-in theory named {source!r}")


def _inputs(text: str, **args) -> dict:
    digest = hashlib.sha256(text.encode()).hexdigest()
    return {"theory_sha256": digest, **{k: v for k, v in args.items() if v is not None}}


def _subset(T: Trs2, name):
    if name is None or name == "all":
        return None
    try:
        T.subset(name)
    except KeyError as exc:
        raise InputError(exc.args[0]) from exc
    return name


def cmd_check(T: Trs2, text: str, subset=None, bound: int = DEFAULT_BOUND) -> Report:
    W = _subset(T, subset)
    label = subset or "all"
    rep = Report("check", _inputs(text, theory=T.name, subset=label, bound=bound))
    term = T.termination(W)
    terminating = None
    if term is None:
        rep.add("termination", "undetermined", "no interpretation; termination skipped")
    elif term.decreasing:
        terminating = True
        rep.add("termination", "pass", "linear interpretation decreases on every rule", report=term.to_json())
    else:
        weak = [m.rule for m in term.margins if not m.strict]
        loop = find_rewrite_loop(T, W)
        if loop is not None:
            terminating = False
            rep.witnesses["rewrite_loop"] = {"start": print_term(loop.start), "path": str(loop)}
            rep.add("termination", "fail", f"rewrite loop {loop}", report=term.to_json())
        else:
            rep.add("termination", "undetermined", f"not decreasing: {', '.join(weak)}", report=term.to_json())
    lc = check_local_confluence_coherent(T, W, bound)
    filled = sum(r.proven for r in lc.records)
    local = lc.confluent
    rep.add(
        "local-confluence",
        "pass" if local else "undetermined",
        f"{filled} of {len(lc.records)} critical pairs filled",
        report=lc.to_json(),
    )
    for cp, r in zip(lc.pairs, lc.records):
        how = f"by {r.cell}" if r.proven and r.cell else r.verdict
        rep.lines.append(f"  {cp.outer.id}/{cp.inner.id} at {list(cp.position)}: {print_term(cp.source)} {how}")
    if terminating and local:
        conf, coh = "pass", "pass"
        rep.lines.append(f"{label}-convergent; {label}-coherent")
    else:
        conf = coh = "undetermined"
    why = "terminating and locally confluent with fillings"
    rep.add("confluence", conf, why if conf == "pass" else "needs termination and local confluence")
    rep.add("coherence", coh, "convergent rules with filled branchings" if coh == "pass" else "")
    return rep


def cmd_critical_pairs(T: Trs2, text: str, subset=None) -> Report:
    W = _subset(T, subset)
    rep = Report("critical-pairs", _inputs(text, theory=T.name, subset=subset or "all"))
    pairs = critical_pairs(T.subset(W))
    rep.add("critical-pairs", "pass", f"{len(pairs)} pairs", pairs=[cp.to_json() for cp in pairs])
    for cp in pairs:
        rep.lines.append(f"  {cp.outer.id}/{cp.inner.id} at {list(cp.position)}: {print_term(cp.source)}")
    return rep


def cmd_normalize(T: Trs2, text: str, term: str, subset=None, bound: int = DEFAULT_BOUND) -> Report:
    W = _subset(T, subset)
    rep = Report("normalize", _inputs(text, theory=T.name, subset=subset or "all", term=term, bound=bound))
    try:
        t = parse_term(term, max_var_index(term), T.signature)
    except (ParseError, ArityError) as exc:
        raise InputError(f"cannot read term: {exc}") from exc
    try:
        nf, path = normalize_w(T, t, W)
        note = "certified"
    except NotCertified:
        try:
            nf, path = normalize_w(T, t, W, bound=bound)
            note = f"uncertified, within {bound} steps"
        except ValueError:
            rep.add("normalize", "undetermined", f"no normal form within {bound} steps")
            return rep
    rep.witnesses["path"] = [str(s.rule) + ("" if s.sign > 0 else "^-") for s in path.steps]
    rep.add("normalize", "pass", f"{len(path)} steps, {note}", normal_form=print_term(nf), steps=len(path))
    rep.lines.append(f"{print_term(t)} -> {print_term(nf)}")
    if path.steps:
        rep.lines.append(f"  via {word_str(path.steps)}")
    return rep


def _symmetric(T: Trs2) -> bool:
    return MONOIDAL <= set(T.rules) and bool(SWAPS & set(T.rules))


def cmd_decide(T: Trs2, text: str, left: str, right: str, bound: int = DEFAULT_BOUND) -> Report:
    rep = Report("decide", _inputs(text, theory=T.name, left=left, right=right, bound=bound))
    try:
        k = max(zigzag_arity(left), zigzag_arity(right))
        p, q = parse_zigzag(T, left, k), parse_zigzag(T, right, k)
    except (ParseError, ArityError, ContractError) as exc:
        raise InputError(f"cannot read zig-zag: {exc}") from exc
    if p.start != q.start or p.end != q.end:
        raise InputError(f"zig-zags are not parallel: {print_term(p.start)} => {print_term(p.end)} "
                         f"vs {print_term(q.start)} => {print_term(q.end)}")
    if _symmetric(T):
        d = decide_equal_smc(p, q, T)
        status = "pass" if d.equal else "fail"
        rep.add("decide", status, d.verdict, report=d.to_json())
        if d.equal:
            rep.lines.append(f"  bijection {d.left.cycles()}")
        else:
            rep.witnesses["bijections"] = [d.left.to_json(), d.right.to_json()]
            rep.lines.append(f"  left {d.left}")
            rep.lines.append(f"  right {d.right}")
        return rep
    out = cohto_terms(T, p, q, bound)
    status = "pass" if out.proven else "undetermined"
    rep.add("decide", status, out.verdict, report=out.to_json())
    return rep


def cmd_builtin(name: str) -> str:
    return format_theory(builtin(name))


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cohrewrite", description="Coherent rewriting checks for term rewriting theories.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, subset=True, bound=True):
        p.add_argument("theory", help="theory file, or a built-in name (mon, smon, smon-prime)")
        if subset:
            p.add_argument("--subset", default=None, help="rule subset name, or 'all'")
        if bound:
            p.add_argument("--bound", type=int, default=DEFAULT_BOUND, help="search bound in frontier nodes")
        p.add_argument("--json", action="store_true", help="print a JSON report")

    common(sub.add_parser("check", help="termination, critical pairs and coherent confluence"))
    common(sub.add_parser("critical-pairs", help="list critical pairs"), bound=False)
    p = sub.add_parser("normalize", help="normal form of a term")
    common(p)
    p.add_argument("term")
    p = sub.add_parser("decide", help="decide whether two parallel zig-zags are equal")
    common(p, subset=False)
    p.add_argument("left")
    p.add_argument("right")
    p = sub.add_parser("builtin", help="print a built-in theory")
    p.add_argument("name", choices=BUILTINS)
    return ap


def run(args) -> tuple[int, str]:
    if args.command == "builtin":
        return PASS, cmd_builtin(args.name)
    T, text = load(args.theory)
    if args.command == "check":
        rep = cmd_check(T, text, args.subset, args.bound)
    elif args.command == "critical-pairs":
        rep = cmd_critical_pairs(T, text, args.subset)
    elif args.command == "normalize":
        rep = cmd_normalize(T, text, args.term, args.subset, args.bound)
    else:
        rep = cmd_decide(T, text, args.left, args.right, args.bound)
    if args.json:
        out = json.dumps(rep.to_json(), sort_keys=True, indent=2)
    else:
        out = "\n".join(rep.lines + [f"verdict: {rep.verdict}"])
    return rep.exit_code, out + "\n"


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        code, out = run(args)
    except (InputError, ParseError, ContractError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return INPUT_ERROR
    sys.stdout.write(out)
    return code


if __name__ == "__main__":
    sys.exit(main())
