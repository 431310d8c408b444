"""Reader and writer for theory files.

A theory file has a few sections, each opened by a keyword on its own line::

    signature
      m : 2
      e : 0
    rules
      alpha : m(m(x1,x2),x3) => m(x1,m(x2,x3))
    coherence
      C : m(rho(x1),x2) => alpha(x1,e,x2) ; m(x1,lambda(x2))
    subset W = {alpha}
    interp
      m = 2*x1 + x2 + 0
      e = 1

Rules and cells may give their arity as ``name/k``; otherwise it is the
largest variable index used.  In a cell, steps are separated by ``;``, a
trailing ``^-`` marks a backward step and ``id(t)`` is the empty zig-zag on
``t``.  A line that starts or ends with ``;``, ``=>`` or ``,`` continues the
previous item.  ``#`` starts a comment.
"""
from __future__ import annotations

import re
from pathlib import Path

from .ars import ContractError
from .interp import LinearInterpretation
from .search import SignedStep
from .syntax import ParseError, max_var_index, parse_term
from .terms import ArityError, Signature, print_term
from .trs import Rule, TermCoherenceCell, Trs2, step_from_stepterm, term_zigzag, zigzag_str

SECTIONS = ("signature", "rules", "coherence", "interp")
_NAME = r"[A-Za-z_][A-Za-z0-9_']*"
_HEAD = re.compile(rf"\s*({_NAME})\s*(?:/\s*([0-9]+))?\s*:(.*)\Z", re.S)
_SUBSET = re.compile(rf"subset\s+({_NAME})\s*=\s*\{{(.*)\}}\s*\Z", re.S)
_CONT = (";", "=>", ",")


def _logical_lines(text: str):
    """Strip comments and join continuation lines; yields ``(lineno, text)``."""
    out: list[list] = []
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        s = line.strip()
        if out and (s.startswith(_CONT) or out[-1][1].rstrip().endswith(_CONT)):
            out[-1][1] += " " + s
        else:
            out.append([no, s])
    return [(no, s) for no, s in out]


def _split_top(text: str, sep: str) -> list[str]:
    parts, depth, cur, i = [], 0, [], 0
    while i < len(text):
        ch = text[i]
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if depth == 0 and text.startswith(sep, i):
            parts.append("".join(cur))
            cur = []
            i += len(sep)
            continue
        cur.append(ch)
        i += 1
    parts.append("".join(cur))
    return parts


def _linear_form(text: str, arity: int, line: int):
    coeffs = [0] * arity
    const = 0
    for part in text.split("+"):
        part = part.strip()
        m = re.fullmatch(r"(?:([0-9]+)\s*\*\s*)?x([0-9]+)", part)
        if m:
            i = int(m.group(2))
            if not 1 <= i <= arity:
                raise ParseError(f"x{i} out of range for arity {arity}", line=line)
            coeffs[i - 1] += int(m.group(1) or 1)
        elif re.fullmatch(r"[0-9]+", part):
            const += int(part)
        else:
            raise ParseError(f"cannot read {part!r} in a linear form", line=line)
    return const, tuple(coeffs)


class _Reader:
    def __init__(self, name: str):
        self.name = name
        self.symbols: list[tuple[str, int]] = []
        self.rules: list[Rule] = []
        self.cells: list[TermCoherenceCell] = []
        self.subsets: dict = {}
        self.interp: dict = {}
        self._sig = None

    @property
    def signature(self) -> Signature:
        if self._sig is None:
            self._sig = Signature(tuple(self.symbols))
        return self._sig

    def signature_(self, line, no):
        m = re.fullmatch(rf"({_NAME})\s*:\s*([0-9]+)", line)
        if not m:
            raise ParseError("expected 'name : arity'", line=no)
        if self.rules or self.cells:
            raise ParseError("signature must come before rules", line=no)
        if any(s == m.group(1) for s, _ in self.symbols):
            raise ParseError(f"duplicate symbol {m.group(1)}", line=no)
        self.symbols.append((m.group(1), int(m.group(2))))
        self._sig = None

    def rules_(self, line, no):
        name, k, body = self._head(line, no)
        sides = _split_top(body, "=>")
        if len(sides) != 2:
            raise ParseError("a rule needs exactly one '=>'", line=no)
        if k is None:
            k = max(max_var_index(sides[0]), max_var_index(sides[1]))
        lhs = parse_term(sides[0].strip(), k, self.signature)
        rhs = parse_term(sides[1].strip(), k, self.signature)
        self.rules.append(Rule(name, lhs, rhs))

    def coherence(self, line, no):
        name, k, body = self._head(line, no)
        sides = _split_top(body, "=>")
        if len(sides) != 2:
            raise ParseError("a cell needs exactly one '=>'", line=no)
        steps_text = [[s.strip() for s in _split_top(side, ";")] for side in sides]
        if k is None:
            k = 0
            for side in steps_text:
                for s in side:
                    k = max(k, max_var_index(_strip_inverse(s)[0]))
        ruledict = {r.id: r for r in self.rules}
        arities = {r.id: r.arity for r in self.rules}
        zz = []
        for side in steps_text:
            zz.append(self._side(side, k, ruledict, arities, no))
        starts = [z for z in zz if z[0] is not None]
        start = starts[0][0] if starts else None
        if start is None:
            raise ParseError("cannot tell where the cell starts", line=no)
        z0 = term_zigzag(start, zz[0][1])
        z1 = term_zigzag(start, zz[1][1])
        self.cells.append(TermCoherenceCell(name, z0, z1))

    def _side(self, side, k, ruledict, arities, no):
        if len(side) == 1 and side[0].startswith("id(") and side[0].endswith(")"):
            return parse_term(side[0][3:-1], k, self.signature), ()
        steps = []
        for s in side:
            body, sign = _strip_inverse(s)
            st = parse_term(body, k, self.signature, arities)
            step = step_from_stepterm(ruledict, st)
            steps.append(SignedStep(step, sign))
        first = steps[0]
        start = first.rule.source if first.sign > 0 else first.rule.target
        return start, tuple(steps)

    def subset(self, line, no):
        m = _SUBSET.fullmatch(line)
        if not m:
            raise ParseError("expected 'subset NAME = {r1, r2}'", line=no)
        ids = [s.strip() for s in m.group(2).split(",") if s.strip()]
        self.subsets[m.group(1)] = frozenset(ids)

    def interp_(self, line, no):
        m = re.fullmatch(rf"({_NAME})\s*=\s*(.+)", line)
        if not m:
            raise ParseError("expected 'symbol = linear form'", line=no)
        sym = m.group(1)
        if sym not in self.signature:
            raise ParseError(f"unknown symbol {sym}", line=no)
        self.interp[sym] = _linear_form(m.group(2), self.signature.arity_of(sym), no)

    def _head(self, line, no):
        m = _HEAD.fullmatch(line)
        if not m:
            raise ParseError("expected 'name : ...'", line=no)
        name, k, body = m.group(1), m.group(2), m.group(3)
        return name, (int(k) if k is not None else None), body


def _strip_inverse(step: str):
    s = step.strip()
    if s.endswith("^-"):
        return s[:-2].strip(), -1
    return s, 1


def _dispatch(reader: _Reader, section: str):
    return {
        "signature": reader.signature_,
        "rules": reader.rules_,
        "coherence": reader.coherence,
        "interp": reader.interp_,
    }[section]


def load_theory(text: str, name: str = "") -> Trs2:
    r = _Reader(name)
    return _read(r, text)


def _read(r: _Reader, text: str) -> Trs2:
    section = None
    for no, line in _logical_lines(text):
        word = line.split()[0]
        if line in SECTIONS:
            section = line
            continue
        if word == "subset":
            r.subset(line, no)
            continue
        if word == "theory":
            parts = line.split(None, 1)
            if len(parts) == 2:
                r.name = parts[1].strip()
            continue
        if section is None:
            raise ParseError(f"{line!r} outside any section", line=no)
        try:
            _dispatch(r, section)(line, no)
        except ParseError as exc:
            if exc.line is None:
                raise ParseError(exc.message, exc.offset, no) from exc
            raise
        except (ArityError, ContractError, KeyError, ValueError) as exc:
            raise ParseError(str(exc), line=no) from exc
    for nm, ids in r.subsets.items():
        unknown = set(ids) - {x.id for x in r.rules}
        if unknown:
            raise ParseError(f"subset {nm} names unknown rules {sorted(unknown)}")
    try:
        interp = LinearInterpretation(r.interp) if r.interp else None
        return Trs2(r.signature, r.rules, r.cells, r.subsets, interp, name=r.name)
    except (ContractError, ValueError) as exc:
        raise ParseError(str(exc)) from exc


def load_theory_file(path) -> Trs2:
    p = Path(path)
    return load_theory(p.read_text(), p.stem)


def format_theory(T: Trs2) -> str:
    """Render ``T`` in the file syntax; ``load_theory`` reads it back."""
    lines = []
    if T.name:
        lines.append(f"theory {T.name}")
    lines.append("signature")
    for s, k in T.signature.symbols:
        lines.append(f"  {s} : {k}")
    lines.append("rules")
    for r in T.rules.values():
        lines.append(f"  {r.id}/{r.arity} : {print_term(r.lhs)} => {print_term(r.rhs)}")
    if T.cells:
        lines.append("coherence")
        for c in T.cells.values():
            lines.append(f"  {c.id}/{c.arity} : {_side_text(c.source)} => {_side_text(c.target)}")
    for nm, ids in T.subsets.items():
        order = [r for r in T.rules if r in ids]
        lines.append(f"subset {nm} = {{{', '.join(order)}}}")
    if T.interpretation is not None:
        lines.append("interp")
        for sym, (c0, cs) in T.interpretation.table.items():
            parts = [f"{c}*x{i}" for i, c in enumerate(cs, 1)] + [str(c0)]
            lines.append(f"  {sym} = {' + '.join(parts)}")
    return "\n".join(lines) + "\n"


def _side_text(z) -> str:
    if not z.steps:
        return f"id({print_term(z.start)})"
    return zigzag_str(z)


def zigzag_arity(text: str) -> int:
    """Largest variable index mentioned in a zig-zag expression."""
    k = 0
    for s in _split_top(text, ";"):
        s = s.strip()
        body = s[3:-1] if s.startswith("id(") and s.endswith(")") else _strip_inverse(s)[0]
        k = max(k, max_var_index(body))
    return k


def parse_zigzag(T: Trs2, text: str, arity: int | None = None):
    """Read ``step ; step^- ; ...`` or ``id(t)`` as a zig-zag of ``T``."""
    parts = [s.strip() for s in _split_top(text, ";")]
    if arity is None:
        arity = zigzag_arity(text)
    r = _Reader(T.name)
    r.symbols = list(T.signature.symbols)
    r.rules = list(T.rules.values())
    try:
        start, steps = r._side(parts, arity, T.rules, {k: v.arity for k, v in T.rules.items()}, None)
        return term_zigzag(start, steps)
    except (ArityError, ContractError, KeyError, ValueError) as exc:
        if isinstance(exc, ParseError):
            raise
        raise ParseError(str(exc)) from exc
