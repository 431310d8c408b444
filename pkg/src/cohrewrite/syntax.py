"""Text syntax for terms and step terms.

    term := var | sym "(" term ("," term)* ")" | sym
    var  := "x" digits

A *step term* is a term in which exactly one node is headed by a rule
name; its children are the substitution of that rule instance.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Mapping

from .terms import App, ArityError, Signature, Term, Var, print_term

__all__ = ["ParseError", "RuleNode", "parse_term", "print_term", "tokenize"]


class ParseError(ValueError):
    def __init__(self, message: str, offset: int | None = None, line: int | None = None):
        self.message = message
        self.offset = offset
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if offset is not None:
            where.append(f"offset {offset}")
        suffix = f" at {', '.join(where)}" if where else ""
        super().__init__(f"syntax error{suffix}: {message}")


@dataclass(frozen=True)
class RuleNode:
    """Head of the node that applies a rewriting rule inside a step term."""

    name: str

    def __str__(self):
        return self.name


_TOKEN = re.compile(r"\s*(?:(?P<id>[A-Za-z_][A-Za-z0-9_']*)|(?P<op>\^-|[(),]))")
_VAR = re.compile(r"x([0-9]+)\Z")


def tokenize(text: str) -> list[tuple[str, str, int]]:
    out = []
    i = 0
    n = len(text)
    while i < n:
        if text[i].isspace():
            i += 1
            continue
        m = _TOKEN.match(text, i)
        if not m or m.end() == i:
            raise ParseError(f"unexpected character {text[i]!r}", i)
        kind = "id" if m.group("id") else "op"
        val = m.group(kind)
        out.append((kind, val, m.start(kind)))
        i = m.end()
    out.append(("end", "", n))
    return out


class _Parser:
    def __init__(self, text, signature, rules, arity):
        self.text = text
        self.toks = tokenize(text)
        self.i = 0
        self.signature = signature
        self.rules = rules or {}
        self.arity = arity
        self.seen_arity: dict[str, int] = {}
        self.rule_nodes = 0

    def peek(self):
        return self.toks[self.i]

    def take(self, val=None):
        tok = self.toks[self.i]
        if val is not None and tok[1] != val:
            what = "end of input" if tok[0] == "end" else repr(tok[1])
            raise ParseError(f"expected {val!r}, found {what}", tok[2])
        self.i += 1
        return tok

    def term(self):
        kind, val, off = self.peek()
        if kind != "id":
            what = "end of input" if kind == "end" else repr(val)
            raise ParseError(f"expected a term, found {what}", off)
        self.take()
        m = _VAR.match(val)
        if m:
            idx = int(m.group(1))
            if idx < 1:
                raise ParseError("variables are numbered from x1", off)
            return ("var", idx, off)
        args = []
        if self.peek()[1] == "(":
            self.take("(")
            args.append(self.term())
            while self.peek()[1] == ",":
                self.take(",")
                args.append(self.term())
            self.take(")")
        return ("app", val, args, off)

    def build(self, raw, n):
        if raw[0] == "var":
            _, idx, off = raw
            if idx > n:
                raise ParseError(f"x{idx} exceeds arity {n}", off)
            return Var(idx, n)
        _, name, args, off = raw
        kids = [self.build(a, n) for a in args]
        if name in self.rules:
            k = self.rules[name]
            if k is not None and len(kids) != k:
                raise ParseError(f"rule {name} takes {k} arguments, got {len(kids)}", off)
            self.rule_nodes += 1
            return App(RuleNode(name), kids, n)
        if self.signature is not None:
            if name not in self.signature:
                raise ParseError(f"unknown symbol {name!r}", off)
            k = self.signature.arity_of(name)
        else:
            k = self.seen_arity.setdefault(name, len(kids))
        if len(kids) != k:
            raise ParseError(f"symbol {name} takes {k} arguments, got {len(kids)}", off)
        return App(name, kids, n)


def _max_var(raw) -> int:
    if raw[0] == "var":
        return raw[1]
    return max([0] + [_max_var(a) for a in raw[2]])


def parse_raw(text: str):
    p = _Parser(text, None, None, None)
    raw = p.term()
    tok = p.peek()
    if tok[0] != "end":
        raise ParseError(f"unexpected {tok[1]!r} after term", tok[2])
    return raw


def parse_term(
    text: str,
    arity: int | None = None,
    signature: Signature | None = None,
    rules: Mapping[str, int | None] | None = None,
) -> Term:
    """Parse ``text`` as a term of the given arity.

    When ``arity`` is omitted it is the largest variable index used.  With a
    ``signature`` unknown symbols are rejected; ``rules`` maps rule names to
    their arities and turns matching nodes into :class:`RuleNode` nodes.
    """
    p = _Parser(text, signature, rules, arity)
    raw = p.term()
    tok = p.peek()
    if tok[0] != "end":
        raise ParseError(f"unexpected {tok[1]!r} after term", tok[2])
    n = _max_var(raw) if arity is None else arity
    try:
        return p.build(raw, n)
    except ArityError as exc:
        raise ParseError(str(exc), 0) from exc


def max_var_index(text: str) -> int:
    return _max_var(parse_raw(text))
