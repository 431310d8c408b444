"""Term rewriting systems with coherence cells.

Rewriting steps are rule instances ``C[rule∘f]``.  Zig-zags of steps reuse
:class:`~cohrewrite.ars.ZigZag` with terms as endpoints, so the search
engine of :mod:`cohrewrite.search` works unchanged on them.
"""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Sequence

from .ars import (
    Ars2,
    BranchingRecord,
    CoherenceCell,
    ContractError,
    TietzeError,
    ZigZag,
    removal_word,
)
from .interp import LinearInterpretation, TerminationReport, check_termination_linear
from .search import (
    CohSearchOutcome,
    Move,
    SignedStep,
    chain_is_valid,
    fwd,
    inverse_word,
    reduce_word,
    relator_pairs,
    search,
    word_str,
)
from .syntax import RuleNode
from .terms import (
    App,
    ArityError,
    Context,
    Hole,
    Signature,
    Substitution,
    Term,
    Var,
    compose_contexts,
    compose_subst,
    enumerate_terms,
    occurrences,
    plug,
    positions,
    positions_postorder,
    print_term,
    rearity,
    replace_at,
    substitute,
    substitute_context,
    subterm,
    term_vars,
)


class NotCertified(ValueError):
    pass


@dataclass(frozen=True)
class Rule:
    id: str
    lhs: Term
    rhs: Term

    def __post_init__(self):
        if self.lhs.arity != self.rhs.arity:
            raise ArityError(f"rule {self.id}: sides have different arities")

    @property
    def arity(self) -> int:
        return self.lhs.arity

    def is_linear(self) -> bool:
        return all(occurrences(self.lhs, i) <= 1 for i in range(1, self.arity + 1))

    def __str__(self):
        return f"{self.id} : {print_term(self.lhs)} => {print_term(self.rhs)}"


class TermRewriteStep:
    """The step ``C[rule∘f] : C[lhs[f]] -> C[rhs[f]]``."""

    __slots__ = ("rule", "context", "subst", "source", "target", "_hash", "_stepterm")

    def __init__(self, rule: Rule, context: Context, subst: Substitution):
        if subst.source_arity != context.arity or len(subst) != rule.arity:
            raise ArityError(f"ill-typed instance of {rule.id}")
        self.rule = rule
        self.context = context
        self.subst = subst
        self.source = plug(context, substitute(rule.lhs, subst))
        self.target = plug(context, substitute(rule.rhs, subst))
        self._hash = hash((rule.id, context, subst))
        self._stepterm = None

    @property
    def position(self) -> tuple:
        return self.context.position

    @property
    def arity(self) -> int:
        return self.context.arity

    @property
    def stepterm(self) -> Term:
        """The source with the redex replaced by a rule-application node."""
        if self._stepterm is None:
            node = App(RuleNode(self.rule.id), self.subst.components, self.context.arity)
            self._stepterm = plug(self.context, node)
        return self._stepterm

    def __eq__(self, other):
        return (
            isinstance(other, TermRewriteStep)
            and self._hash == other._hash
            and self.rule.id == other.rule.id
            and self.context == other.context
            and self.subst == other.subst
        )

    def __hash__(self):
        return self._hash

    def __str__(self):
        return print_term(self.stepterm)

    def __repr__(self):
        return f"TermRewriteStep({self})"


def step_from_stepterm(rules: dict, st: Term) -> TermRewriteStep:
    nodes = [p for p in positions(st) if isinstance(subterm(st, p), App) and isinstance(subterm(st, p).head, RuleNode)]
    if len(nodes) != 1:
        raise ValueError(f"a step needs exactly one rule node, found {len(nodes)} in {print_term(st)}")
    pos = nodes[0]
    node = subterm(st, pos)
    rule = rules[node.head.name]
    return TermRewriteStep(rule, Context.at(st, pos), Substitution(st.arity, node.args))


def step_orientation(s: SignedStep) -> tuple[Term, Term]:
    st = s.rule
    return (st.source, st.target) if s.sign > 0 else (st.target, st.source)


def term_zigzag(start: Term, steps: Sequence[SignedStep]) -> ZigZag:
    cur = start
    steps = tuple(s if isinstance(s, SignedStep) else fwd(s) for s in steps)
    for s in steps:
        a, b = step_orientation(s)
        if a != cur:
            raise ContractError(f"step {s} does not start at {print_term(cur)}")
        cur = b
    return ZigZag(start, steps, cur)


def composable(word: Sequence[SignedStep]) -> bool:
    for s, t in zip(word, word[1:]):
        if step_orientation(s)[1] != step_orientation(t)[0]:
            return False
    return True


def zigzag_str(z: ZigZag) -> str:
    if not z.steps:
        return f"id({print_term(z.start)})"
    return word_str(z.steps)


@dataclass(frozen=True)
class TermCoherenceCell:
    id: str
    source: ZigZag
    target: ZigZag

    def __post_init__(self):
        if self.source.start != self.target.start or self.source.end != self.target.end:
            raise ContractError(f"cell {self.id} is not parallel")

    @property
    def arity(self) -> int:
        return self.source.start.arity

    def is_path_shaped(self) -> bool:
        return self.source.is_path() and self.target.is_path()

    def mentions(self, rule_id) -> bool:
        return any(s.rule.rule.id == rule_id for s in self.source.steps + self.target.steps)

    def __str__(self):
        return f"{self.id} : {zigzag_str(self.source)} => {zigzag_str(self.target)}"


class Trs2:
    def __init__(
        self,
        signature: Signature,
        rules: Iterable[Rule],
        cells: Iterable[TermCoherenceCell] = (),
        subsets: dict | None = None,
        interpretation: LinearInterpretation | None = None,
        transcript: tuple = (),
        name: str = "",
    ):
        self.signature = signature
        self.rules: dict[str, Rule] = {}
        for r in rules:
            if r.id in self.rules:
                raise ContractError(f"duplicate rule {r.id}")
            if r.id in signature:
                raise ContractError(f"rule {r.id} clashes with a symbol")
            for t in (r.lhs, r.rhs):
                _check_signature(signature, t)
            self.rules[r.id] = r
        self.cells: dict[str, TermCoherenceCell] = {}
        for c in cells:
            if c.id in self.cells:
                raise ContractError(f"duplicate cell {c.id}")
            for s in c.source.steps + c.target.steps:
                if self.rules.get(s.rule.rule.id) != s.rule.rule:
                    raise ContractError(f"cell {c.id} uses an undeclared rule {s.rule.rule.id}")
            self.cells[c.id] = c
        self.subsets = dict(subsets or {})
        for nm, ids in self.subsets.items():
            missing = set(ids) - set(self.rules)
            if missing:
                raise ContractError(f"subset {nm} names unknown rules {sorted(missing)}")
        self.interpretation = interpretation
        self.transcript = tuple(transcript)
        self.name = name
        self._moves = None
        self._certs: dict = {}

    def subset(self, W) -> list[Rule]:
        """Rules of a subset given by name, by ids, or ``None``/``"all"``."""
        if W is None or W == "all":
            return list(self.rules.values())
        if isinstance(W, str):
            if W not in self.subsets:
                raise KeyError(f"unknown subset {W!r}")
            W = self.subsets[W]
        ids = set(W)
        missing = ids - set(self.rules)
        if missing:
            raise KeyError(f"unknown rules {sorted(missing)}")
        return [r for r in self.rules.values() if r.id in ids]

    def termination(self, W=None) -> TerminationReport | None:
        if self.interpretation is None:
            return None
        key = tuple(r.id for r in self.subset(W))
        if key not in self._certs:
            self._certs[key] = check_termination_linear(self.subset(W), self.interpretation)
        return self._certs[key]

    @property
    def moves(self) -> "TermMoves":
        if self._moves is None:
            self._moves = TermMoves(self.cells.values())
        return self._moves

    def replace(self, **changes) -> "Trs2":
        args = dict(
            signature=self.signature,
            rules=list(self.rules.values()),
            cells=list(self.cells.values()),
            subsets=self.subsets,
            interpretation=self.interpretation,
            transcript=self.transcript,
            name=self.name,
        )
        args.update(changes)
        return Trs2(**args)

    def __repr__(self):
        return f"Trs2({self.name or '?'}: {len(self.rules)} rules, {len(self.cells)} cells)"


def _check_signature(sig: Signature, t: Term):
    if isinstance(t, App):
        if isinstance(t.head, str):
            if t.head not in sig:
                raise ContractError(f"unknown symbol {t.head}")
            if sig.arity_of(t.head) != len(t.args):
                raise ContractError(f"symbol {t.head} used with {len(t.args)} arguments")
        for a in t.args:
            _check_signature(sig, a)


# -- matching and unification ------------------------------------------------


def match_into(pattern: Term, subject: Term, binding: dict) -> bool:
    """Extend ``binding`` (index -> term) so that ``pattern[binding] == subject``."""
    stack = [(pattern, subject)]
    while stack:
        p, s = stack.pop()
        if isinstance(p, Var):
            bound = binding.get(p.index)
            if bound is None:
                binding[p.index] = s
            elif bound != s:
                return False
        elif isinstance(p, Hole):
            if not isinstance(s, Hole):
                return False
        else:
            if not isinstance(s, App) or s.head != p.head or len(s.args) != len(p.args):
                return False
            stack.extend(zip(p.args, s.args))
    return True


def match(pattern: Term, subject: Term) -> Substitution | None:
    """Substitution ``f`` with ``pattern[f] == subject``, or ``None``.

    Variables missing from the pattern are sent to ``x1``; any choice works.
    """
    binding: dict = {}
    if not match_into(pattern, subject, binding):
        return None
    n = subject.arity
    comps = []
    for i in range(1, pattern.arity + 1):
        if i in binding:
            comps.append(binding[i])
        elif n >= 1:
            comps.append(Var(1, n))
        else:
            raise ArityError("cannot fill an unused pattern variable at arity 0")
    return Substitution(n, comps)


def _walk(t, b):
    while isinstance(t, Var) and t.index in b:
        t = b[t.index]
    return t


def _occurs(i, t, b) -> bool:
    t = _walk(t, b)
    if isinstance(t, Var):
        return t.index == i
    if isinstance(t, App):
        return any(_occurs(i, a, b) for a in t.args)
    return False


def _resolve(t, b):
    t = _walk(t, b)
    if isinstance(t, App):
        return App(t.head, [_resolve(a, b) for a in t.args], t.arity)
    return t


def unify(t: Term, u: Term) -> Substitution | None:
    """Most general unifier of two terms over the same variables.

    Returns ``s : n -> n`` with ``t[s] == u[s]``, idempotent, or ``None``.
    Use :func:`rename_apart` first when the variables must be disjoint.
    """
    if t.arity != u.arity:
        raise ArityError("unify needs terms of the same arity")
    b: dict = {}
    stack = [(t, u)]
    while stack:
        x, y = stack.pop()
        x, y = _walk(x, b), _walk(y, b)
        if isinstance(x, Var) and isinstance(y, Var) and x.index == y.index:
            continue
        if isinstance(x, Var):
            if _occurs(x.index, y, b):
                return None
            b[x.index] = y
        elif isinstance(y, Var):
            if _occurs(y.index, x, b):
                return None
            b[y.index] = x
        else:
            if x.head != y.head or len(x.args) != len(y.args):
                return None
            stack.extend(zip(x.args, y.args))
    n = t.arity
    return Substitution(n, [_resolve(Var(i, n), b) for i in range(1, n + 1)])


def shift_vars(t: Term, offset: int, arity: int) -> Term:
    if isinstance(t, Var):
        return Var(t.index + offset, arity)
    if isinstance(t, Hole):
        return Hole(arity)
    return App(t.head, [shift_vars(a, offset, arity) for a in t.args], arity)


def rename_apart(t: Term, u: Term) -> tuple[Term, Term]:
    """Put ``t`` and ``u`` over disjoint variables at arity ``|t| + |u|``."""
    a, b = t.arity, u.arity
    return rearity(t, a + b), shift_vars(u, a, a + b)


def rename_vars(t: Term, mapping: dict, arity: int) -> Term:
    if isinstance(t, Var):
        return Var(mapping[t.index], arity)
    if isinstance(t, Hole):
        return Hole(arity)
    return App(t.head, [rename_vars(a, mapping, arity) for a in t.args], arity)


# -- redexes and normalization -------------------------------------------------


def redexes_at(t: Term, pos: tuple, rules: Iterable[Rule]) -> list[TermRewriteStep]:
    sub = subterm(t, pos)
    if not isinstance(sub, App):
        return []
    out = []
    ctx = None
    for r in rules:
        if isinstance(r.lhs, App) and r.lhs.head != sub.head:
            continue
        binding: dict = {}
        if match_into(r.lhs, sub, binding):
            f = match(r.lhs, sub)
            if ctx is None:
                ctx = Context.at(t, pos)
            out.append(TermRewriteStep(r, ctx, f))
    return out


def redexes(t: Term, rules: Iterable[Rule]) -> list[TermRewriteStep]:
    """All steps out of ``t``, outermost positions first, left to right."""
    rules = list(rules)
    out = []
    for pos in positions(t):
        out.extend(redexes_at(t, pos, rules))
    return out


def incoming_steps(t: Term, rules: Iterable[Rule]) -> list[TermRewriteStep]:
    """All steps whose target is ``t``; rules must not erase variables."""
    rules = list(rules)
    out = []
    for pos in positions(t):
        sub = subterm(t, pos)
        ctx = None
        for r in rules:
            binding: dict = {}
            if not match_into(r.rhs, sub, binding):
                continue
            if len(binding) != r.arity:
                raise ValueError(f"rule {r.id} erases variables; cannot run it backwards")
            if ctx is None:
                ctx = Context.at(t, pos)
            f = Substitution(t.arity, [binding[i] for i in range(1, r.arity + 1)])
            out.append(TermRewriteStep(r, ctx, f))
    return out


def _rules_of(T, W):
    if isinstance(T, Trs2):
        return T.subset(W)
    return list(T)


def innermost_step(t: Term, rules: list[Rule]) -> TermRewriteStep | None:
    for pos in positions_postorder(t):
        found = redexes_at(t, pos, rules)
        if found:
            return found[0]
    return None


def normalize_w(T, t: Term, W=None, bound: int | None = None) -> tuple[Term, ZigZag]:
    """Leftmost-innermost normalization with the rules of ``W``.

    ``T`` is a :class:`Trs2` or a list of rules.  Without a step ``bound``
    the rules must be certified terminating by the theory's interpretation.
    """
    rules = _rules_of(T, W)
    if bound is None:
        cert = T.termination(W) if isinstance(T, Trs2) else None
        if cert is None or not cert.decreasing:
            raise NotCertified("termination is not certified; pass an explicit bound")
    steps = []
    cur = t
    while True:
        s = innermost_step(cur, rules)
        if s is None:
            return cur, ZigZag(t, tuple(steps), cur)
        if bound is not None and len(steps) >= bound:
            raise ValueError(f"no normal form within {bound} steps")
        steps.append(fwd(s))
        cur = s.target


def is_normal(t: Term, rules: Iterable[Rule]) -> bool:
    rules = list(rules)
    return not any(redexes_at(t, p, rules) for p in positions(t))


# -- critical pairs --------------------------------------------------------


@dataclass(frozen=True)
class CriticalPair:
    outer: Rule
    inner: Rule
    position: tuple
    mgu: Substitution
    source: Term
    left: TermRewriteStep
    right: TermRewriteStep

    def to_json(self) -> dict:
        return {
            "rules": [self.outer.id, self.inner.id],
            "position": list(self.position),
            "source": print_term(self.source),
            "left": str(self.left),
            "right": str(self.right),
        }


def critical_pairs(rules: Iterable[Rule]) -> list[CriticalPair]:
    """Minimal overlaps ``(outer at root, inner at a non-variable position)``.

    A rule overlapping itself at the root is skipped; for two distinct rules
    overlapping at the root only the pair in declaration order is kept.
    Sources are renamed canonically (variables numbered by first occurrence).
    """
    rules = list(rules)
    out = []
    seen = set()
    for i, r1 in enumerate(rules):
        for pos in positions_postorder(r1.lhs):
            if not isinstance(subterm(r1.lhs, pos), App):
                continue
            for j, r2 in enumerate(rules):
                if pos == () and j <= i:
                    continue
                cp = _overlap(r1, r2, pos)
                if cp is None:
                    continue
                key = (r1.id, r2.id, pos, cp.source)
                if key not in seen:
                    seen.add(key)
                    out.append(cp)
    return out


def _overlap(r1: Rule, r2: Rule, pos: tuple) -> CriticalPair | None:
    a, b = r1.arity, r2.arity
    l1, l2 = rename_apart(r1.lhs, r2.lhs)
    sigma = unify(subterm(l1, pos), l2)
    if sigma is None:
        return None
    source = substitute(l1, sigma)
    order: list[int] = []
    for v in term_vars(source):
        if v not in order:
            order.append(v)
    k = len(order)
    back = {v: n + 1 for n, v in enumerate(order)}
    src = rename_vars(source, back, k)
    f1 = Substitution(k, [rename_vars(sigma[j], back, k) for j in range(a)])
    f2 = Substitution(k, [rename_vars(sigma[a + j], back, k) for j in range(b)])
    left = TermRewriteStep(r1, Context.hole(k), f1)
    right = TermRewriteStep(r2, Context.at(src, pos), f2)
    assert left.source == src == right.source
    return CriticalPair(r1, r2, pos, sigma, src, left, right)


# -- moves on term zig-zags ------------------------------------------------------


@dataclass(frozen=True)
class _PatternStep:
    rule_id: str
    sign: int
    pattern: Term  # subterm of the step term below the cell's hole position
    depth: tuple  # position of the rule node inside ``pattern``
    context: Context
    subst: Substitution
    rule: Rule


def _pattern(s: SignedStep) -> _PatternStep:
    st = s.rule
    return _PatternStep(st.rule.id, s.sign, st.stepterm, st.position, st.context, st.subst, st.rule)


def instantiate_step(ps: _PatternStep, D: Context, g: Substitution) -> TermRewriteStep:
    ctx = compose_contexts(D, substitute_context(ps.context, g))
    return TermRewriteStep(ps.rule, ctx, compose_subst(g, ps.subst))


def instantiate_word(word: Sequence[SignedStep], D: Context, g: Substitution) -> tuple:
    return tuple(SignedStep(instantiate_step(_pattern(s), D, g), s.sign) for s in word)


def match_steps(patterns: Sequence[_PatternStep], word: Sequence[SignedStep], arity: int):
    """Match pattern steps against ``word`` under one bicontext ``(D, g)``."""
    if len(word) < len(patterns):
        return None
    binding: dict = {}
    h = None
    D = None
    for ps, s in zip(patterns, word):
        st = s.rule
        if s.sign != ps.sign or st.rule.id != ps.rule_id:
            return None
        P = st.position
        d = len(ps.depth)
        if len(P) < d or P[len(P) - d :] != ps.depth:
            return None
        here = P[: len(P) - d]
        if h is None:
            h = here
            D = Context.at(st.source, h)
        elif here != h or Context.at(st.source, h) != D:
            return None
        if not match_into(ps.pattern, subterm(st.stepterm, h), binding):
            return None
    n = word[0].rule.arity
    if len(binding) != arity:
        return None
    g = Substitution(n, [binding[i] for i in range(1, arity + 1)])
    return D, g


def exchanges(e1: SignedStep, e2: SignedStep) -> list[tuple[SignedStep, SignedStep]]:
    """Ways to commute two consecutive steps that do not overlap.

    Disjoint positions commute directly.  When one step acts inside a
    variable of the other, the variable must occur exactly once on each side
    of the outer rule, and the inner step moves to the matching occurrence.
    """
    A, B = step_orientation(e1)
    _, C = step_orientation(e2)
    s1, s2 = e1.rule, e2.rule
    P1, P2 = s1.position, s2.position
    n = len(P1)
    m = len(P2)
    if P1 == P2:
        return []
    if P2[:n] != P1 and P1[:m] != P2:
        e2n = TermRewriteStep(s2.rule, Context(replace_at(s2.context.body, P1, subterm(A, P1)), P2), s2.subst)
        e1n = TermRewriteStep(s1.rule, Context(replace_at(s1.context.body, P2, subterm(C, P2)), P1), s1.subst)
        return [(SignedStep(e2n, e2.sign), SignedStep(e1n, e1.sign))]
    if P2[:n] == P1:
        # e2 acts inside the result of e1
        rule = s1.rule
        to_side, from_side = (rule.rhs, rule.lhs) if e1.sign > 0 else (rule.lhs, rule.rhs)
        found = _var_on_path(to_side, P2[n:])
        if found is None:
            return []
        i, r1, r2 = found
        if occurrences(to_side, i) != 1 or occurrences(from_side, i) != 1:
            return []
        o = _var_position(from_side, i)
        pos = P1 + o + r2
        e2n = TermRewriteStep(s2.rule, Context.at(A, pos), s2.subst)
        A2 = step_orientation(SignedStep(e2n, e2.sign))[1]
        comps = list(s1.subst.components)
        comps[i - 1] = subterm(C, P1 + r1)
        e1n = TermRewriteStep(rule, Context.at(A2, P1), Substitution(s1.subst.source_arity, comps))
        return [(SignedStep(e2n, e2.sign), SignedStep(e1n, e1.sign))]
    # e1 acts inside the redex of e2
    rule = s2.rule
    from_side, to_side = (rule.lhs, rule.rhs) if e2.sign > 0 else (rule.rhs, rule.lhs)
    found = _var_on_path(from_side, P1[m:])
    if found is None:
        return []
    i, r1, r2 = found
    if occurrences(to_side, i) != 1 or occurrences(from_side, i) != 1:
        return []
    comps = list(s2.subst.components)
    comps[i - 1] = subterm(A, P2 + r1)
    e2n = TermRewriteStep(rule, Context.at(A, P2), Substitution(s2.subst.source_arity, comps))
    A2 = step_orientation(SignedStep(e2n, e2.sign))[1]
    o = _var_position(to_side, i)
    e1n = TermRewriteStep(s1.rule, Context.at(A2, P2 + o + r2), s1.subst)
    return [(SignedStep(e2n, e2.sign), SignedStep(e1n, e1.sign))]


def _var_on_path(t: Term, path: tuple):
    for k in range(len(path) + 1):
        if isinstance(t, Var):
            return t.index, path[:k], path[k:]
        if k == len(path):
            return None
        t = t.args[path[k]]
    return None


def _var_position(t: Term, i: int) -> tuple:
    for p in positions(t):
        u = subterm(t, p)
        if isinstance(u, Var) and u.index == i:
            return p
    raise ValueError(f"x{i} does not occur")


EXCHANGE = "exchange"


class TermMoves:
    """Cell instances and exchanges acting on term zig-zags."""

    def __init__(self, cells: Iterable[TermCoherenceCell], exchange: bool = True):
        self.exchange = exchange
        self.index: dict = defaultdict(list)
        self.longest = 0
        self.cells = {}
        for c in cells:
            self.cells[c.id] = c
            self.longest = max(self.longest, len(c.source.steps) + len(c.target.steps))
            for w, r in relator_pairs(c.source.steps, c.target.steps):
                pw = tuple(_pattern(s) for s in w)
                self.index[(pw[0].rule_id, pw[0].sign)].append((c.id, c.arity, pw, r))

    def neighbours(self, word):
        for j, s in enumerate(word):
            key = (s.rule.rule.id, s.sign)
            for cid, k, pw, r in self.index.get(key, ()):
                got = match_steps(pw, word[j : j + len(pw)], k)
                if got is None:
                    continue
                D, g = got
                yield Move(cid, word, j, len(pw), instantiate_word(r, D, g))
            if self.exchange and j + 1 < len(word):
                for pair in exchanges(s, word[j + 1]):
                    yield Move(EXCHANGE, word, j, 2, pair)

    def licensed(self, m: Move) -> bool:
        rewritten = m.word[: m.index] + m.replacement + m.word[m.index + m.length :]
        if not (composable(m.word) and composable(rewritten)):
            return False
        seg = m.segment
        if m.cell == EXCHANGE:
            return self.exchange and len(seg) == 2 and tuple(m.replacement) in [tuple(p) for p in exchanges(*seg)]
        if not seg:
            return False
        for cid, k, pw, r in self.index.get((seg[0].rule.rule.id, seg[0].sign), ()):
            if cid != m.cell or len(pw) != len(seg):
                continue
            got = match_steps(pw, seg, k)
            if got and instantiate_word(r, *got) == tuple(m.replacement):
                return True
        return False


def cohto_terms(T: Trs2, p: ZigZag, q: ZigZag, bound: int = 10_000, max_length: int | None = None) -> CohSearchOutcome:
    if p.start != q.start or p.end != q.end:
        raise ContractError("zig-zags are not parallel")
    if max_length is None:
        max_length = max(len(p), len(q)) + max(T.moves.longest, 2)
    return search(p.steps, q.steps, T.moves, bound, max_length)


# -- local confluence --------------------------------------------------------


def direct_cell_filling(T: Trs2, a1: TermRewriteStep, a2: TermRewriteStep, W: set):
    """A cell instance whose sides start with ``a1`` and ``a2`` and stay in W."""
    for c in T.cells.values():
        if not c.is_path_shaped():
            continue
        for src, tgt in ((c.source, c.target), (c.target, c.source)):
            if not src.steps or not tgt.steps:
                continue
            got = match_steps([_pattern(src.steps[0])], [fwd(a1)], c.arity)
            if got is None:
                continue
            D, g = got
            right = instantiate_word(tgt.steps, D, g)
            if right[0].rule != a2:
                continue
            left = instantiate_word(src.steps, D, g)
            if all(s.rule.rule.id in W for s in left + right):
                return c.id, left[1:], right[1:], (Move(c.id, left, 0, len(left), right),)
    return None


def w_paths_from(t: Term, rules: list[Rule], depth: int, limit: int = 200) -> dict:
    out: dict = defaultdict(list)
    out[t].append(())
    layer = [(t, ())]
    count = 1
    for _ in range(depth):
        nxt = []
        for u, p in layer:
            for s in redexes(u, rules):
                q = p + (fwd(s),)
                out[s.target].append(q)
                nxt.append((s.target, q))
                count += 1
                if count >= limit:
                    return out
        layer = nxt
    return out


@dataclass
class TrsConfluenceReport:
    pairs: list
    records: list
    termination: TerminationReport | None = None

    @property
    def confluent(self) -> bool:
        return all(r.proven for r in self.records)

    def unproven(self):
        return [(cp, r) for cp, r in zip(self.pairs, self.records) if not r.proven]

    def to_json(self) -> dict:
        recs = []
        for cp, r in zip(self.pairs, self.records):
            d = {
                "rules": [cp.outer.id, cp.inner.id],
                "position": list(cp.position),
                "source": print_term(cp.source),
                "left": str(cp.left),
                "right": str(cp.right),
                "verdict": r.verdict,
            }
            if r.proven:
                d["join"] = [_word_or_id(r.join_left), _word_or_id(r.join_right)]
                if r.cell is not None:
                    d["cell"] = str(r.cell)
                d["witness"] = [m.to_json() for m in r.witness]
            recs.append(d)
        return {"pairs": len(self.records), "filled": sum(r.proven for r in self.records), "records": recs}


def _word_or_id(w):
    return word_str(w)


def check_local_confluence_coherent(
    T: Trs2,
    W=None,
    bound: int = 10_000,
    cospan_depth: int = 3,
    max_candidates: int = 12,
) -> TrsConfluenceReport:
    """Fill every critical W-branching with a cell-derivable square."""
    rules = T.subset(W)
    ids = {r.id for r in rules}
    cert = T.termination(W)
    certified = cert is not None and cert.decreasing
    pairs = critical_pairs(rules)
    records = []
    for cp in pairs:
        a1, a2 = cp.left, cp.right
        direct = direct_cell_filling(T, a1, a2, ids)
        if direct:
            cid, q1, q2, chain = direct
            records.append(BranchingRecord(cp.source, a1, a2, "Proven", q1, q2, chain, cid))
            continue
        candidates = []
        if certified:
            n1, p1 = normalize_w(T, a1.target, W)
            n2, p2 = normalize_w(T, a2.target, W)
            if n1 == n2:
                candidates.append((p1.steps, p2.steps))
        from1 = w_paths_from(a1.target, rules, cospan_depth)
        from2 = w_paths_from(a2.target, rules, cospan_depth)
        extra = [(q1, q2) for z in from1 if z in from2 for q1 in from1[z] for q2 in from2[z]]
        extra.sort(key=lambda c: len(c[0]) + len(c[1]))
        for c in extra:
            if c not in candidates:
                candidates.append(c)
        rec = BranchingRecord(cp.source, a1, a2, "NotProvenWithinBound")
        for q1, q2 in candidates[:max_candidates]:
            left = (fwd(a1),) + q1
            right = (fwd(a2),) + q2
            out = search(left, right, T.moves, bound, max(len(left), len(right)) + max(T.moves.longest, 2))
            if out.proven:
                used = ",".join(sorted({str(m.cell) for m in out.witness}))
                rec = BranchingRecord(cp.source, a1, a2, "Proven", q1, q2, out.witness, used or None)
                break
        records.append(rec)
    return TrsConfluenceReport(pairs, records, cert)


def find_rewrite_loop(T: Trs2, W=None, depth: int = 4):
    """A W-path from a left-hand side back to itself, if a short one exists."""
    rules = T.subset(W)
    for r in rules:
        start = r.lhs
        layer = [(start, ())]
        seen = {start}
        for _ in range(depth):
            nxt = []
            for u, p in layer:
                for s in redexes(u, rules):
                    q = p + (fwd(s),)
                    if s.target == start:
                        return ZigZag(start, q, start)
                    if s.target not in seen:
                        seen.add(s.target)
                        nxt.append((s.target, q))
            layer = nxt
    return None


# -- hom-wise abstract systems ---------------------------------------------------


@dataclass(frozen=True)
class CellInstance:
    cell: str
    context: Context
    subst: Substitution

    def __str__(self):
        comps = ",".join(print_term(c) for c in self.subst.components)
        return f"{print_term(self.context.body)}[{self.cell}<{comps}>]"


@dataclass(frozen=True)
class ExchangeInstance:
    first: TermRewriteStep
    second: TermRewriteStep

    def __str__(self):
        return f"exchange({self.first}, {self.second})"


def hom_ars(T: Trs2, n: int, size_bound: int, exchange: bool = True) -> Ars2:
    """Finite truncation of the rewriting system on terms of arity ``n``.

    Objects are terms with at most ``size_bound`` nodes, rules are the steps
    between them and cells are the bicontext instances of ``T``'s cells.
    With ``exchange`` the squares commuting two non-overlapping steps are
    added as cells as well.
    """
    objects = enumerate_terms(T.signature, n, size_bound)
    objset = set(objects)
    rules = []
    truncated = False
    by_source = {}
    all_rules = list(T.rules.values())
    for t in objects:
        steps = []
        for s in redexes(t, all_rules):
            if s.target in objset:
                steps.append(s)
                rules.append((s, t, s.target))
            else:
                truncated = True
        by_source[t] = steps
    cells = []
    seen = set()
    for c in T.cells.values():
        start = c.source.start
        for t in objects:
            for h in positions(t):
                f = match(start, subterm(t, h))
                if f is None:
                    continue
                D = Context.at(t, h)
                key = (c.id, D, f)
                if key in seen:
                    continue
                seen.add(key)
                src = instantiate_word(c.source.steps, D, f)
                tgt = instantiate_word(c.target.steps, D, f)
                ends = [t] + [st.rule.source for st in src + tgt] + [st.rule.target for st in src + tgt]
                if not all(e in objset for e in ends):
                    truncated = True
                    continue
                try:
                    zs = term_zigzag(t, src)
                    zt = term_zigzag(t, tgt)
                except ContractError:
                    continue
                cells.append(CoherenceCell(CellInstance(c.id, D, f), zs, zt))
    if exchange:
        for t in objects:
            steps = by_source[t]
            for i, a in enumerate(steps):
                for b in steps[i + 1 :]:
                    for e2n, e1n in exchanges(SignedStep(a, -1), fwd(b)):
                        sq_l = (fwd(a), e2n)
                        sq_r = (fwd(b), fwd(e1n.rule))
                        if e2n.rule.target not in objset:
                            truncated = True
                            continue
                        cells.append(
                            CoherenceCell(
                                ExchangeInstance(a, b),
                                ZigZag(t, sq_l, e2n.rule.target),
                                ZigZag(t, sq_r, e2n.rule.target),
                            )
                        )
    return Ars2(objects, rules, cells, truncated)


# -- rule/cell overlaps -----------------------------------------------------------


def rule_cell_overlaps(T: Trs2, W=None) -> list[tuple]:
    """Overlaps of a W-rule's left-hand side with the source term of a cell.

    Returns ``(rule, cell, position, instantiated source)`` for each
    non-variable position of the cell's source where the two unify.
    """
    out = []
    for r in T.subset(W):
        for c in T.cells.values():
            start = c.source.start
            for pos in positions(start):
                if not isinstance(subterm(start, pos), App):
                    continue
                s1, l2 = rename_apart(start, r.lhs)
                sigma = unify(subterm(s1, pos), l2)
                if sigma is not None:
                    out.append((r.id, c.id, pos, substitute(s1, sigma)))
    return out


# -- Tietze moves ----------------------------------------------------------


def generic_step(rule: Rule) -> TermRewriteStep:
    return TermRewriteStep(rule, Context.hole(rule.arity), Substitution.identity(rule.arity))


@dataclass(frozen=True)
class AddRule:
    """Add ``rule`` with a defining cell.

    Either ``definition`` (a zig-zag from lhs to rhs; the cell is
    ``rule => definition``) or an explicit ``cell`` in which the new rule
    occurs exactly once, on one side only.
    """

    rule: Rule
    cell_id: str
    definition: ZigZag | None = None
    cell: TermCoherenceCell | None = None


@dataclass(frozen=True)
class AddCell:
    cell: TermCoherenceCell
    bound: int = 10_000
    proof: CohSearchOutcome | None = None


@dataclass(frozen=True)
class RemoveRule:
    rule_id: str
    cell_id: str


@dataclass(frozen=True)
class RemoveCell:
    cell_id: str
    bound: int = 10_000
    proof: CohSearchOutcome | None = None


def tietze_trs(T: Trs2, move) -> Trs2:
    if isinstance(move, AddRule):
        r = move.rule
        if r.id in T.rules or move.cell_id in T.cells:
            raise TietzeError("identifier already in use")
        rules = list(T.rules.values()) + [r]
        if move.definition is not None:
            d = move.definition
            if d.start != r.lhs or d.end != r.rhs:
                raise TietzeError("definition is not parallel to the new rule")
            if any(s.rule.rule.id == r.id for s in d.steps):
                raise TietzeError("definition mentions the new rule")
            g = generic_step(r)
            cell = TermCoherenceCell(move.cell_id, ZigZag(r.lhs, (fwd(g),), r.rhs), d)
            entry = f"add rule {r} defined by {zigzag_str(d)}"
        elif move.cell is not None:
            cell = move.cell
            if cell.id != move.cell_id:
                raise TietzeError("cell id mismatch")
            hits_s = sum(s.rule.rule.id == r.id for s in cell.source.steps)
            hits_t = sum(s.rule.rule.id == r.id for s in cell.target.steps)
            if sorted((hits_s, hits_t)) != [0, 1]:
                raise TietzeError("the new rule must occur exactly once in the defining cell")
            entry = f"add rule {r} with defining cell {cell}"
        else:
            raise TietzeError("a new rule needs a definition")
        return T.replace(rules=rules, cells=list(T.cells.values()) + [cell], transcript=T.transcript + (entry,))
    if isinstance(move, AddCell):
        c = move.cell
        if c.id in T.cells:
            raise TietzeError("identifier already in use")
        proof = move.proof or cohto_terms(T, c.source, c.target, move.bound)
        if not proof.proven or not chain_is_valid(c.source.steps, c.target.steps, proof.witness, T.moves):
            raise TietzeError(f"cell {c.id} is not derivable within the bound")
        entry = f"add cell {c} ({len(proof.witness)} moves)"
        return T.replace(cells=list(T.cells.values()) + [c], transcript=T.transcript + (entry,))
    if isinstance(move, RemoveCell):
        c = T.cells[move.cell_id]
        rest = T.replace(cells=[d for d in T.cells.values() if d.id != c.id])
        proof = move.proof or cohto_terms(rest, c.source, c.target, move.bound)
        if not proof.proven or not chain_is_valid(c.source.steps, c.target.steps, proof.witness, rest.moves):
            raise TietzeError(f"cell {c.id} is not derivable from the other cells")
        entry = f"remove cell {c.id} ({len(proof.witness)} moves)"
        return rest.replace(transcript=T.transcript + (entry,))
    if isinstance(move, RemoveRule):
        return _remove_rule(T, move.rule_id, move.cell_id)
    raise TypeError(f"unknown Tietze move {move!r}")


def _remove_rule(T: Trs2, rule_id: str, cell_id: str) -> Trs2:
    if rule_id not in T.rules or cell_id not in T.cells:
        raise TietzeError("unknown rule or cell")
    c = T.cells[cell_id]
    src, tgt = c.source.steps, c.target.steps
    if sum(s.rule.rule.id == rule_id for s in tgt) and not sum(s.rule.rule.id == rule_id for s in src):
        src, tgt = tgt, src
    occ = [s for s in src if s.rule.rule.id == rule_id]
    if len(occ) != 1 or any(s.rule.rule.id == rule_id for s in tgt):
        raise TietzeError(f"{rule_id} must occur exactly once in one side of {cell_id}")
    step = occ[0].rule
    if step != generic_step(T.rules[rule_id]):
        raise TietzeError(f"{rule_id} must occur as a plain rule application in {cell_id}")
    tmp = CoherenceCell(cell_id, ZigZag(c.source.start, src, c.source.end), ZigZag(c.source.start, tgt, c.source.end))
    rep = removal_word(tmp, step)
    pattern = tuple(rep)
    cells = []
    for d in T.cells.values():
        if d.id == cell_id:
            continue
        cells.append(
            TermCoherenceCell(
                d.id,
                ZigZag(d.source.start, _replace_rule(d.source.steps, rule_id, pattern), d.source.end),
                ZigZag(d.target.start, _replace_rule(d.target.steps, rule_id, pattern), d.target.end),
            )
        )
    rules = [r for r in T.rules.values() if r.id != rule_id]
    subsets = {k: frozenset(v) - {rule_id} for k, v in T.subsets.items()}
    entry = f"remove rule {rule_id} through cell {cell_id}"
    return T.replace(rules=rules, cells=cells, subsets=subsets, transcript=T.transcript + (entry,))


def _replace_rule(word, rule_id, pattern) -> tuple:
    out = []
    for s in word:
        st = s.rule
        if st.rule.id != rule_id:
            out.append(s)
            continue
        inst = instantiate_word(pattern, st.context, st.subst)
        out.extend(inst if s.sign > 0 else inverse_word(inst))
    return reduce_word(out)
