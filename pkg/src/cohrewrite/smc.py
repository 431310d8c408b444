"""Symmetric monoidal coherence.

The built-in theories, the explicit theory of color lists and
color-preserving bijections, the functor sending a zig-zag to the
permutation of variable occurrences it induces, and the pruned system used
to prove coherence on affine terms.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from typing import Sequence

from .ars import (
    Ars2,
    ContractError,
    ZigZag,
    check_local_w_confluence,
    find_w_cycle,
    restrict_to_normal_forms,
    tietze_remove_rules,
)
from .dsl import load_theory
from .search import SignedStep, fwd, inverse_word
from .terms import (
    App,
    Context,
    Hole,
    Substitution,
    Term,
    Var,
    compose_subst,
    is_affine,
    substitute_context,
    subterm,
    term_vars,
)
from .trs import (
    Rule,
    TermRewriteStep,
    Trs2,
    check_local_confluence_coherent,
    hom_ars,
    incoming_steps,
    match,
    normalize_w,
    redexes,
    redexes_at,
    step_orientation,
    term_zigzag,
)

MONOIDAL = frozenset({"alpha", "lambda", "rho"})
UNITS = frozenset({"lambda", "rho"})
SWAPS = frozenset({"gamma", "delta"})


class UnsupportedRule(ValueError):
    pass


# -- built-in theories ----------------------------------------------------------


@lru_cache(maxsize=None)
def builtin(name: str) -> Trs2:
    """Load ``mon``, ``smon`` or ``smon-prime`` from the packaged theory files."""
    if name not in BUILTINS:
        raise KeyError(f"unknown built-in theory {name!r}; choose from {', '.join(BUILTINS)}")
    text = resources.files("cohrewrite").joinpath("theories", f"{name}.thy").read_text()
    return load_theory(text, name)


BUILTINS = ("mon", "smon", "smon-prime")


def builtin_mon() -> Trs2:
    return builtin("mon")


def builtin_smon() -> Trs2:
    return builtin("smon")


def builtin_smon_prime() -> Trs2:
    return builtin("smon-prime")


# -- color lists and bijections ----------------------------------------------------


@dataclass(frozen=True)
class ColorList:
    source_arity: int
    colors: tuple

    def __post_init__(self):
        object.__setattr__(self, "colors", tuple(self.colors))
        for c in self.colors:
            if not 0 <= c < self.source_arity:
                raise ValueError(f"color {c} out of range for arity {self.source_arity}")

    def __len__(self):
        return len(self.colors)

    def is_affine(self) -> bool:
        return len(set(self.colors)) == len(self.colors)

    def __str__(self):
        return "[" + ",".join(map(str, self.colors)) + "]"


def colors(n: int, *cs: int) -> ColorList:
    return ColorList(n, cs)


def s_compose_1cells(fs: Sequence[ColorList], g: ColorList) -> ColorList:
    """Replace each color ``c`` of ``g`` by the list ``fs[c]`` and flatten."""
    if g.source_arity != len(fs):
        raise ValueError(f"{len(fs)} lists given for a 1-cell of arity {g.source_arity}")
    arities = {f.source_arity for f in fs}
    if len(arities) > 1:
        raise ValueError("the substituted lists have different arities")
    n = arities.pop() if arities else 0
    out = []
    for c in g.colors:
        out.extend(fs[c].colors)
    return ColorList(n, out)


@dataclass(frozen=True)
class ColorBijection:
    """A 2-cell ``source => target``: target position ``i`` comes from
    source position ``mapping[i]`` and carries the same color."""

    source: ColorList
    target: ColorList
    mapping: tuple

    def __post_init__(self):
        object.__setattr__(self, "mapping", tuple(self.mapping))
        k = len(self.mapping)
        if len(self.source) != k or len(self.target) != k:
            raise ValueError("endpoints and mapping have different lengths")
        if sorted(self.mapping) != list(range(k)):
            raise ValueError("mapping is not a bijection")
        if self.source.source_arity != self.target.source_arity:
            raise ValueError("endpoints have different arities")
        for i, j in enumerate(self.mapping):
            if self.source.colors[j] != self.target.colors[i]:
                raise ValueError(f"position {i} changes color")

    @classmethod
    def identity(cls, f: ColorList) -> "ColorBijection":
        return cls(f, f, tuple(range(len(f))))

    def is_identity(self) -> bool:
        return self.mapping == tuple(range(len(self.mapping)))

    def inverse(self) -> "ColorBijection":
        inv = [0] * len(self.mapping)
        for i, j in enumerate(self.mapping):
            inv[j] = i
        return ColorBijection(self.target, self.source, tuple(inv))

    def then(self, other: "ColorBijection") -> "ColorBijection":
        return s_vertical_compose(self, other)

    def cycles(self) -> str:
        """One-line cycle notation; fixed points are omitted, ``()`` is the identity."""
        seen = set()
        out = []
        for start in range(len(self.mapping)):
            if start in seen or self.mapping[start] == start:
                continue
            cyc = []
            i = start
            while i not in seen:
                seen.add(i)
                cyc.append(i)
                i = self.mapping[i]
            out.append("(" + " ".join(map(str, cyc)) + ")")
        return "".join(out) or "()"

    def to_json(self) -> dict:
        return {
            "source": list(self.source.colors),
            "target": list(self.target.colors),
            "mapping": list(self.mapping),
            "cycles": self.cycles(),
        }

    def __str__(self):
        return f"{self.cycles()} : {self.source} => {self.target}"


def s_vertical_compose(alpha: ColorBijection, beta: ColorBijection) -> ColorBijection:
    if alpha.target != beta.source:
        raise ValueError("bijections do not chain")
    return ColorBijection(alpha.source, beta.target, tuple(alpha.mapping[j] for j in beta.mapping))


def _offsets(fs, g: ColorList) -> list[int]:
    out, acc = [], 0
    for c in g.colors:
        out.append(acc)
        acc += len(fs[c])
    return out


def s_whisker(alpha: ColorBijection, fs: Sequence[ColorList]) -> ColorBijection:
    """``alpha : g => g'`` with each color ``c`` replaced by the list ``fs[c]``.

    Blocks of occurrences move together, keeping their inner order.
    """
    src = s_compose_1cells(fs, alpha.source)
    tgt = s_compose_1cells(fs, alpha.target)
    off_src = _offsets(fs, alpha.source)
    mapping = []
    for i, c in enumerate(alpha.target.colors):
        base = off_src[alpha.mapping[i]]
        mapping.extend(base + o for o in range(len(fs[c])))
    return ColorBijection(src, tgt, tuple(mapping))


def s_whisker_inner(g: ColorList, alphas: Sequence[ColorBijection]) -> ColorBijection:
    """Apply ``alphas[c]`` inside every block of color ``c`` of ``g``."""
    src = s_compose_1cells([a.source for a in alphas], g)
    tgt = s_compose_1cells([a.target for a in alphas], g)
    mapping = []
    acc = 0
    for c in g.colors:
        mapping.extend(acc + j for j in alphas[c].mapping)
        acc += len(alphas[c].mapping)
    return ColorBijection(src, tgt, tuple(mapping))


def s_horizontal(alphas: Sequence[ColorBijection], beta: ColorBijection) -> ColorBijection:
    """Horizontal composite of ``alphas : fs => fs'`` and ``beta : g => g'``."""
    inner = s_whisker_inner(beta.source, alphas)
    outer = s_whisker(beta, [a.target for a in alphas])
    return s_vertical_compose(inner, outer)


def all_color_bijections(f: ColorList, g: ColorList) -> list[ColorBijection]:
    """Every color-preserving bijection ``f => g``, by brute force."""
    from itertools import permutations

    if len(f) != len(g):
        return []
    out = []
    for perm in permutations(range(len(f))):
        if all(f.colors[j] == g.colors[i] for i, j in enumerate(perm)):
            out.append(ColorBijection(f, g, perm))
    return out


# -- from terms to color lists -----------------------------------------------------


def term_colors(t: Term) -> ColorList:
    return ColorList(t.arity, [v - 1 for v in term_vars(t)])


def term_to_colorlist(t: Term, theory: Trs2 | None = None) -> ColorList:
    """Normalize with the monoidal rules, then read the variables left to right."""
    T = theory or builtin_mon()
    nf, _ = normalize_w(T, t, MONOIDAL & set(T.rules))
    return term_colors(nf)


def occurrence_labels(t: Term) -> Term:
    """Rename the k-th variable occurrence of ``t`` to ``x_k``."""
    k = len(term_vars(t))
    counter = iter(range(1, k + 1))

    def go(u):
        if isinstance(u, Var):
            return Var(next(counter), k)
        if isinstance(u, Hole):
            return Hole(k)
        return App(u.head, [go(a) for a in u.args], k)

    return go(t)


def _lift_step(rule: Rule, lifted: Term, pos: tuple, backward: bool) -> TermRewriteStep:
    side = rule.rhs if backward else rule.lhs
    if len(set(term_vars(side))) != rule.arity:
        raise UnsupportedRule(f"rule {rule.id} loses variables")
    f = match(side, subterm(lifted, pos))
    if f is None:
        raise UnsupportedRule(f"rule {rule.id} cannot be lifted along a renaming (non-linear side)")
    return TermRewriteStep(rule, Context.at(lifted, pos), f)


def step_bijection(s: SignedStep) -> ColorBijection:
    """The permutation of variable occurrences induced by one signed step."""
    st = s.rule
    start, end = step_orientation(s)
    lifted = occurrence_labels(start)
    k = lifted.arity
    ls = _lift_step(st.rule, lifted, st.position, s.sign < 0)
    lend = ls.target if s.sign > 0 else ls.source
    labels = term_vars(lend)
    if sorted(labels) != list(range(1, k + 1)):
        raise UnsupportedRule(f"rule {st.rule.id} does not permute variable occurrences")
    return ColorBijection(term_colors(start), term_colors(end), tuple(v - 1 for v in labels))


def underlying_bijection(p: ZigZag) -> ColorBijection:
    """Compose the occurrence permutations of every step of ``p``."""
    acc = ColorBijection.identity(term_colors(p.start))
    for s in p.steps:
        acc = s_vertical_compose(acc, step_bijection(s))
    return acc


# -- deciding equality -----------------------------------------------------------


@dataclass
class SmcDecision:
    equal: bool
    left: ColorBijection
    right: ColorBijection
    justification: list = field(default_factory=list)

    @property
    def verdict(self) -> str:
        return "Equal" if self.equal else "NotEqual"

    def to_json(self) -> dict:
        out = {"verdict": self.verdict, "justification": list(self.justification)}
        if self.equal:
            out["bijection"] = self.left.to_json()
        else:
            out["witness"] = {"left": self.left.to_json(), "right": self.right.to_json()}
        return out


@lru_cache(maxsize=None)
def _rigidity_certificate(theory: Trs2) -> tuple:
    W = MONOIDAL & set(theory.rules)
    term = theory.termination(W)
    if term is None or not term.decreasing:
        raise ContractError("the monoidal rules are not certified terminating")
    lc = check_local_confluence_coherent(theory, W, bound=1_000)
    if not lc.confluent:
        raise ContractError("the monoidal rules are not locally confluent with fillings")
    return (
        f"monoidal rules {{{', '.join(sorted(W))}}} terminate (linear interpretation) "
        f"and all {len(lc.records)} critical pairs are filled, so they form a convergent "
        "and hence 2-rigid subsystem",
        "the quotient by the monoidal rules is locally an equivalence and is isomorphic "
        "to the theory of color lists, so two zig-zags are equal exactly when their "
        "occurrence permutations agree",
    )


def decide_equal_smc(p: ZigZag, q: ZigZag, theory: Trs2 | None = None) -> SmcDecision:
    """Decide whether two parallel zig-zags denote the same 2-cell."""
    if p.start != q.start or p.end != q.end:
        raise ContractError("zig-zags are not parallel")
    T = theory or builtin_smon_prime()
    why = list(_rigidity_certificate(T))
    left, right = underlying_bijection(p), underlying_bijection(q)
    return SmcDecision(left == right, left, right, why)


# -- affine terms ---------------------------------------------------------------


def affine_lift(t: Term) -> tuple[Term, Substitution]:
    """An affine term and a renaming ``f`` with ``substitute(lifted, f) == t``."""
    lifted = occurrence_labels(t)
    f = Substitution(t.arity, [Var(v, t.arity) for v in term_vars(t)])
    return lifted, f


def lift_zigzag(p: ZigZag) -> tuple[ZigZag, Substitution]:
    """Lift ``p`` to the affine term of its source, step by step.

    The lifted zig-zag maps back to ``p`` under the renaming; this is checked
    for every step.
    """
    lifted, f = affine_lift(p.start)
    cur = lifted
    steps = []
    for s in p.steps:
        st = s.rule
        ls = _lift_step(st.rule, cur, st.position, s.sign < 0)
        back = TermRewriteStep(st.rule, substitute_context(ls.context, f), compose_subst(f, ls.subst))
        if back != st:
            raise UnsupportedRule(f"lifting {st} is not unique")
        steps.append(SignedStep(ls, s.sign))
        cur = ls.target if s.sign > 0 else ls.source
    return ZigZag(lifted, tuple(steps), cur), f


@dataclass
class Affine2Cell:
    bijection: ColorBijection
    path: ZigZag


def _step_named(t: Term, pos: tuple, rule_id: str, rules) -> TermRewriteStep:
    for s in redexes_at(t, pos, rules):
        if s.rule.id == rule_id:
            return s
    raise ContractError(f"no {rule_id} step at {pos}")


def comb_swaps(t: Term, order: Sequence[int], theory: Trs2) -> list[SignedStep]:
    """Adjacent swaps turning the right comb ``t`` into the comb listing ``order``."""
    rules = [theory.rules[r] for r in ("gamma", "delta")]
    cur_vars = list(term_vars(t))
    cur = t
    out = []
    L = len(cur_vars)
    for i, v in enumerate(order):
        j = cur_vars.index(v, i)
        for k in range(j - 1, i - 1, -1):
            pos = (1,) * k
            rid = "gamma" if k == L - 2 else "delta"
            s = _step_named(cur, pos, rid, rules)
            out.append(fwd(s))
            cur = s.target
            cur_vars[k], cur_vars[k + 1] = cur_vars[k + 1], cur_vars[k]
    return out


def affine_2cell(t: Term, u: Term, theory: Trs2 | None = None) -> Affine2Cell | None:
    """The unique 2-cell ``t => u`` for affine ``t``, or ``None`` when the
    variables differ.  The path normalizes both ends and sorts the comb by
    adjacent swaps."""
    if not is_affine(t):
        raise ContractError("the source must be affine")
    if t.arity != u.arity:
        raise ContractError("terms have different arities")
    if sorted(term_vars(t)) != sorted(term_vars(u)):
        return None
    T = theory or builtin_smon_prime()
    W = MONOIDAL & set(T.rules)
    nt, pt = normalize_w(T, t, W)
    nu, pu = normalize_w(T, u, W)
    swaps = comb_swaps(nt, term_vars(nu), T)
    path = term_zigzag(t, pt.steps + tuple(swaps) + inverse_word(pu.steps))
    return Affine2Cell(underlying_bijection(path), path)


# -- enumeration of realized bijections --------------------------------------------


def realized_bijections(
    t: Term,
    theory: Trs2 | None = None,
    max_length: int | None = None,
    max_size: int | None = None,
) -> dict:
    """Breadth-first search over ``(term, bijection)`` states reachable from ``t``.

    Every zig-zag of length at most ``max_length`` (staying within terms of
    at most ``max_size`` nodes) ends in one of the returned states; the
    result maps each reached term to the set of bijections realized.
    """
    T = theory or builtin_smon_prime()
    rules = list(T.rules.values())
    start = (t, tuple(range(len(term_vars(t)))))
    seen = {start}
    layer = [start]
    depth = 0
    cache: dict = {}
    while layer and (max_length is None or depth < max_length):
        nxt = []
        for term, mp in layer:
            for s, bij in _moves_from(term, rules, cache, max_size):
                state = (s, tuple(mp[j] for j in bij))
                if state not in seen:
                    seen.add(state)
                    nxt.append(state)
        layer = nxt
        depth += 1
    out: dict = {}
    src = term_colors(t)
    for term, mp in seen:
        out.setdefault(term, set()).add(ColorBijection(src, term_colors(term), mp))
    return out


def bijections_between(
    t: Term,
    u: Term,
    max_length: int,
    theory: Trs2 | None = None,
    max_size: int | None = None,
) -> set:
    """Bijections ``t => u`` realized by zig-zags of length at most ``max_length``.

    Searches halfway from each end and joins the two halves at shared terms.
    """
    ahead = realized_bijections(t, theory, (max_length + 1) // 2, max_size)
    behind = realized_bijections(u, theory, max_length // 2, max_size)
    out = set()
    for term, back in behind.items():
        for b in ahead.get(term, ()):
            for c in back:
                out.add(b.then(c.inverse()))
    return out


def _moves_from(term, rules, cache, max_size):
    if term in cache:
        return cache[term]
    out = []
    for st in redexes(term, rules):
        if max_size is None or st.target.size <= max_size:
            out.append((st.target, step_bijection(fwd(st)).mapping))
    for st in incoming_steps(term, rules):
        if max_size is None or st.source.size <= max_size:
            out.append((st.source, step_bijection(SignedStep(st, -1)).mapping))
    cache[term] = out
    return out


# -- the pruned system on unit-free terms ------------------------------------------


def vars_key(t: Term) -> tuple:
    """Sort key for the variable order: a smaller key means a larger list."""
    return tuple(term_vars(t))


def is_decreasing_step(step: TermRewriteStep) -> bool:
    return vars_key(step.source) < vars_key(step.target)


def is_increasing_step(step: TermRewriteStep) -> bool:
    return vars_key(step.source) > vars_key(step.target)


@dataclass
class PrunedSystem:
    full: Ars2
    unit_free: Ars2
    pruned: Ars2
    removed: dict

    def affine_part(self) -> Ars2:
        return affine_part(self.pruned)


def affine_part(A: Ars2) -> Ars2:
    keep = [x for x in A.objects if is_affine(x)]
    ks = set(keep)
    rules = [(r, s, t) for r, (s, t) in A.rules.items() if s in ks and t in ks]
    cells = [c for c in A.cells.values() if c.source.start in ks and c.source.end in ks]
    return Ars2(keep, rules, cells, A.truncated)


def prune_swaps(n: int, size_bound: int, theory: Trs2 | None = None) -> PrunedSystem:
    T = theory or builtin_smon_prime()
    full = hom_ars(T, n, size_bound)
    unit_free = restrict_to_normal_forms(full, lambda r: r.rule.id in UNITS)
    involutions = {}
    for cid, c in unit_free.cells.items():
        if getattr(cid, "cell", None) in ("F", "F'") and len(c.source.steps) == 2 and not c.target.steps:
            involutions[c.source.steps[0].rule] = cid
    removed = {}
    for r in unit_free.rules:
        if r.rule.id in SWAPS and is_increasing_step(r):
            if r not in involutions:
                raise ContractError(f"no involution cell for {r}")
            removed[r] = involutions[r]
    pruned = tietze_remove_rules(unit_free, removed, drop_trivial=True)
    return PrunedSystem(full, unit_free, pruned, removed)


def build_p_double_prime(n: int, size_bound: int, theory: Trs2 | None = None) -> Ars2:
    """Unit-free hom system of arity ``n`` with the increasing swaps removed."""
    return prune_swaps(n, size_bound, theory).pruned


@dataclass
class PrunedReport:
    cycle: object
    local: object

    @property
    def passed(self) -> bool:
        return self.cycle is None and self.local.confluent


def check_pruned_system(A: Ars2, bound: int = 10_000) -> PrunedReport:
    """Acyclicity and local confluence with fillings on affine objects."""
    part = affine_part(A)
    return PrunedReport(find_w_cycle(part), check_local_w_confluence(part, None, bound))
