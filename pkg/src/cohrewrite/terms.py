"""First-order terms with positional variables and an explicit arity.

A term of arity ``n`` may mention the variables ``x1 .. xn``.  Every node
carries the arity, so ``x1`` at arity 1 and ``x1`` at arity 2 are different
terms.  Changing the arity is always explicit (see :func:`rearity`).

Positions are tuples of 0-based child indices, root is ``()``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence


class ArityError(ValueError):
    pass


class Term:
    __slots__ = ()

    arity: int

    def __str__(self) -> str:
        return print_term(self)

    def __repr__(self) -> str:
        return f"<{print_term(self)} : {self.arity}>"


class Var(Term):
    __slots__ = ("index", "arity", "_hash")

    def __init__(self, index: int, arity: int):
        if not 1 <= index <= arity:
            raise ArityError(f"variable x{index} out of range for arity {arity}")
        self.index = index
        self.arity = arity
        self._hash = hash(("var", index, arity))

    def __eq__(self, other):
        return (
            isinstance(other, Var)
            and self.index == other.index
            and self.arity == other.arity
        )

    def __hash__(self):
        return self._hash

    @property
    def size(self) -> int:
        return 1


class App(Term):
    __slots__ = ("head", "args", "arity", "size", "_hash")

    def __init__(self, head, args: Sequence[Term] = (), arity: int | None = None):
        args = tuple(args)
        if arity is None:
            if not args:
                raise ArityError(f"constant {head} needs an explicit arity")
            arity = args[0].arity
        for a in args:
            if a.arity != arity:
                raise ArityError(
                    f"child {print_term(a)} has arity {a.arity}, expected {arity}"
                )
        self.head = head
        self.args = args
        self.arity = arity
        self.size = 1 + sum(a.size for a in args)
        self._hash = hash((head, args, arity))

    def __eq__(self, other):
        if self is other:
            return True
        return (
            isinstance(other, App)
            and self._hash == other._hash
            and self.head == other.head
            and self.arity == other.arity
            and self.args == other.args
        )

    def __hash__(self):
        return self._hash


class Hole(Term):
    """The hole of a context.  Only ever appears inside ``Context.body``."""

    __slots__ = ("arity",)

    def __init__(self, arity: int):
        self.arity = arity

    def __eq__(self, other):
        return isinstance(other, Hole) and other.arity == self.arity

    def __hash__(self):
        return hash(("hole", self.arity))

    @property
    def size(self) -> int:
        return 1


@dataclass(frozen=True)
class Signature:
    """Ordered symbol table ``name -> arity``."""

    symbols: tuple[tuple[str, int], ...]

    def __post_init__(self):
        names = [s for s, _ in self.symbols]
        if len(set(names)) != len(names):
            raise ValueError("duplicate symbol in signature")
        for s, k in self.symbols:
            if k < 0:
                raise ValueError(f"negative arity for {s}")

    @classmethod
    def of(cls, **arities: int) -> "Signature":
        return cls(tuple(arities.items()))

    def arity_of(self, name: str) -> int:
        for s, k in self.symbols:
            if s == name:
                return k
        raise KeyError(name)

    def __contains__(self, name) -> bool:
        return any(s == name for s, _ in self.symbols)

    @property
    def names(self) -> list[str]:
        return [s for s, _ in self.symbols]


def const(name: str, arity: int = 0) -> App:
    return App(name, (), arity)


# -- traversal -------------------------------------------------------------


def subterm(t: Term, pos: Sequence[int]) -> Term:
    for i in pos:
        t = t.args[i]
    return t


def replace_at(t: Term, pos: Sequence[int], s: Term) -> Term:
    if not pos:
        if s.arity != t.arity:
            raise ArityError("replacement has the wrong arity")
        return s
    i = pos[0]
    args = list(t.args)
    args[i] = replace_at(args[i], pos[1:], s)
    return App(t.head, args, t.arity)


def positions(t: Term) -> Iterator[tuple[int, ...]]:
    """Positions in pre-order (outermost first, left to right)."""
    stack = [((), t)]
    while stack:
        pos, u = stack.pop()
        yield pos
        if isinstance(u, App):
            for i in range(len(u.args) - 1, -1, -1):
                stack.append((pos + (i,), u.args[i]))


def positions_postorder(t: Term, pos: tuple[int, ...] = ()) -> Iterator[tuple[int, ...]]:
    """Positions innermost first, left to right."""
    if isinstance(t, App):
        for i, a in enumerate(t.args):
            yield from positions_postorder(a, pos + (i,))
    yield pos


def size(t: Term) -> int:
    return t.size


def occurrences(t: Term, i: int) -> int:
    if not 1 <= i <= t.arity:
        raise ArityError(f"x{i} out of range for arity {t.arity}")
    return _occ(t, i)


def _occ(t, i):
    if isinstance(t, Var):
        return 1 if t.index == i else 0
    if isinstance(t, App):
        return sum(_occ(a, i) for a in t.args)
    return 0


def hole_count(t: Term) -> int:
    if isinstance(t, Hole):
        return 1
    if isinstance(t, App):
        return sum(hole_count(a) for a in t.args)
    return 0


def term_vars(t: Term) -> list[int]:
    """Variable indices in left-to-right order, with repetitions."""
    out: list[int] = []
    _collect(t, out)
    return out


def _collect(t, out):
    if isinstance(t, Var):
        out.append(t.index)
    elif isinstance(t, App):
        for a in t.args:
            _collect(a, out)


def is_affine(t: Term) -> bool:
    vs = term_vars(t)
    return len(vs) == len(set(vs))


def is_linear_in(t: Term, i: int) -> bool:
    return _occ(t, i) == 1


def rearity(t: Term, n: int) -> Term:
    """Reinterpret ``t`` at arity ``n`` (all its variables must fit)."""
    if isinstance(t, Var):
        return Var(t.index, n)
    if isinstance(t, Hole):
        return Hole(n)
    return App(t.head, [rearity(a, n) for a in t.args], n)


# -- substitutions ---------------------------------------------------------


class Substitution:
    """``f : n -> m``: ``m`` components, each a term of arity ``n``."""

    __slots__ = ("source_arity", "components", "_hash")

    def __init__(self, source_arity: int, components: Sequence[Term]):
        components = tuple(components)
        for c in components:
            if c.arity != source_arity:
                raise ArityError(
                    f"component {print_term(c)} has arity {c.arity}, expected {source_arity}"
                )
        self.source_arity = source_arity
        self.components = components
        self._hash = hash((source_arity, components))

    @classmethod
    def identity(cls, n: int) -> "Substitution":
        return cls(n, [Var(i, n) for i in range(1, n + 1)])

    @property
    def target_arity(self) -> int:
        return len(self.components)

    def __len__(self):
        return len(self.components)

    def __getitem__(self, i):
        return self.components[i]

    def __eq__(self, other):
        return (
            isinstance(other, Substitution)
            and self.source_arity == other.source_arity
            and self.components == other.components
        )

    def __hash__(self):
        return self._hash

    def is_identity(self) -> bool:
        return all(
            isinstance(c, Var) and c.index == i + 1 for i, c in enumerate(self.components)
        ) and self.source_arity == len(self.components)

    def __repr__(self):
        inner = ", ".join(print_term(c) for c in self.components)
        return f"<{inner}> : {self.source_arity} -> {len(self.components)}"


def substitute(t: Term, f: Substitution) -> Term:
    """``t[f]``: replace each ``x_i`` of ``t`` by the ``i``-th component of ``f``."""
    if t.arity != len(f.components):
        raise ArityError(
            f"term of arity {t.arity} cannot be substituted by {len(f.components)} components"
        )
    return _subst(t, f.components, f.source_arity)


def _subst(t, comps, n):
    if isinstance(t, Var):
        return comps[t.index - 1]
    if isinstance(t, Hole):
        return Hole(n)
    return App(t.head, [_subst(a, comps, n) for a in t.args], n)


def compose_subst(f: Substitution, g: Substitution) -> Substitution:
    """For ``f : n -> m`` and ``g : m -> k`` return ``g∘f : n -> k``.

    Component ``j`` is ``g_j[f]``, so ``t[g][f] == t[compose_subst(f, g)]``.
    """
    if g.source_arity != len(f.components):
        raise ArityError("substitutions do not chain")
    return Substitution(f.source_arity, [substitute(c, f) for c in g.components])


# -- contexts --------------------------------------------------------------


class Context:
    """A term of arity ``n`` with exactly one hole."""

    __slots__ = ("arity", "body", "position", "_hash")

    def __init__(self, body: Term, position: tuple[int, ...] | None = None):
        if position is None:
            found = [p for p in positions(body) if isinstance(subterm(body, p), Hole)]
            if len(found) != 1:
                raise ValueError(f"context needs exactly one hole, found {len(found)}")
            position = found[0]
        self.arity = body.arity
        self.body = body
        self.position = tuple(position)
        self._hash = hash(body)

    @classmethod
    def hole(cls, n: int) -> "Context":
        return cls(Hole(n), ())

    @classmethod
    def at(cls, t: Term, pos: Sequence[int]) -> "Context":
        pos = tuple(pos)
        return cls(replace_at(t, pos, Hole(t.arity)), pos)

    def plug(self, t: Term) -> Term:
        return plug(self, t)

    def __eq__(self, other):
        return isinstance(other, Context) and self.body == other.body

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"Context({print_term(self.body)} : {self.arity})"


def plug(C: Context, t: Term) -> Term:
    if t.arity != C.arity:
        raise ArityError(f"cannot plug a term of arity {t.arity} into a context of arity {C.arity}")
    return replace_at(C.body, C.position, t)


def substitute_context(C: Context, f: Substitution) -> Context:
    return Context(substitute(C.body, f), C.position)


def compose_contexts(outer: Context, inner: Context) -> Context:
    """``outer[inner]``: plug the inner context into the outer hole."""
    return Context(plug(outer, inner.body), outer.position + inner.position)


@dataclass(frozen=True)
class Bicontext:
    """A pair ``(C, f)`` acting on terms by ``t ↦ C[t[f]]``."""

    context: Context
    subst: Substitution

    def __post_init__(self):
        if self.subst.source_arity != self.context.arity:
            raise ArityError("bicontext substitution does not land in the context arity")

    @classmethod
    def identity(cls, k: int) -> "Bicontext":
        return cls(Context.hole(k), Substitution.identity(k))

    def apply(self, t: Term) -> Term:
        return bicontext_apply(self, t)

    def then(self, other: "Bicontext") -> "Bicontext":
        """The bicontext whose action is ``self`` followed by ``other``."""
        return compose_bicontexts(self, other)


def bicontext_apply(B: Bicontext, t: Term) -> Term:
    return plug(B.context, substitute(t, B.subst))


def compose_bicontexts(first: Bicontext, second: Bicontext) -> Bicontext:
    """Applying ``(C, f)`` then ``(D, g)`` sends ``t`` to ``D[C[t[f]][g]]``.

    Substitution distributes over plugging, so this is the bicontext
    ``(D[C[g]], g∘f)``.
    """
    C, f = first.context, first.subst
    D, g = second.context, second.subst
    inner = substitute_context(C, g)
    return Bicontext(compose_contexts(D, inner), compose_subst(g, f))


# -- printing (parsing lives in syntax.py) ----------------------------------


def print_term(t: Term) -> str:
    if isinstance(t, Var):
        return f"x{t.index}"
    if isinstance(t, Hole):
        return "[]"
    head = t.head if isinstance(t.head, str) else str(t.head)
    if not t.args:
        return head
    return head + "(" + ",".join(print_term(a) for a in t.args) + ")"


def canonical_renaming(t: Term) -> tuple[Term, Substitution]:
    """Rename variables of ``t`` in order of first occurrence.

    Returns ``(t', r)`` with ``t'`` of arity ``k`` (number of distinct
    variables) and ``r : arity(t) -> k`` such that ``t'[r] == t``.
    """
    order: list[int] = []
    for i in term_vars(t):
        if i not in order:
            order.append(i)
    k = len(order)
    back = {v: j + 1 for j, v in enumerate(order)}
    renamed = _rename(t, back, k)
    return renamed, Substitution(t.arity, [Var(v, t.arity) for v in order])


def _rename(t, back, k):
    if isinstance(t, Var):
        return Var(back[t.index], k)
    if isinstance(t, Hole):
        return Hole(k)
    return App(t.head, [_rename(a, back, k) for a in t.args], k)


def enumerate_terms(signature: Signature, n: int, max_size: int) -> list[Term]:
    """All terms of arity ``n`` with at most ``max_size`` nodes, smallest first."""
    by_size: dict[int, list[Term]] = {}
    syms = list(signature.symbols)
    for s in range(1, max_size + 1):
        out: list[Term] = []
        if s == 1:
            out.extend(Var(i, n) for i in range(1, n + 1))
            out.extend(App(name, (), n) for name, k in syms if k == 0)
        else:
            for name, k in syms:
                if k == 0:
                    continue
                for args in _splits(by_size, k, s - 1):
                    out.append(App(name, args, n))
        by_size[s] = out
    return [t for s in range(1, max_size + 1) for t in by_size[s]]


def _splits(by_size, k, total):
    if k == 0:
        if total == 0:
            yield ()
        return
    for first in range(1, total - (k - 1) + 1):
        for a in by_size.get(first, ()):
            for rest in _splits(by_size, k - 1, total - first):
                yield (a,) + rest
