"""Random generators shared by the property tests.

Hypothesis strategies drive the unit-level properties; the seeded
``random.Random`` builders give the acceptance suite exact sample counts.
"""
from __future__ import annotations

import random

from hypothesis import strategies as st

from cohrewrite.ars import Ars2, CoherenceCell, NormalizationChoice, ZigZag, local_w_branchings
from cohrewrite.search import SignedStep, fwd
from cohrewrite.terms import App, Bicontext, Context, Hole, Signature, Substitution, Var, positions, replace_at

SIG = Signature((("m", 2), ("e", 0), ("s", 1)))
RULE_NAMES = ("a", "b", "c")


# -- hypothesis strategies --------------------------------------------------


def terms(n: int, max_leaves: int = 8):
    leaves = [Var(i, n) for i in range(1, n + 1)] + [App("e", (), n)]
    base = st.sampled_from(leaves)

    def extend(kids):
        return st.one_of(
            st.tuples(kids, kids).map(lambda ab: App("m", ab, n)),
            kids.map(lambda a: App("s", (a,), n)),
        )

    return st.recursive(base, extend, max_leaves=max_leaves)


def substitutions(source: int, target: int):
    return st.lists(terms(source, 4), min_size=target, max_size=target).map(
        lambda cs: Substitution(source, cs)
    )


@st.composite
def contexts(draw, n: int):
    t = draw(terms(n, 6))
    pos = draw(st.sampled_from(list(positions(t))))
    return Context(replace_at(t, pos, Hole(n)), pos)


@st.composite
def bicontexts(draw, inner: int, outer: int):
    """A bicontext taking terms of arity ``inner`` to terms of arity ``outer``."""
    return Bicontext(draw(contexts(outer)), draw(substitutions(outer, inner)))


words = st.lists(
    st.builds(SignedStep, st.sampled_from(RULE_NAMES), st.sampled_from((1, -1))),
    max_size=24,
).map(tuple)

seeds = st.integers(min_value=0, max_value=2**32 - 1)


# -- seeded builders ---------------------------------------------------------


def random_term(rng: random.Random, n: int, budget: int = 6):
    if budget <= 1 or rng.random() < 0.3:
        k = rng.randint(0, n)
        return App("e", (), n) if k == 0 else Var(k, n)
    if rng.random() < 0.25:
        return App("s", (random_term(rng, n, budget - 1),), n)
    left = rng.randint(1, budget - 1)
    return App("m", (random_term(rng, n, left), random_term(rng, n, budget - left)), n)


def random_subst(rng: random.Random, source: int, target: int) -> Substitution:
    return Substitution(source, [random_term(rng, source, 3) for _ in range(target)])


def random_context(rng: random.Random, n: int) -> Context:
    t = random_term(rng, n, 4)
    pos = rng.choice(list(positions(t)))
    return Context(replace_at(t, pos, Hole(n)), pos)


def random_word(rng: random.Random, max_length: int = 24) -> tuple:
    return tuple(
        SignedStep(rng.choice(RULE_NAMES), rng.choice((1, -1)))
        for _ in range(rng.randint(0, max_length))
    )


def completed_ars(rng: random.Random, max_objects: int = 6, max_rules: int = 8) -> tuple[Ars2, frozenset]:
    """A finite acyclic W-graph whose local branchings are completed by cells.

    Objects fall into blocks; W-rules point forward inside a block and every
    other sink of a block gets a rule to the block's last object, so each
    block has one normal form.  A few rules outside W point anywhere.  Every
    local W-branching ``(a1, a2)`` receives a cell ``a1·n(y1) => a2·n(y2)``.
    """
    k = rng.randint(1, max_objects)
    cuts = sorted(rng.sample(range(1, k), rng.randint(0, min(2, k - 1)))) if k > 1 else []
    bounds = [0] + cuts + [k]
    blocks = [list(range(a, b)) for a, b in zip(bounds, bounds[1:])]
    rules = []
    for _ in range(rng.randint(0, max_rules)):
        blk = rng.choice(blocks)
        if len(blk) < 2:
            continue
        i, j = sorted(rng.sample(blk, 2))
        rules.append((f"r{len(rules)}", i, j))
    for blk in blocks:
        has_out = {s for _, s, _ in rules}
        for x in blk[:-1]:
            if x not in has_out:
                rules.append((f"r{len(rules)}", x, blk[-1]))
    W = frozenset(r for r, _, _ in rules)
    for i in range(rng.randint(0, 2)):
        rules.append((f"u{i}", rng.randrange(k), rng.randrange(k)))
    A = Ars2(range(k), rules)
    norm = NormalizationChoice.canonical(A, W)
    cells = []
    for a1, a2 in local_w_branchings(A, W):
        y1, y2 = A.rules[a1][1], A.rules[a2][1]
        x = A.rules[a1][0]
        left = (fwd(a1),) + norm.path(y1).steps
        right = (fwd(a2),) + norm.path(y2).steps
        end = norm.normal_form(y1)
        cells.append(CoherenceCell(f"c{len(cells)}", ZigZag(x, left, end), ZigZag(x, right, end)))
    return Ars2(range(k), rules, cells), W
