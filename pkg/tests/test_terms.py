import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cohrewrite.syntax import ParseError, parse_term
from cohrewrite.terms import (
    App,
    ArityError,
    Bicontext,
    Context,
    Hole,
    Signature,
    Substitution,
    Var,
    bicontext_apply,
    canonical_renaming,
    compose_bicontexts,
    compose_contexts,
    compose_subst,
    enumerate_terms,
    is_affine,
    occurrences,
    plug,
    positions,
    positions_postorder,
    print_term,
    size,
    substitute,
    subterm,
    term_vars,
)

from strategies import SIG, bicontexts, contexts, substitutions, terms

arities = st.integers(min_value=0, max_value=3)


def test_vars_and_printing():
    t = parse_term("m(x2,m(x1,x2))", 3)
    assert t.arity == 3
    assert term_vars(t) == [2, 1, 2]
    assert occurrences(t, 2) == 2
    assert not is_affine(t)
    assert print_term(t) == "m(x2,m(x1,x2))"
    assert size(t) == 5


def test_positions_orders():
    t = parse_term("m(m(x1,x2),x3)")
    assert list(positions(t)) == [(), (0,), (0, 0), (0, 1), (1,)]
    assert list(positions_postorder(t)) == [(0, 0), (0, 1), (0,), (1,), ()]
    assert subterm(t, (0, 1)) == Var(2, 3)


def test_variable_out_of_range():
    with pytest.raises(ArityError):
        Var(3, 2)
    with pytest.raises(ArityError):
        App("m", (Var(1, 1), Var(1, 2)), 2)


def test_substitution_arity_checked():
    t = parse_term("m(x1,x2)")
    with pytest.raises(ArityError):
        substitute(t, Substitution(1, [Var(1, 1)]))
    with pytest.raises(ArityError):
        Substitution(2, [Var(1, 1)])


def test_enumerate_small():
    sig = Signature((("m", 2), ("e", 0)))
    got = enumerate_terms(sig, 1, 3)
    assert [print_term(t) for t in got] == [
        "x1", "e", "m(x1,x1)", "m(x1,e)", "m(e,x1)", "m(e,e)",
    ]


def test_context_needs_one_hole():
    with pytest.raises(ValueError):
        Context(App("m", (Hole(1), Hole(1)), 1))


def test_canonical_renaming_example():
    t = parse_term("m(x3,m(x1,x3))")
    renamed, back = canonical_renaming(t)
    assert print_term(renamed) == "m(x1,m(x2,x1))"
    assert substitute(renamed, back) == t


@given(st.data(), arities, arities, arities)
def test_substitution_action(data, k, n, m):
    t = data.draw(terms(k))
    f = data.draw(substitutions(n, k))
    g = data.draw(substitutions(m, n))
    assert substitute(substitute(t, f), g) == substitute(t, compose_subst(g, f))
    assert substitute(t, Substitution.identity(k)) == t


@given(st.data(), arities, arities, arities, arities)
def test_substitution_composition_associative(data, a, b, c, d):
    f = data.draw(substitutions(a, b))
    g = data.draw(substitutions(b, c))
    h = data.draw(substitutions(c, d))
    assert compose_subst(f, compose_subst(g, h)) == compose_subst(compose_subst(f, g), h)
    assert compose_subst(Substitution.identity(a), f) == f
    assert compose_subst(f, Substitution.identity(b)) == f


@given(st.data(), arities, arities, arities)
def test_bicontext_action(data, k, n, m):
    t = data.draw(terms(k))
    first = data.draw(bicontexts(k, n))
    second = data.draw(bicontexts(n, m))
    both = compose_bicontexts(first, second)
    assert bicontext_apply(second, bicontext_apply(first, t)) == bicontext_apply(both, t)
    assert compose_bicontexts(Bicontext.identity(k), first) == first
    assert compose_bicontexts(first, Bicontext.identity(n)) == first


@settings(max_examples=50)
@given(st.data(), arities)
def test_bicontext_composition_associative(data, k):
    b1 = data.draw(bicontexts(k, k))
    b2 = data.draw(bicontexts(k, k))
    b3 = data.draw(bicontexts(k, k))
    assert compose_bicontexts(b1, compose_bicontexts(b2, b3)) == compose_bicontexts(compose_bicontexts(b1, b2), b3)


@given(st.data(), arities)
def test_context_split_and_plug(data, n):
    t = data.draw(terms(n))
    pos = data.draw(st.sampled_from(list(positions(t))))
    C = Context.at(t, pos)
    assert plug(C, subterm(t, pos)) == t


@given(st.data(), arities)
def test_context_composition(data, n):
    C = data.draw(contexts(n))
    D = data.draw(contexts(n))
    t = data.draw(terms(n))
    assert plug(compose_contexts(C, D), t) == plug(C, plug(D, t))


@given(st.data(), arities)
def test_print_parse_roundtrip(data, n):
    t = data.draw(terms(n))
    assert parse_term(print_term(t), n, SIG) == t


@given(st.data(), arities)
def test_canonical_renaming_inverts(data, n):
    t = data.draw(terms(n))
    renamed, back = canonical_renaming(t)
    assert substitute(renamed, back) == t
    assert sorted(set(term_vars(renamed))) == list(range(1, renamed.arity + 1))


def test_parse_errors():
    with pytest.raises(ParseError):
        parse_term("m(x1,", 2)
    with pytest.raises(ParseError):
        parse_term("m(x1,x2) x3")
    with pytest.raises(ParseError):
        parse_term("x0")
    with pytest.raises(ParseError):
        parse_term("q(x1)", 1, SIG)
    with pytest.raises(ParseError):
        parse_term("m(x1)", 1, SIG)
    with pytest.raises(ParseError):
        parse_term("x3", 2)
