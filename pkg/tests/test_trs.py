import pytest

from cohrewrite.ars import ContractError, TietzeError
from cohrewrite.dsl import load_theory, parse_zigzag
from cohrewrite.search import chain_is_valid
from cohrewrite.smc import builtin
from cohrewrite.syntax import ParseError, parse_term
from cohrewrite.terms import ArityError, print_term, substitute
from cohrewrite.trs import (
    EXCHANGE,
    AddCell,
    AddRule,
    NotCertified,
    RemoveCell,
    RemoveRule,
    Rule,
    TermMoves,
    check_local_confluence_coherent,
    cohto_terms,
    critical_pairs,
    exchanges,
    find_rewrite_loop,
    hom_ars,
    incoming_steps,
    is_normal,
    match,
    normalize_w,
    redexes,
    tietze_trs,
    unify,
)

MON = builtin("mon")


def t(text, n=None):
    return parse_term(text, n)


def test_match_and_unify():
    f = match(t("m(m(x1,x2),x3)"), t("m(m(e,x1),m(x1,x2))"))
    assert [print_term(c) for c in f.components] == ["e", "x1", "m(x1,x2)"]
    assert match(t("m(x1,x1)"), t("m(e,x1)")) is None
    assert match(t("m(x1,x1)"), t("m(x2,x2)")) is not None
    left, right = t("m(x1,x2)"), t("m(m(x2,x2),e)")
    mgu = unify(left, right)
    assert substitute(left, mgu) == substitute(right, mgu) == t("m(m(e,e),e)", 2)
    assert unify(t("m(x1,e)", 2), t("m(m(x2,x2),x1)", 2)) is None  # e against m(x2,x2)
    assert unify(t("m(x1,x2)"), t("x1", 2)) is None  # occurs check
    assert unify(t("e", 0), t("m(e,e)", 0)) is None


def test_rule_properties():
    r = MON.rules["alpha"]
    assert r.arity == 3 and r.is_linear()
    assert not Rule("dup", t("m(x1,x1)"), t("x1")).is_linear()
    with pytest.raises(ArityError):
        Rule("bad", t("x1", 1), t("x1", 2))


def test_redexes_include_root_and_inner():
    s = t("m(m(m(x1,x2),x3),x4)")
    found = [(st.rule.id, st.position) for st in redexes(s, MON.rules.values())]
    assert found == [("alpha", ()), ("alpha", (0,))]
    for st in redexes(s, MON.rules.values()):
        assert st.source == s


def test_incoming_steps():
    u = t("m(x1,m(x2,x3))")
    for st in incoming_steps(u, [MON.rules["alpha"]]):
        assert st.target == u
    assert any(st.source == t("m(m(x1,x2),x3)") for st in incoming_steps(u, [MON.rules["alpha"]]))
    with pytest.raises(ValueError):
        incoming_steps(t("x1", 2), [Rule("proj", t("m(x1,x2)"), t("x1", 2))])


def test_step_terms_print_and_parse():
    z = parse_zigzag(MON, "m(lambda(x1),x2)")
    st = z.steps[0].rule
    assert str(st) == "m(lambda(x1),x2)"
    assert st.position == (0,)
    assert print_term(st.source) == "m(m(e,x1),x2)"
    assert print_term(st.target) == "m(x1,x2)"


def test_normalize():
    nf, path = normalize_w(MON, t("m(m(e,x1),e)"), "W")
    assert print_term(nf) == "x1" and len(path) == 2
    assert is_normal(nf, MON.rules.values())
    bare = MON.replace(interpretation=None)
    with pytest.raises(NotCertified):
        normalize_w(bare, t("m(e,x1)"))
    nf2, _ = normalize_w(bare, t("m(e,x1)"), bound=5)
    assert nf2 == t("x1")


def test_critical_pairs_of_mon():
    pairs = critical_pairs(MON.rules.values())
    got = [(cp.outer.id, cp.inner.id, cp.position, print_term(cp.source)) for cp in pairs]
    assert got == [
        ("alpha", "alpha", (0,), "m(m(m(x1,x2),x3),x4)"),
        ("alpha", "lambda", (0,), "m(m(e,x1),x2)"),
        ("alpha", "rho", (0,), "m(m(x1,e),x2)"),
        ("alpha", "rho", (), "m(m(x1,x2),e)"),
        ("lambda", "rho", (), "m(e,e)"),
    ]
    for cp in pairs:
        assert cp.left.source == cp.right.source == cp.source


def test_critical_pair_counts():
    assert len(critical_pairs(builtin("smon").rules.values())) == 9
    assert len(critical_pairs(builtin("smon-prime").rules.values())) == 18


def test_missing_pentagon_is_reported():
    T = MON.replace(cells=[c for c in MON.cells.values() if c.id != "A"])
    report = check_local_confluence_coherent(T, "W", bound=500)
    verdicts = {cp.inner.id + str(cp.position): r.verdict for cp, r in zip(report.pairs, report.records)}
    assert verdicts["alpha(0,)"] == "NotProvenWithinBound"
    assert sum(r.proven for r in report.records) == 4
    assert not report.confluent


def test_smon_gamma_loops():
    S = builtin("smon")
    assert not S.termination().decreasing
    loop = find_rewrite_loop(S)
    assert loop is not None and loop.start == loop.end and len(loop) == 2


def test_cohto_terms_pentagon():
    A = MON.cells["A"]
    out = cohto_terms(MON, A.source, A.target)
    assert out.proven and chain_is_valid(A.source.steps, A.target.steps, out.witness, MON.moves)
    with pytest.raises(ContractError):
        cohto_terms(MON, A.source, parse_zigzag(MON, "id(m(x1,x2))"))


def test_cell_instances_in_context():
    # B whiskered by m(-, x3) and with x1 := m(x4, x4)
    B = MON.cells["B"]
    wide = parse_zigzag(MON, "m(alpha(e,m(x4,x4),x2),x3) ; m(lambda(m(m(x4,x4),x2)),x3)", 4)
    narrow = parse_zigzag(MON, "m(m(lambda(m(x4,x4)),x2),x3)", 4)
    out = cohto_terms(MON, wide, narrow, bound=100)
    assert out.proven
    assert {m.cell for m in out.witness} == {B.id}


def test_disjoint_exchange():
    z = parse_zigzag(MON, "m(lambda(x1),m(e,x2)) ; m(x1,lambda(x2))")
    (pair,) = exchanges(*z.steps)
    assert [str(s.rule) for s in pair] == ["m(m(e,x1),lambda(x2))", "m(lambda(x1),x2)"]
    moves = TermMoves(MON.cells.values())
    flipped = parse_zigzag(MON, "m(m(e,x1),lambda(x2)) ; m(lambda(x1),x2)")
    out = cohto_terms(MON, z, flipped, bound=50)
    assert out.proven and out.witness[0].cell == EXCHANGE
    assert chain_is_valid(z.steps, flipped.steps, out.witness, moves)


def test_nested_exchange():
    # alpha at the root, then lambda inside its third argument
    z = parse_zigzag(MON, "alpha(x1,x2,m(e,x3)) ; m(x1,m(x2,lambda(x3)))", 3)
    (pair,) = exchanges(*z.steps)
    assert [str(s.rule) for s in pair] == ["m(m(x1,x2),lambda(x3))", "alpha(x1,x2,x3)"]
    # a duplicated variable forbids the exchange
    dup = load_theory("signature\n  m : 2\n  e : 0\nrules\n  d : m(x1,e) => m(x1,x1)\n  l : m(e,x1) => x1\n")
    w = parse_zigzag(dup, "d(m(e,x1)) ; m(l(x1),m(e,x1))", 1)
    assert exchanges(*w.steps) == []


def test_hom_ars_small():
    A = hom_ars(MON, 1, 5)
    assert all(x.arity == 1 for x in A.objects)
    assert all(x.size <= 5 for x in A.objects)
    for rid, (s, tgt) in A.rules.items():
        assert rid.source == s and rid.target == tgt
    assert A.cells


def test_tietze_errors():
    with pytest.raises(TietzeError):
        tietze_trs(MON, RemoveRule("alpha", "B"))
    with pytest.raises(TietzeError):
        tietze_trs(MON.replace(cells=[]), AddCell(MON.cells["A"], bound=50))
    with pytest.raises(TietzeError):
        tietze_trs(MON, RemoveCell("A", bound=200))
    with pytest.raises(TietzeError):
        tietze_trs(MON, AddRule(MON.rules["alpha"], "X", definition=parse_zigzag(MON, "id(e)")))


def test_tietze_define_and_remove():
    square_rule = Rule("sq", t("m(m(e,x1),e)"), t("x1"))
    d = parse_zigzag(MON, "m(lambda(x1),e) ; rho(x1)")
    T = tietze_trs(MON, AddRule(square_rule, "Sq", definition=d))
    assert "sq" in T.rules and "Sq" in T.cells
    back = tietze_trs(T, RemoveRule("sq", "Sq"))
    assert set(back.rules) == set(MON.rules)
    assert len(back.transcript) == 2


def test_tietze_redundant_cell():
    E = MON.cells["E"]
    T = tietze_trs(MON, AddCell(type(E)("E2", E.target, E.source)))
    U = tietze_trs(T, RemoveCell("E2"))
    assert sorted(U.cells) == sorted(MON.cells)


def test_smon_to_smon_prime_replay():
    S, P = builtin("smon"), builtin("smon-prime")
    T = tietze_trs(S, AddRule(P.rules["delta"], "G'", cell=P.cells["G'"]))
    for cid in ["H", "J", "F'", "K", "L", "M", "N", "O", "P", "Q", "R"]:
        T = tietze_trs(T, AddCell(P.cells[cid], bound=20_000))
    T = tietze_trs(T, RemoveCell("G", bound=20_000))
    assert sorted(T.cells) == sorted(P.cells)
    assert set(T.rules) == set(P.rules)
    for cid, c in P.cells.items():
        assert T.cells[cid].source == c.source and T.cells[cid].target == c.target
    assert len(T.transcript) == 13


def test_step_terms_need_rule_arity():
    with pytest.raises(ParseError):
        parse_zigzag(MON, "alpha(x1,x2)")
    with pytest.raises(ParseError):
        parse_zigzag(MON, "m(x1,x2)")
