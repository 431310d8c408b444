"""The ten acceptance criteria, each at its stated tolerance and time limit.

A pass/fail line per criterion is printed in the terminal summary.
"""
import itertools
import random

import pytest

from cohrewrite.ars import (
    NormalizationChoice,
    check_w_confluence_by_newman,
    church_rosser_transport,
    w_zigzags,
)
from cohrewrite.cli import cmd_check, cmd_critical_pairs, load
from cohrewrite.interp import LinearForm
from cohrewrite.search import chain_is_valid, fwd, is_reduced, reduce_word
from cohrewrite.smc import (
    all_color_bijections,
    affine_2cell,
    bijections_between,
    build_p_double_prime,
    builtin,
    check_pruned_system,
    colors,
    decide_equal_smc,
    realized_bijections,
    s_compose_1cells,
    term_colors,
    underlying_bijection,
)
from cohrewrite.dsl import parse_zigzag
from cohrewrite.syntax import parse_term
from cohrewrite.terms import (
    App,
    Bicontext,
    Substitution,
    Var,
    bicontext_apply,
    canonical_renaming,
    compose_bicontexts,
    compose_subst,
    print_term,
    substitute,
    term_vars,
)
from cohrewrite.trs import check_local_confluence_coherent

from strategies import completed_ars, random_context, random_subst, random_term, random_word


def comb(vs, n):
    """Right comb ``m(x_a, m(x_b, ...))`` of the listed variables, or ``e``."""
    if not vs:
        return App("e", (), n)
    t = Var(vs[-1], n)
    for v in reversed(vs[:-1]):
        t = App("m", (Var(v, n), t), n)
    return t


@pytest.mark.criterion(1, "critical pairs of Mon: exactly the five sources (< 1 s)")
def test_mon_critical_pairs(stopwatch):
    with stopwatch:
        T, text = load("mon")
        rep = cmd_critical_pairs(T, text)
    expected = [
        "m(m(m(x1,x2),x3),x4)",
        "m(m(e,x1),x2)",
        "m(m(x1,e),x2)",
        "m(m(x1,x2),e)",
        "m(e,e)",
    ]
    want = sorted(print_canon(parse_term(s)) for s in expected)
    got = sorted(print_canon(parse_term(p["source"])) for p in rep.checks[0]["pairs"])
    assert got == want
    assert stopwatch.elapsed < 1


def print_canon(t):
    return print_term(canonical_renaming(t)[0])


@pytest.mark.criterion(2, "termination certificate for Mon with exact margins (< 1 s)")
def test_mon_termination_margins(stopwatch):
    with stopwatch:
        T = builtin("mon")
        cert = T.termination("W")
    margins = {m.rule: (m.lhs, m.rhs) for m in cert.margins}
    assert margins["alpha"] == (LinearForm(0, (4, 2, 1)), LinearForm(0, (2, 2, 1)))
    assert margins["lambda"] == (LinearForm(2, (1,)), LinearForm(0, (1,)))
    assert margins["rho"] == (LinearForm(1, (2,)), LinearForm(0, (1,)))
    assert cert.decreasing
    assert stopwatch.elapsed < 1


@pytest.mark.criterion(3, "check mon --subset W: W-convergent and W-coherent via A-E (bound 1000, < 5 s)")
def test_mon_coherent_convergence(stopwatch):
    with stopwatch:
        T, text = load("mon")
        rep = cmd_check(T, text, "W", bound=1_000)
    status = {c["check"]: c["status"] for c in rep.checks}
    assert status == {
        "termination": "pass",
        "local-confluence": "pass",
        "confluence": "pass",
        "coherence": "pass",
    }
    records = next(c for c in rep.checks if c["check"] == "local-confluence")["report"]["records"]
    assert len(records) == 5
    assert sorted(r["cell"] for r in records) == ["A", "B", "C", "D", "E"]
    assert "W-convergent; W-coherent" in rep.lines
    assert rep.exit_code == 0
    assert stopwatch.elapsed < 5


@pytest.mark.criterion(4, "SMon' local confluence: every critical pair filled by a declared cell (< 30 s)")
def test_smon_prime_local_confluence(stopwatch):
    T = builtin("smon-prime")
    with stopwatch:
        report = check_local_confluence_coherent(T)
    assert len(report.records) == 18
    assert all(r.proven for r in report.records)
    for cp, r in zip(report.pairs, report.records):
        left = (fwd(cp.left),) + tuple(r.join_left)
        right = (fwd(cp.right),) + tuple(r.join_right)
        assert chain_is_valid(left, right, r.witness, T.moves)
        assert r.cell in T.cells
    # the involution cell F of gamma fills no critical pair; every other cell fills exactly one
    assert sorted(r.cell for r in report.records) == sorted(set(T.cells) - {"F"})
    assert stopwatch.elapsed < 30


@pytest.mark.criterion(5, "gamma(x1,x1) differs from the identity: transposition vs identity (< 1 s)")
def test_gamma_non_coherence(stopwatch):
    with stopwatch:
        T = builtin("smon")
        p = parse_zigzag(T, "gamma(x1,x1)")
        q = parse_zigzag(T, "id(m(x1,x1))")
        d = decide_equal_smc(p, q, T)
    assert d.verdict == "NotEqual"
    assert d.left.mapping == (1, 0) and d.left.cycles() == "(0 1)"
    assert d.right.is_identity() and d.right.cycles() == "()"
    assert stopwatch.elapsed < 1


@pytest.mark.criterion(6, "affine coherence: zig-zags of length <= 6 agree with affine_2cell (< 60 s)")
def test_affine_coherence(stopwatch):
    T = builtin("smon-prime")
    discrepancies = []
    pairs = 0
    with stopwatch:
        for n in range(4):
            nfs = [comb(list(p), n) for k in range(n + 1) for p in itertools.permutations(range(1, n + 1), k)]
            for t, u in itertools.product(nfs, nfs):
                if sorted(term_vars(t)) != sorted(term_vars(u)):
                    continue
                pairs += 1
                realized = bijections_between(t, u, 6, T)
                cell = affine_2cell(t, u, T)
                ok = (
                    len(realized) == 1
                    and cell.bijection in realized
                    and cell.path.start == t
                    and cell.path.end == u
                    and underlying_bijection(cell.path) == cell.bijection
                )
                if not ok:
                    discrepancies.append((t, u, realized))
    assert pairs == 62
    assert discrepancies == []
    assert stopwatch.elapsed < 60


@pytest.mark.criterion(7, "realized bijections equal all color-preserving bijections (< 120 s)")
def test_theory_s_oracle(stopwatch):
    T = builtin("smon-prime")
    mismatches = []
    pairs = 0
    with stopwatch:
        for n in range(4):
            groups: dict = {}
            for k in range(5):
                for w in itertools.product(range(1, n + 1), repeat=k):
                    groups.setdefault(tuple(sorted(w)), []).append(comb(list(w), n))
            for group in groups.values():
                for t in group:
                    realized = realized_bijections(t, T, max_size=t.size)
                    for u in group:
                        pairs += 1
                        oracle = set(all_color_bijections(term_colors(t), term_colors(u)))
                        if realized.get(u, set()) != oracle:
                            mismatches.append((t, u))
    assert pairs > 0
    assert mismatches == []
    assert stopwatch.elapsed < 120


@pytest.mark.criterion(8, "color-list composition golden value (< 1 s)")
def test_s_composition_golden(stopwatch):
    with stopwatch:
        fs = [colors(4, 1, 1), colors(4, 3, 3, 2), colors(4, 2, 0, 3)]
        got = s_compose_1cells(fs, colors(3, 2, 0, 2))
    assert list(got.colors) == [2, 0, 3, 1, 1, 2, 0, 3]
    assert got.source_arity == 4
    assert stopwatch.elapsed < 1


def _random_cancellation(word, rng):
    w = list(word)
    while True:
        spots = [i for i in range(len(w) - 1) if w[i].rule == w[i + 1].rule and w[i].sign == -w[i + 1].sign]
        if not spots:
            return tuple(w)
        i = rng.choice(spots)
        del w[i : i + 2]


@pytest.mark.criterion(9, "property suites: reduction, coherent Newman, transport, action laws (< 120 s)")
def test_property_suites(stopwatch):
    rng = random.Random(20261015)
    failures = []
    with stopwatch:
        for _ in range(10_000):
            w = random_word(rng)
            r = reduce_word(w)
            if not is_reduced(r) or _random_cancellation(w, rng) != r or reduce_word(r) != r:
                failures.append(("reduce", w))

        transports = 0
        for _ in range(500):
            A, W = completed_ars(rng)
            verdict = check_w_confluence_by_newman(A, W)
            if not verdict.confluent:
                failures.append(("newman", A))
                continue
            for rec in verdict.local.records:
                left = (fwd(rec.left),) + tuple(rec.join_left)
                right = (fwd(rec.right),) + tuple(rec.join_right)
                if not chain_is_valid(left, right, rec.witness, A.moves):
                    failures.append(("filling", rec))
            norm = NormalizationChoice.canonical(A, W)
            for x in A.objects:
                for p in w_zigzags(A, W, x, 4):
                    lhs = p.steps + norm.path(p.end).steps
                    rhs = norm.path(p.start).steps
                    out = church_rosser_transport(A, W, norm, p, local=verdict.local)
                    transports += 1
                    if not (out.proven and chain_is_valid(lhs, rhs, out.witness, A.moves)):
                        failures.append(("transport", p))

        for _ in range(10_000):
            k, n, m = rng.randint(0, 3), rng.randint(0, 3), rng.randint(0, 3)
            t = random_term(rng, k)
            f, g = random_subst(rng, n, k), random_subst(rng, m, n)
            if substitute(substitute(t, f), g) != substitute(t, compose_subst(g, f)):
                failures.append(("substitution", t, f, g))
            if substitute(t, Substitution.identity(k)) != t:
                failures.append(("identity", t))
            first = Bicontext(random_context(rng, n), f)
            second = Bicontext(random_context(rng, m), g)
            lhs = bicontext_apply(second, bicontext_apply(first, t))
            if lhs != bicontext_apply(compose_bicontexts(first, second), t):
                failures.append(("bicontext", t, first, second))
    assert transports > 0
    assert failures == []
    assert stopwatch.elapsed < 120


@pytest.mark.criterion(10, "P'' for n = 3, bound 7: acyclic and locally confluent on affine objects (< 60 s)")
def test_p_double_prime(stopwatch):
    with stopwatch:
        P = build_p_double_prime(3, 7)
        report = check_pruned_system(P)
    assert report.cycle is None
    assert report.local.records
    assert all(r.proven for r in report.local.records)
    assert report.passed
    assert stopwatch.elapsed < 60
