import pytest
from hypothesis import given
from hypothesis import strategies as st

from cohrewrite.interp import LinearForm, LinearInterpretation, check_termination_linear
from cohrewrite.smc import builtin
from cohrewrite.syntax import parse_term
from cohrewrite.terms import enumerate_terms
from cohrewrite.trs import redexes

MON = builtin("mon")
SMALL_TERMS = enumerate_terms(MON.signature, 2, 7)


def test_linear_form_text():
    assert str(LinearForm(0, (4, 2, 1))) == "4*x1 + 2*x2 + x3"
    assert str(LinearForm(2, (1,))) == "x1 + 2"
    assert str(LinearForm(0, (0,))) == "0"
    assert (LinearForm(2, (3,)) - LinearForm(0, (1,))) == LinearForm(2, (2,))


def test_evaluate():
    I = MON.interpretation
    assert I.evaluate(parse_term("m(m(x1,x2),x3)")) == LinearForm(0, (4, 2, 1))
    assert I.weight(parse_term("m(e,e)")) == 3


def test_invalid_interpretations():
    with pytest.raises(ValueError):
        LinearInterpretation({"m": (0, (0, 1))})
    with pytest.raises(ValueError):
        LinearInterpretation({"e": (-1, ())})
    with pytest.raises(KeyError):
        LinearInterpretation({"m": (0, (2, 1))}).evaluate(parse_term("m(e,x1)"))


def test_gamma_is_not_decreasing():
    S = builtin("smon")
    report = check_termination_linear(S.rules.values(), S.interpretation)
    verdicts = {m.rule: m.strict for m in report.margins}
    assert verdicts == {"alpha": True, "lambda": True, "rho": True, "gamma": False}
    assert report.verdict == "NotDecreasing"
    assert report.to_json()["rules"][3]["difference"] == "x1 - x2"


@given(st.sampled_from(SMALL_TERMS))
def test_every_step_decreases_weight(t):
    I = MON.interpretation
    for s in redexes(t, MON.rules.values()):
        assert I.weight(s.source) > I.weight(s.target)
        diff = I.evaluate(s.source) - I.evaluate(s.target)
        assert all(c >= 0 for c in diff.coefficients)
