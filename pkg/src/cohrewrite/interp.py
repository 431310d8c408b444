"""Linear interpretations over the positive integers.

Each symbol ``a`` of arity ``n`` is read as ``c0 + c1*x1 + ... + cn*xn``
with ``c0 >= 0`` and ``ci >= 1``.  The interpretation of a term is again a
linear form, so comparing a rule's sides reduces to comparing coefficients.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from .terms import Term, Var


@dataclass(frozen=True)
class LinearForm:
    constant: int
    coefficients: tuple[int, ...]

    def __sub__(self, other: "LinearForm") -> "LinearForm":
        return LinearForm(
            self.constant - other.constant,
            tuple(a - b for a, b in zip(self.coefficients, other.coefficients)),
        )

    def at_ones(self) -> int:
        return self.constant + sum(self.coefficients)

    def evaluate(self, values) -> int:
        return self.constant + sum(c * v for c, v in zip(self.coefficients, values))

    def __str__(self):
        parts = []
        for i, c in enumerate(self.coefficients, 1):
            if c:
                parts.append((c, f"x{i}" if abs(c) == 1 else f"{abs(c)}*x{i}"))
        if self.constant or not parts:
            parts.append((self.constant, str(abs(self.constant))))
        out = ("-" if parts[0][0] < 0 else "") + parts[0][1]
        for c, text in parts[1:]:
            out += (" - " if c < 0 else " + ") + text
        return out


class LinearInterpretation:
    def __init__(self, table: Mapping[str, tuple[int, tuple[int, ...]]]):
        self.table = dict(table)
        for sym, (c0, cs) in self.table.items():
            if c0 < 0:
                raise ValueError(f"{sym}: constant must be non-negative")
            if any(c < 1 for c in cs):
                raise ValueError(f"{sym}: argument coefficients must be at least 1")

    def evaluate(self, t: Term) -> LinearForm:
        n = t.arity
        return self._eval(t, n)

    def _eval(self, t, n):
        if isinstance(t, Var):
            cs = [0] * n
            cs[t.index - 1] = 1
            return LinearForm(0, tuple(cs))
        if t.head not in self.table:
            raise KeyError(f"no interpretation for symbol {t.head}")
        c0, cs = self.table[t.head]
        if len(cs) != len(t.args):
            raise ValueError(f"interpretation of {t.head} has the wrong arity")
        const = c0
        acc = [0] * n
        for c, a in zip(cs, t.args):
            f = self._eval(a, n)
            const += c * f.constant
            for i, v in enumerate(f.coefficients):
                acc[i] += c * v
        return LinearForm(const, tuple(acc))

    def weight(self, t: Term) -> int:
        """Value of ``t`` with every variable set to 1."""
        return self.evaluate(t).at_ones()

    def describe(self) -> dict:
        out = {}
        for sym, (c0, cs) in self.table.items():
            out[sym] = str(LinearForm(c0, tuple(cs)))
        return out


@dataclass(frozen=True)
class RuleMargin:
    rule: str
    lhs: LinearForm
    rhs: LinearForm

    @property
    def difference(self) -> LinearForm:
        return self.lhs - self.rhs

    @property
    def strict(self) -> bool:
        d = self.difference
        return all(c >= 0 for c in d.coefficients) and d.at_ones() > 0

    def to_json(self):
        return {
            "rule": self.rule,
            "lhs": str(self.lhs),
            "rhs": str(self.rhs),
            "difference": str(self.difference),
            "strict": self.strict,
        }


@dataclass
class TerminationReport:
    margins: list

    @property
    def decreasing(self) -> bool:
        return all(m.strict for m in self.margins)

    @property
    def verdict(self) -> str:
        return "Decreasing" if self.decreasing else "NotDecreasing"

    def to_json(self):
        return {"verdict": self.verdict, "rules": [m.to_json() for m in self.margins]}


def check_termination_linear(rules, interpretation: LinearInterpretation) -> TerminationReport:
    """Compare ``[lhs]`` and ``[rhs]`` for every rule."""
    margins = []
    for r in rules:
        margins.append(RuleMargin(r.id, interpretation.evaluate(r.lhs), interpretation.evaluate(r.rhs)))
    return TerminationReport(margins)
