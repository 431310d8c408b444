"""Zig-zag words, elementary moves and the bounded equivalence search.

A zig-zag is stored as a tuple of :class:`SignedStep`.  The same machinery
serves abstract systems (steps are rule ids) and term systems (steps are
:class:`~cohrewrite.trs.TermRewriteStep` values).

An elementary move takes an unreduced word ``u·w·v`` and replaces the
segment ``w`` by ``r`` where ``(w, r)`` is licensed by a coherence cell;
both sides are then compared after reduction.  Recording the unreduced word
keeps moves checkable even when the segment partially cancels against its
neighbours.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Hashable, Iterable, NamedTuple, Protocol, Sequence


class SignedStep(NamedTuple):
    rule: Hashable
    sign: int  # +1 forward, -1 backward

    @property
    def forward(self) -> bool:
        return self.sign > 0

    def inverse(self) -> "SignedStep":
        return SignedStep(self.rule, -self.sign)

    def __str__(self):
        return f"{self.rule}" if self.sign > 0 else f"{self.rule}^-"


def fwd(rule) -> SignedStep:
    return SignedStep(rule, 1)


def bwd(rule) -> SignedStep:
    return SignedStep(rule, -1)


def inverse_word(w: Sequence[SignedStep]) -> tuple[SignedStep, ...]:
    return tuple(SignedStep(s.rule, -s.sign) for s in reversed(w))


def reduce_word(w: Sequence[SignedStep]) -> tuple[SignedStep, ...]:
    """Cancel adjacent ``a a^-`` and ``a^- a`` pairs until none remain."""
    out: list[SignedStep] = []
    for s in w:
        if out and out[-1].rule == s.rule and out[-1].sign == -s.sign:
            out.pop()
        else:
            out.append(s)
    return tuple(out)


def is_reduced(w: Sequence[SignedStep]) -> bool:
    return all(
        not (a.rule == b.rule and a.sign == -b.sign) for a, b in zip(w, w[1:])
    )


def word_str(w: Sequence[SignedStep]) -> str:
    return " ; ".join(str(s) for s in w) if w else "id"


@dataclass(frozen=True)
class Move:
    """Replace ``word[index:index+length]`` by ``replacement``."""

    cell: Hashable
    word: tuple
    index: int
    length: int
    replacement: tuple
    before: tuple = field(init=False, compare=False, repr=False)
    after: tuple = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "before", reduce_word(self.word))
        rewritten = self.word[: self.index] + self.replacement + self.word[self.index + self.length :]
        object.__setattr__(self, "after", reduce_word(rewritten))

    @property
    def segment(self) -> tuple:
        return self.word[self.index : self.index + self.length]

    def inverse(self) -> "Move":
        rewritten = self.word[: self.index] + self.replacement + self.word[self.index + self.length :]
        return Move(self.cell, rewritten, self.index, len(self.replacement), self.segment)

    def embed(self, prefix: Sequence = (), suffix: Sequence = ()) -> "Move":
        prefix = tuple(prefix)
        return Move(
            self.cell,
            prefix + self.word + tuple(suffix),
            self.index + len(prefix),
            self.length,
            self.replacement,
        )

    def to_json(self) -> dict:
        return {
            "cell": str(self.cell),
            "at": self.index,
            "replace": [str(s) for s in self.segment],
            "by": [str(s) for s in self.replacement],
            "result": [str(s) for s in self.after],
        }


class MoveSystem(Protocol):
    def neighbours(self, word: tuple) -> Iterable[Move]: ...

    def licensed(self, move: Move) -> bool: ...


def embed_chain(chain: Sequence[Move], prefix: Sequence = (), suffix: Sequence = ()) -> list[Move]:
    return [m.embed(prefix, suffix) for m in chain]


def invert_chain(chain: Sequence[Move]) -> list[Move]:
    return [m.inverse() for m in reversed(chain)]


@dataclass
class CohSearchOutcome:
    """Result of an equivalence search between two parallel zig-zags.

    ``proven`` with a replayable ``witness`` chain, or not proven within
    ``bound`` explored zig-zags.  ``exhausted`` records that the search ran
    out of moves before reaching the bound; that is evidence, not proof, of
    inequivalence because the engine never inserts cancelling pairs on its
    own.
    """

    proven: bool
    source: tuple
    target: tuple
    witness: tuple = ()
    bound: int | None = None
    explored: int = 0
    exhausted: bool = False
    note: str = ""

    @property
    def verdict(self) -> str:
        return "Proven" if self.proven else "NotProvenWithinBound"

    def __bool__(self):
        return self.proven

    def to_json(self) -> dict:
        out = {"verdict": self.verdict, "explored": self.explored}
        if self.proven:
            out["witness"] = [m.to_json() for m in self.witness]
        else:
            out["bound"] = self.bound
            out["exhausted"] = self.exhausted
        if self.note:
            out["note"] = self.note
        return out


def proven(p, q, chain, note="") -> CohSearchOutcome:
    return CohSearchOutcome(True, tuple(p), tuple(q), tuple(chain), note=note)


def chain_is_valid(p, q, chain: Sequence[Move], system: MoveSystem) -> bool:
    """Replay a witness: consecutive, licensed, from ``p`` to ``q``."""
    cur = reduce_word(p)
    for m in chain:
        if m.before != cur or not system.licensed(m):
            return False
        cur = m.after
    return cur == reduce_word(q)


def search(
    p: Sequence,
    q: Sequence,
    system: MoveSystem,
    bound: int = 10_000,
    max_length: int | None = None,
) -> CohSearchOutcome:
    """Bidirectional breadth-first search for a move chain from ``p`` to ``q``.

    At most ``bound`` distinct reduced zig-zags are explored; words longer
    than ``max_length`` are not entered.
    """
    p = reduce_word(p)
    q = reduce_word(q)
    if p == q:
        return proven(p, q, ())
    seen = [{p: None}, {q: None}]
    frontier = [deque([p]), deque([q])]
    explored = 2
    while frontier[0] or frontier[1]:
        # expand the smaller live frontier; an exhausted side still meets
        if not frontier[1] or (frontier[0] and len(frontier[0]) <= len(frontier[1])):
            side = 0
        else:
            side = 1
        mine, other = seen[side], seen[1 - side]
        level = frontier[side]
        frontier[side] = deque()
        for node in level:
            for mv in system.neighbours(node):
                nxt = mv.after
                if nxt in mine:
                    continue
                if max_length is not None and len(nxt) > max_length:
                    continue
                mine[nxt] = mv
                if nxt in other:
                    witness = _trace(seen[0], nxt) + invert_chain(_trace(seen[1], nxt))
                    out = proven(p, q, witness)
                    out.explored = explored
                    return out
                explored += 1
                if explored > bound:
                    return CohSearchOutcome(False, p, q, bound=bound, explored=explored)
                frontier[side].append(nxt)
    return CohSearchOutcome(False, p, q, bound=bound, explored=explored, exhausted=True)


def _trace(parents: dict, node) -> list[Move]:
    chain = []
    while parents[node] is not None:
        mv = parents[node]
        chain.append(mv)
        node = mv.before
    chain.reverse()
    return chain


def relator_pairs(source: Sequence[SignedStep], target: Sequence[SignedStep]):
    """Segment replacements licensed by a cell ``source => target``.

    Every cyclic segment ``w`` of the boundary loop (or of its inverse) may be
    replaced by the inverse of the rest of the loop.  This covers replacing
    the source by the target, the reverse, and partial overlaps where part of
    the boundary already cancelled against the surrounding word.
    """
    loop = tuple(source) + inverse_word(target)
    out = []
    seen = set()
    for lp in (loop, inverse_word(loop)):
        n = len(lp)
        for i in range(n):
            rot = lp[i:] + lp[:i]
            for k in range(1, n + 1):
                w, rest = rot[:k], rot[k:]
                r = inverse_word(rest)
                if w == r or (w, r) in seen:
                    continue
                seen.add((w, r))
                out.append((w, r))
    return out
