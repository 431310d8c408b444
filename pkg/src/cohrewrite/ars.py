"""Abstract rewriting systems with coherence cells.

An :class:`Ars2` has objects, rules between objects and cells relating
parallel zig-zags.  Everything is finite and immutable; iteration follows
declaration order so that normal forms and witnesses are reproducible.
"""
from __future__ import annotations

from collections import defaultdict, deque
from dataclasses import dataclass, field
from typing import Callable, Hashable, Iterable, Mapping, Sequence

from .search import (
    CohSearchOutcome,
    Move,
    SignedStep,
    chain_is_valid,
    embed_chain,
    fwd,
    inverse_word,
    invert_chain,
    proven,
    reduce_word,
    relator_pairs,
    search,
    word_str,
)

RuleSubset = frozenset


class ContractError(ValueError):
    pass


class TietzeError(ValueError):
    pass


class RigidityNotCertified(ValueError):
    pass


class NonTerminating(ValueError):
    pass


@dataclass(frozen=True)
class ZigZag:
    start: Hashable
    steps: tuple
    end: Hashable

    def __len__(self):
        return len(self.steps)

    def __add__(self, other: "ZigZag") -> "ZigZag":
        if self.end != other.start:
            raise ContractError("zig-zags do not compose")
        return ZigZag(self.start, self.steps + other.steps, other.end)

    def inverse(self) -> "ZigZag":
        return ZigZag(self.end, inverse_word(self.steps), self.start)

    def is_path(self) -> bool:
        return all(s.sign > 0 for s in self.steps)

    def __str__(self):
        return word_str(self.steps)


@dataclass(frozen=True)
class CoherenceCell:
    id: Hashable
    source: ZigZag
    target: ZigZag

    def is_path_shaped(self) -> bool:
        return self.source.is_path() and self.target.is_path()


class Ars2:
    def __init__(
        self,
        objects: Iterable,
        rules: Iterable[tuple] | Mapping,
        cells: Iterable[CoherenceCell] = (),
        truncated: bool = False,
    ):
        self.objects = tuple(dict.fromkeys(objects))
        self._objset = set(self.objects)
        if isinstance(rules, Mapping):
            rules = [(k, s, t) for k, (s, t) in rules.items()]
        self.rules: dict = {}
        self.out: dict = defaultdict(list)
        self.into: dict = defaultdict(list)
        for rid, s, t in rules:
            if rid in self.rules:
                raise ContractError(f"duplicate rule {rid}")
            if s not in self._objset or t not in self._objset:
                raise ContractError(f"rule {rid} has an undeclared endpoint")
            self.rules[rid] = (s, t)
            self.out[s].append(rid)
            self.into[t].append(rid)
        self.rule_order = {r: i for i, r in enumerate(self.rules)}
        self.cells: dict = {}
        for c in cells:
            if c.id in self.cells:
                raise ContractError(f"duplicate cell {c.id}")
            self._check_zigzag(c.source)
            self._check_zigzag(c.target)
            if c.source.start != c.target.start or c.source.end != c.target.end:
                raise ContractError(f"cell {c.id} is not parallel")
            self.cells[c.id] = c
        self.truncated = truncated
        self._moves = None

    # -- basic structure ----------------------------------------------------

    def src(self, s: SignedStep):
        a, b = self.rules[s.rule]
        return a if s.sign > 0 else b

    def tgt(self, s: SignedStep):
        a, b = self.rules[s.rule]
        return b if s.sign > 0 else a

    def zigzag(self, start, steps: Sequence) -> ZigZag:
        steps = tuple(s if isinstance(s, SignedStep) else fwd(s) for s in steps)
        cur = start
        for s in steps:
            if s.rule not in self.rules:
                raise ContractError(f"unknown rule {s.rule}")
            if self.src(s) != cur:
                raise ContractError(f"step {s} does not start at {cur}")
            cur = self.tgt(s)
        return ZigZag(start, steps, cur)

    def path(self, *rule_ids) -> ZigZag:
        if not rule_ids:
            raise ContractError("use zigzag(start, ()) for identities")
        return self.zigzag(self.rules[rule_ids[0]][0], [fwd(r) for r in rule_ids])

    def identity(self, x) -> ZigZag:
        return ZigZag(x, (), x)

    def _check_zigzag(self, z: ZigZag):
        if z.start not in self._objset:
            raise ContractError(f"unknown object {z.start}")
        if self.zigzag(z.start, z.steps).end != z.end:
            raise ContractError("zig-zag endpoint mismatch")

    def composable(self, word: Sequence[SignedStep]) -> bool:
        for a, b in zip(word, word[1:]):
            if a.rule not in self.rules or b.rule not in self.rules:
                return False
            if self.tgt(a) != self.src(b):
                return False
        return all(s.rule in self.rules for s in word)

    @property
    def moves(self) -> "ArsMoves":
        if self._moves is None:
            self._moves = ArsMoves(self)
        return self._moves

    def subset(self, W) -> frozenset:
        return as_subset(self, W)

    def __repr__(self):
        return f"Ars2({len(self.objects)} objects, {len(self.rules)} rules, {len(self.cells)} cells)"


def as_subset(A: Ars2, W) -> frozenset:
    """Normalise ``W``: ``None`` means every rule, a callable is a filter."""
    if W is None:
        return frozenset(A.rules)
    if callable(W) and not isinstance(W, (set, frozenset)):
        return frozenset(r for r in A.rules if W(r))
    W = frozenset(W)
    unknown = [r for r in W if r not in A.rules]
    if unknown:
        raise ContractError(f"subset mentions unknown rules {unknown[:3]}")
    return W


class ArsMoves:
    """Cell-licensed segment replacements in an :class:`Ars2`."""

    def __init__(self, A: Ars2):
        self.A = A
        self.index: dict = defaultdict(list)
        self.pairs: dict = {}
        self.longest = 0
        for c in A.cells.values():
            pairs = relator_pairs(c.source.steps, c.target.steps)
            self.pairs[c.id] = set(pairs)
            for w, r in pairs:
                self.index[w[0]].append((c.id, w, r))
            self.longest = max(self.longest, len(c.source) + len(c.target))

    def neighbours(self, word):
        for j, s in enumerate(word):
            for cid, w, r in self.index.get(s, ()):
                k = len(w)
                if word[j : j + k] == w:
                    yield Move(cid, word, j, k, r)

    def licensed(self, m: Move) -> bool:
        if (m.segment, m.replacement) not in self.pairs.get(m.cell, ()):
            return False
        rewritten = m.word[: m.index] + m.replacement + m.word[m.index + m.length :]
        return self.A.composable(m.word) and self.A.composable(rewritten)


# -- reduction -------------------------------------------------------------


def reduce_zigzag(p: ZigZag) -> ZigZag:
    return ZigZag(p.start, reduce_word(p.steps), p.end)


# -- termination and normal forms -------------------------------------------


def is_w_terminating(A: Ars2, W=None) -> bool:
    return find_w_cycle(A, W) is None


def find_w_cycle(A: Ars2, W=None):
    """A cycle of W-rules as a list of rule ids, or ``None`` if acyclic."""
    W = as_subset(A, W)
    colour = {}
    for root in A.objects:
        if root in colour:
            continue
        colour[root] = 1
        stack = [(root, iter([r for r in A.out[root] if r in W]))]
        via = {root: None}
        while stack:
            x, it = stack[-1]
            r = next(it, None)
            if r is None:
                colour[x] = 2
                stack.pop()
                continue
            y = A.rules[r][1]
            c = colour.get(y)
            if c == 1:
                cycle = [r]
                z = x
                while z != y:
                    rr = via[z]
                    cycle.append(rr)
                    z = A.rules[rr][0]
                cycle.reverse()
                return cycle
            if c is None:
                colour[y] = 1
                via[y] = r
                stack.append((y, iter([q for q in A.out[y] if q in W])))
    return None


def first_w_rule(A: Ars2, W: frozenset, x):
    for r in A.out[x]:
        if r in W:
            return r
    return None


def normalize(A: Ars2, W, x, max_steps: int | None = None):
    """Follow the least-indexed W-rule until none applies.

    Returns ``(normal form, path)``.  Raises :class:`NonTerminating` when an
    object repeats and ``ValueError`` when ``max_steps`` runs out.
    """
    W = as_subset(A, W)
    steps = []
    seen = {x}
    cur = x
    while True:
        r = first_w_rule(A, W, cur)
        if r is None:
            return cur, ZigZag(x, tuple(steps), cur)
        if max_steps is not None and len(steps) >= max_steps:
            raise ValueError(f"no normal form within {max_steps} steps")
        steps.append(fwd(r))
        cur = A.rules[r][1]
        if cur in seen and max_steps is None:
            raise NonTerminating(f"W-rules loop through {cur}")
        seen.add(cur)


def normal_forms(A: Ars2, W=None) -> list:
    W = as_subset(A, W)
    return [x for x in A.objects if first_w_rule(A, W, x) is None]


class NormalizationChoice:
    """For each object a forward W-path to a W-normal form."""

    def __init__(self, paths: Mapping):
        self.paths = dict(paths)

    @classmethod
    def canonical(cls, A: Ars2, W=None) -> "NormalizationChoice":
        W = as_subset(A, W)
        if not is_w_terminating(A, W):
            raise NonTerminating("normalization needs W-termination")
        memo: dict = {}
        for x in A.objects:
            todo = []
            cur = x
            while cur not in memo:
                r = first_w_rule(A, W, cur)
                if r is None:
                    memo[cur] = ZigZag(cur, (), cur)
                    break
                todo.append((cur, r))
                cur = A.rules[r][1]
            for y, r in reversed(todo):
                rest = memo[A.rules[r][1]]
                memo[y] = ZigZag(y, (fwd(r),) + rest.steps, rest.end)
        return cls(memo)

    def path(self, x) -> ZigZag:
        return self.paths[x]

    def normal_form(self, x):
        return self.paths[x].end


# -- local confluence ------------------------------------------------------


def local_w_branchings(A: Ars2, W=None) -> list[tuple]:
    """Pairs ``(a1, a2)`` of distinct coinitial W-rules, in declaration order."""
    W = as_subset(A, W)
    out = []
    for x in A.objects:
        rs = [r for r in A.out[x] if r in W]
        for i, a in enumerate(rs):
            for b in rs[i + 1 :]:
                out.append((a, b))
    return out


@dataclass
class BranchingRecord:
    source: Hashable
    left: Hashable
    right: Hashable
    verdict: str  # Proven | NotProvenWithinBound | NotJoinable
    join_left: tuple = ()
    join_right: tuple = ()
    witness: tuple = ()
    cell: Hashable = None

    @property
    def proven(self) -> bool:
        return self.verdict == "Proven"

    def to_json(self) -> dict:
        out = {
            "source": str(self.source),
            "left": str(self.left),
            "right": str(self.right),
            "verdict": self.verdict,
        }
        if self.proven:
            out["join"] = [word_str(self.join_left), word_str(self.join_right)]
            out["witness"] = [m.to_json() for m in self.witness]
            if self.cell is not None:
                out["cell"] = str(self.cell)
        return out


@dataclass
class LocalConfluenceReport:
    records: list = field(default_factory=list)

    @property
    def confluent(self) -> bool:
        return all(r.proven for r in self.records)

    @property
    def refuted(self) -> bool:
        return any(r.verdict == "NotJoinable" for r in self.records)

    def unproven(self) -> list:
        return [r for r in self.records if not r.proven]

    def to_json(self) -> dict:
        return {
            "branchings": len(self.records),
            "filled": sum(r.proven for r in self.records),
            "records": [r.to_json() for r in self.records],
        }


def _w_reachable(A, W, x) -> set:
    seen = {x}
    todo = [x]
    while todo:
        y = todo.pop()
        for r in A.out[y]:
            if r in W:
                z = A.rules[r][1]
                if z not in seen:
                    seen.add(z)
                    todo.append(z)
    return seen


def _w_paths(A, W, x, depth) -> dict:
    """Forward W-paths from ``x`` of length <= depth, grouped by endpoint."""
    out: dict = defaultdict(list)
    out[x].append(())
    layer = [(x, ())]
    for _ in range(depth):
        nxt = []
        for y, p in layer:
            for r in A.out[y]:
                if r in W:
                    z = A.rules[r][1]
                    q = p + (fwd(r),)
                    out[z].append(q)
                    nxt.append((z, q))
        layer = nxt
    return out


def direct_filling(A: Ars2, W: frozenset, a1, a2):
    """A single cell move joining ``a1·q1`` and ``a2·q2`` with W-paths q1, q2."""
    s1, s2 = fwd(a1), fwd(a2)
    for cid, w, r in A.moves.index.get(s1, ()):
        if not r or r[0] != s2:
            continue
        if all(s.sign > 0 and s.rule in W for s in w + r):
            return cid, w[1:], r[1:], (Move(cid, w, 0, len(w), r),)
    return None


def check_local_w_confluence(
    A: Ars2,
    W=None,
    bound: int = 10_000,
    cospan_depth: int = 3,
    max_candidates: int = 24,
) -> LocalConfluenceReport:
    W = as_subset(A, W)
    terminating = is_w_terminating(A, W)
    norm = NormalizationChoice.canonical(A, W) if terminating else None
    report = LocalConfluenceReport()
    for a1, a2 in local_w_branchings(A, W):
        x = A.rules[a1][0]
        direct = direct_filling(A, W, a1, a2)
        if direct:
            cid, q1, q2, chain = direct
            report.records.append(BranchingRecord(x, a1, a2, "Proven", q1, q2, chain, cid))
            continue
        y1, y2 = A.rules[a1][1], A.rules[a2][1]
        if not (_w_reachable(A, W, y1) & _w_reachable(A, W, y2)):
            report.records.append(BranchingRecord(x, a1, a2, "NotJoinable"))
            continue
        candidates = []
        if norm is not None and norm.normal_form(y1) == norm.normal_form(y2):
            candidates.append((norm.path(y1).steps, norm.path(y2).steps))
        from1 = _w_paths(A, W, y1, cospan_depth)
        from2 = _w_paths(A, W, y2, cospan_depth)
        extra = [
            (q1, q2)
            for z in from1
            if z in from2
            for q1 in from1[z]
            for q2 in from2[z]
        ]
        extra.sort(key=lambda c: len(c[0]) + len(c[1]))
        for c in extra:
            if c not in candidates:
                candidates.append(c)
        record = BranchingRecord(x, a1, a2, "NotProvenWithinBound")
        for q1, q2 in candidates[:max_candidates]:
            left = (fwd(a1),) + q1
            right = (fwd(a2),) + q2
            out = search(left, right, A.moves, bound, _length_cap(A, left, right))
            if out.proven:
                record = BranchingRecord(x, a1, a2, "Proven", q1, q2, out.witness)
                break
        report.records.append(record)
    return report


def _length_cap(A: Ars2, p, q) -> int:
    return max(len(p), len(q)) + max(A.moves.longest, 2)


def cohto_equivalent(
    A: Ars2, p: ZigZag, q: ZigZag, bound: int = 10_000, max_length: int | None = None
) -> CohSearchOutcome:
    if p.start != q.start or p.end != q.end:
        raise ContractError("zig-zags are not parallel")
    if max_length is None:
        max_length = _length_cap(A, p.steps, q.steps)
    return search(p.steps, q.steps, A.moves, bound, max_length)


@dataclass
class ConfluenceVerdict:
    status: str  # Confluent | NotApplicable | NotConfluent | Undetermined
    reason: str
    terminating: bool
    local: LocalConfluenceReport | None = None

    @property
    def confluent(self) -> bool:
        return self.status == "Confluent"


def check_w_confluence_by_newman(A: Ars2, W=None, bound: int = 10_000) -> ConfluenceVerdict:
    W = as_subset(A, W)
    if not is_w_terminating(A, W):
        return ConfluenceVerdict("NotApplicable", "termination failed: W-rules form a cycle", False)
    local = check_local_w_confluence(A, W, bound)
    if local.confluent:
        return ConfluenceVerdict(
            "Confluent",
            "W-terminating and every local W-branching is filled, so W-confluent by Newman's lemma",
            True,
            local,
        )
    if local.refuted:
        return ConfluenceVerdict("NotConfluent", "a local W-branching has no common reduct", True, local)
    return ConfluenceVerdict("Undetermined", "some local W-branchings are unproven within the bound", True, local)


# -- coherent Newman proofs --------------------------------------------------


class NewmanProver:
    """Builds move chains between cofinal W-paths to a normal form.

    Works by well-founded induction along W-reduction: two paths out of ``x`` either start with the same rule, or their first
    steps form a local branching whose filling is spliced in and the
    remaining obligations are discharged at the two successors.
    """

    def __init__(self, A: Ars2, W, local: LocalConfluenceReport, norm: NormalizationChoice):
        self.A = A
        self.W = as_subset(A, W)
        self.norm = norm
        self.fill = {}
        for rec in local.records:
            if rec.proven:
                self.fill[(rec.left, rec.right)] = (rec.join_left, rec.join_right, list(rec.witness))
                self.fill[(rec.right, rec.left)] = (
                    rec.join_right,
                    rec.join_left,
                    invert_chain(rec.witness),
                )
        self.memo: dict = {}

    def prove(self, p1: tuple, p2: tuple) -> list[Move]:
        key = (p1, p2)
        if key in self.memo:
            return self.memo[key]
        out = self._prove(p1, p2)
        self.memo[key] = out
        return out

    def _prove(self, p1, p2):
        if p1 == p2:
            return []
        if not p1 or not p2:
            raise ContractError("paths to a normal form cannot differ when one is empty")
        a1, a2 = p1[0], p2[0]
        if a1 == a2:
            return embed_chain(self.prove(p1[1:], p2[1:]), (a1,))
        q1, q2, chain = self.fill[(a1.rule, a2.rule)]
        z = self.A.tgt(q1[-1]) if q1 else self.A.tgt(a1)
        nz = self.norm.path(z).steps
        c1 = embed_chain(self.prove(p1[1:], q1 + nz), (a1,))
        c2 = embed_chain(chain, (), nz)
        c3 = embed_chain(self.prove(q2 + nz, p2[1:]), (a2,))
        return c1 + c2 + c3

    def transport(self, p: ZigZag) -> list[Move]:
        """Chain from ``p · n_y`` to ``n_x`` for a W-zig-zag ``p : x ~> y``."""
        A = self.A
        objs = [p.start]
        for s in p.steps:
            objs.append(A.tgt(s))
        chain: list[Move] = []
        for i in range(len(p.steps), 0, -1):
            s = p.steps[i - 1]
            prefix = p.steps[: i - 1]
            before, after = objs[i - 1], objs[i]
            if s.sign > 0:
                sub = self.prove((s,) + self.norm.path(after).steps, self.norm.path(before).steps)
                chain += embed_chain(sub, prefix)
            else:
                sub = self.prove(self.norm.path(after).steps, (s.inverse(),) + self.norm.path(before).steps)
                chain += embed_chain(sub, prefix + (s,))
        return chain


def church_rosser_transport(
    A: Ars2,
    W,
    n: NormalizationChoice,
    p: ZigZag,
    bound: int = 10_000,
    local: LocalConfluenceReport | None = None,
) -> CohSearchOutcome:
    """Prove ``p · n_y ⇛ n_x`` for a W-zig-zag ``p : x ~> y``."""
    W = as_subset(A, W)
    if any(s.rule not in W for s in p.steps):
        raise ContractError("transport needs a zig-zag of W-rules")
    x, y = p.start, p.end
    lhs = p.steps + n.path(y).steps
    rhs = n.path(x).steps
    if n.normal_form(x) != n.normal_form(y):
        return CohSearchOutcome(
            False, reduce_word(lhs), rhs,
            note=f"counterexample: {x} and {y} have distinct normal forms "
            f"{n.normal_form(x)} and {n.normal_form(y)}",
        )
    if local is None:
        local = check_local_w_confluence(A, W, bound)
    if local.confluent:
        chain = NewmanProver(A, W, local, n).transport(p)
        return proven(reduce_word(lhs), rhs, chain)
    return search(lhs, rhs, A.moves, bound, _length_cap(A, lhs, rhs))


# -- coherence -------------------------------------------------------------


@dataclass
class CoherenceVerdict:
    status: str  # Coherent | Counterexample | Undetermined
    reason: str
    counterexample: tuple | None = None
    outcome: CohSearchOutcome | None = None

    @property
    def coherent(self) -> bool:
        return self.status == "Coherent"


def w_zigzags(A: Ars2, W, x, max_length: int) -> list[ZigZag]:
    """Reduced zig-zags of W-rules from ``x``, shortest first."""
    W = as_subset(A, W)
    out = [ZigZag(x, (), x)]
    layer = [((), x)]
    for _ in range(max_length):
        nxt = []
        for word, y in layer:
            moves = [(fwd(r), A.rules[r][1]) for r in A.out[y] if r in W]
            moves += [(SignedStep(r, -1), A.rules[r][0]) for r in A.into[y] if r in W]
            for s, z in moves:
                if word and word[-1].rule == s.rule and word[-1].sign == -s.sign:
                    continue
                w2 = word + (s,)
                out.append(ZigZag(x, w2, z))
                nxt.append((w2, z))
        layer = nxt
    return out


def check_w_coherence(
    A: Ars2, W=None, bound: int = 10_000, max_length: int = 4
) -> CoherenceVerdict:
    W = as_subset(A, W)
    if not W:
        return CoherenceVerdict("Coherent", "no W-rules, so every W-zig-zag is an identity")
    newman = check_w_confluence_by_newman(A, W, bound)
    if newman.confluent:
        return CoherenceVerdict(
            "Coherent", "W-convergent, hence W-coherent by the coherent Newman argument"
        )
    refuted = []
    undetermined = None
    for x in A.objects:
        groups: dict = defaultdict(list)
        for z in w_zigzags(A, W, x, max_length):
            groups[z.end].append(z)
        for y, zs in groups.items():
            rep = zs[0]
            for z in zs[1:]:
                out = cohto_equivalent(A, rep, z, bound)
                if out.proven:
                    continue
                if out.exhausted:
                    refuted.append((rep, z, out))
                elif undetermined is None:
                    undetermined = (rep, z, out)
    if refuted:
        # report the simplest pair: shortest, then fewest backward steps
        rep, z, out = min(
            refuted,
            key=lambda c: (
                len(c[0]) + len(c[1]),
                sum(s.sign < 0 for s in c[0].steps + c[1].steps),
            ),
        )
        return CoherenceVerdict(
            "Counterexample", f"no derivation relates {rep} and {z}", (rep, z), out
        )
    if undetermined:
        rep, z, out = undetermined
        return CoherenceVerdict("Undetermined", f"{rep} vs {z} unproven within bound", (rep, z), out)
    return CoherenceVerdict(
        "Coherent", f"all parallel W-zig-zags up to length {max_length} are related"
    )


# -- quotient and normal forms -------------------------------------------------


@dataclass
class QuotientPresentation:
    """Quotient of ``A`` by the rigid subgroupoid generated by W."""

    ars: Ars2
    W: frozenset
    normalization: NormalizationChoice
    classes: dict  # object -> representative

    @property
    def representatives(self) -> list:
        return list(dict.fromkeys(self.classes.values()))

    def represent(self, p: ZigZag) -> ZigZag:
        """``n_x^- · p · n_y`` reduced: the morphism between representatives."""
        nx = self.normalization.path(p.start)
        ny = self.normalization.path(p.end)
        word = inverse_word(nx.steps) + p.steps + ny.steps
        return ZigZag(nx.end, reduce_word(word), ny.end)

    def compose(self, f: ZigZag, g: ZigZag) -> ZigZag:
        """Compose quotient morphisms whose middle objects share a class."""
        if self.classes[f.end] != self.classes[g.start]:
            raise ContractError("morphisms are not composable in the quotient")
        connect = self.normalization.path(f.end).steps + inverse_word(
            self.normalization.path(g.start).steps
        )
        word = f.steps + connect + g.steps
        return self.represent(ZigZag(f.start, reduce_word(word), g.end))


def quotient_by_rigid(A: Ars2, W=None, n: NormalizationChoice | None = None, bound: int = 10_000) -> QuotientPresentation:
    W = as_subset(A, W)
    verdict = check_w_confluence_by_newman(A, W, bound)
    if not verdict.confluent:
        raise RigidityNotCertified(f"W-convergence not certified: {verdict.reason}")
    if n is None:
        n = NormalizationChoice.canonical(A, W)
    parent = {x: x for x in A.objects}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for r in W:
        s, t = A.rules[r]
        rs, rt = find(s), find(t)
        if rs != rt:
            parent[rs] = rt
    rep_of_root: dict = {}
    for x in A.objects:
        rep_of_root.setdefault(find(x), n.normal_form(x))
    classes = {x: rep_of_root[find(x)] for x in A.objects}
    for x in A.objects:
        if classes[x] != n.normal_form(x):
            raise RigidityNotCertified("a W-class has two normal forms")
    return QuotientPresentation(A, W, n, classes)


def restrict_to_normal_forms(A: Ars2, W=None) -> Ars2:
    """The system ``P∖W`` on W-normal objects."""
    W = as_subset(A, W)
    keep = set(normal_forms(A, W))
    rules = [(r, s, t) for r, (s, t) in A.rules.items() if s in keep and t in keep]
    kept = {r for r, _, _ in rules}
    cells = [
        c
        for c in A.cells.values()
        if c.source.start in keep
        and all(s.rule in kept for s in c.source.steps + c.target.steps)
    ]
    return Ars2([x for x in A.objects if x in keep], rules, cells, A.truncated)


@dataclass
class ConditionFailure:
    condition: int
    detail: str

    def to_json(self):
        return {"condition": self.condition, "detail": self.detail}


@dataclass
class NfRestrictionReport:
    convergence: ConfluenceVerdict
    failures: list = field(default_factory=list)
    checked: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.convergence.confluent and not self.failures

    def to_json(self):
        return {
            "convergence": self.convergence.status,
            "checked": self.checked,
            "failures": [f.to_json() for f in self.failures],
        }


def _search_forward(A: Ars2, start: tuple, system, bound: int, max_length: int):
    """Breadth-first search from ``start`` to any all-forward word."""
    start = reduce_word(start)
    if all(s.sign > 0 for s in start):
        return start, []
    parents = {start: None}
    queue = deque([start])
    while queue and len(parents) <= bound:
        node = queue.popleft()
        for mv in system.neighbours(node):
            nxt = mv.after
            if nxt in parents or len(nxt) > max_length:
                continue
            parents[nxt] = mv
            if all(s.sign > 0 for s in nxt):
                chain = []
                cur = nxt
                while parents[cur] is not None:
                    chain.append(parents[cur])
                    cur = parents[cur].before
                return nxt, chain[::-1]
            queue.append(nxt)
    return None, None


def check_nf_restriction_conditions(A: Ars2, W=None, bound: int = 2_000) -> NfRestrictionReport:
    """Check the local criteria for restricting ``A`` to W-normal forms.

    1. W is convergent (terminating with filled local branchings).
    2. A non-W rule with a normal source has a normal target.
    3. For a rule ``a : x -> y`` and a W-rule ``w : x -> x'`` there are a
       W-path ``w'`` of length at most one from ``y`` and a path ``p`` from
       ``x'`` with ``a · w' ⇛ w · p``.
    4. For a cell ``A : p => q`` out of ``x`` and a W-rule ``w : x -> x'``
       the transported paths ``p'`` and ``q'`` obtained as in 3 satisfy
       ``p' ⇛ q'``, inside ``P∖W`` when both stay among normal objects.
    """
    W = as_subset(A, W)
    report = NfRestrictionReport(check_w_confluence_by_newman(A, W, bound))
    if not W:
        report.checked = {"2": 0, "3": 0, "4": 0}
        return report
    normal = set(normal_forms(A, W))
    n2 = n3 = n4 = 0
    for r, (s, t) in A.rules.items():
        if r in W or s not in normal:
            continue
        n2 += 1
        if t not in normal:
            report.failures.append(ConditionFailure(2, f"rule {r} leaves the normal object {s} for {t}"))
    system = A.moves
    cap = max(A.moves.longest, 2) + 4

    def transport(word, y, w):
        """Forward word p with ``w^- · word · w' ⇛ p`` for some w' of length <= 1."""
        tails = [()] + [(fwd(b),) for b in A.out[y] if b in W]
        for tail in tails:
            start = (SignedStep(w, -1),) + tuple(word) + tail
            found, chain = _search_forward(A, start, system, bound, len(start) + cap)
            if found is not None:
                return tail, found, chain
        return None

    for r, (x, y) in A.rules.items():
        for w in A.out[x]:
            if w not in W or w == r:
                continue
            n3 += 1
            if transport((fwd(r),), y, w) is None:
                report.failures.append(
                    ConditionFailure(3, f"rule {r} and W-rule {w} out of {x} have no completion")
                )
    restricted = None
    for c in A.cells.values():
        if not c.is_path_shaped():
            continue
        x, y = c.source.start, c.source.end
        for w in A.out[x]:
            if w not in W:
                continue
            n4 += 1
            tp = transport(c.source.steps, y, w)
            tq = transport(c.target.steps, y, w) if tp else None
            if tp is None or tq is None:
                report.failures.append(ConditionFailure(4, f"cell {c.id} cannot be moved along {w}"))
                continue
            p2, q2 = tp[1], tq[1]
            if p2 == q2:
                continue
            x2 = A.rules[w][1]
            objs = {x2}
            for s in p2 + q2:
                objs.add(A.tgt(s))
            if objs <= normal:
                if restricted is None:
                    restricted = restrict_to_normal_forms(A, W)
                out = search(p2, q2, restricted.moves, bound, max(len(p2), len(q2)) + cap)
                if not out.proven:
                    report.failures.append(
                        ConditionFailure(4, f"cell {c.id} along {w}: {word_str(p2)} vs {word_str(q2)} unproven among normal forms")
                    )
    report.checked = {"2": n2, "3": n3, "4": n4}
    return report


# -- Tietze transformations ----------------------------------------------------


def tietze_add_rule(A: Ars2, p: ZigZag, rule_id, cell_id) -> Ars2:
    """Add ``rule_id`` parallel to ``p`` together with the cell ``rule_id => p``."""
    if rule_id in A.rules or cell_id in A.cells:
        raise TietzeError("identifier already in use")
    A._check_zigzag(p)
    rules = [(r, s, t) for r, (s, t) in A.rules.items()] + [(rule_id, p.start, p.end)]
    cell = CoherenceCell(cell_id, ZigZag(p.start, (fwd(rule_id),), p.end), p)
    return Ars2(A.objects, rules, list(A.cells.values()) + [cell], A.truncated)


def tietze_add_cell(A: Ars2, p: ZigZag, q: ZigZag, proof: CohSearchOutcome, cell_id) -> Ars2:
    """Add ``cell_id : p => q`` when ``proof`` derives it from existing cells."""
    if cell_id in A.cells:
        raise TietzeError("identifier already in use")
    if not proof.proven:
        raise TietzeError("the cell is not proven")
    if not chain_is_valid(p.steps, q.steps, proof.witness, A.moves):
        raise TietzeError("the proof does not replay in this system")
    return Ars2(A.objects, [(r, s, t) for r, (s, t) in A.rules.items()],
                list(A.cells.values()) + [CoherenceCell(cell_id, p, q)], A.truncated)


def tietze_remove_cell(A: Ars2, cell_id, proof: CohSearchOutcome) -> Ars2:
    """Drop a cell whose boundaries are related without it."""
    c = A.cells[cell_id]
    rest = Ars2(A.objects, [(r, s, t) for r, (s, t) in A.rules.items()],
                [d for d in A.cells.values() if d.id != cell_id], A.truncated)
    if not proof.proven or not chain_is_valid(c.source.steps, c.target.steps, proof.witness, rest.moves):
        raise TietzeError(f"cell {cell_id} is not derivable from the others")
    return rest


def removal_word(c: CoherenceCell, rule_id) -> tuple:
    """The zig-zag that replaces ``rule_id^+`` when removing it through ``c``."""
    src, tgt = c.source.steps, c.target.steps
    hits = [i for i, s in enumerate(src) if s.rule == rule_id]
    if len(hits) != 1:
        raise TietzeError(f"{rule_id} occurs {len(hits)} times in the source of {c.id}")
    if any(s.rule == rule_id for s in tgt):
        raise TietzeError(f"{rule_id} occurs in the target of {c.id}")
    i = hits[0]
    p1, occ, p2 = src[:i], src[i], src[i + 1 :]
    word = inverse_word(p1) + tuple(tgt) + inverse_word(p2)
    return word if occ.sign > 0 else inverse_word(word)


def substitute_rule(word: Sequence[SignedStep], rule_id, replacement: tuple) -> tuple:
    out = []
    for s in word:
        if s.rule == rule_id:
            out.extend(replacement if s.sign > 0 else inverse_word(replacement))
        else:
            out.append(s)
    return tuple(out)


def tietze_remove_rule(A: Ars2, rule_id, cell_id, drop_trivial: bool = False) -> Ars2:
    """Remove ``rule_id`` using the cell ``cell_id`` that defines it.

    Every other cell has ``rule_id`` replaced by the zig-zag obtained from
    the defining cell.  With ``drop_trivial`` cells whose two sides become
    equal after reduction are discarded.
    """
    if rule_id not in A.rules or cell_id not in A.cells:
        raise TietzeError("unknown rule or cell")
    rep = removal_word(A.cells[cell_id], rule_id)
    rules = [(r, s, t) for r, (s, t) in A.rules.items() if r != rule_id]
    cells = []
    for c in A.cells.values():
        if c.id == cell_id:
            continue
        src = reduce_word(substitute_rule(c.source.steps, rule_id, rep))
        tgt = reduce_word(substitute_rule(c.target.steps, rule_id, rep))
        if drop_trivial and src == tgt:
            continue
        cells.append(CoherenceCell(c.id, ZigZag(c.source.start, src, c.source.end),
                                   ZigZag(c.target.start, tgt, c.target.end)))
    return Ars2(A.objects, rules, cells, A.truncated)


def tietze_remove_rules(A: Ars2, removals: Mapping, drop_trivial: bool = True) -> Ars2:
    """Remove several rules at once, each through its own defining cell.

    ``removals`` maps a rule id to the id of a cell in which it occurs once
    in the source and not in the target.  The replacement words must avoid
    the other removed rules, so the order of removal does not matter.
    """
    reps = {}
    for rid, cid in removals.items():
        if rid not in A.rules or cid not in A.cells:
            raise TietzeError(f"unknown rule {rid} or cell {cid}")
        reps[rid] = removal_word(A.cells[cid], rid)
    for rid, rep in reps.items():
        if any(s.rule in reps for s in rep):
            raise TietzeError(f"the replacement for {rid} uses another removed rule")
    used = set(removals.values())

    def subst(word):
        out = []
        for s in word:
            rep = reps.get(s.rule)
            if rep is None:
                out.append(s)
            else:
                out.extend(rep if s.sign > 0 else inverse_word(rep))
        return reduce_word(out)

    rules = [(r, s, t) for r, (s, t) in A.rules.items() if r not in reps]
    cells = []
    for c in A.cells.values():
        if c.id in used:
            continue
        src, tgt = subst(c.source.steps), subst(c.target.steps)
        if drop_trivial and src == tgt:
            continue
        cells.append(CoherenceCell(c.id, ZigZag(c.source.start, src, c.source.end),
                                   ZigZag(c.target.start, tgt, c.target.end)))
    return Ars2(A.objects, rules, cells, A.truncated)


# -- export ----------------------------------------------------------------


def to_dot(A: Ars2, W=None, label: Callable = str) -> str:
    """Graphviz text for the W-step graph (other rules dashed)."""
    W = as_subset(A, W)
    ids = {x: f"n{i}" for i, x in enumerate(A.objects)}
    lines = ["digraph W {"]
    for x in A.objects:
        text = label(x).replace('"', '\\"')
        lines.append(f'  {ids[x]} [label="{text}"];')
    for r, (s, t) in A.rules.items():
        text = label(r).replace('"', '\\"')
        style = "" if r in W else ", style=dashed"
        lines.append(f'  {ids[s]} -> {ids[t]} [label="{text}"{style}];')
    lines.append("}")
    return "\n".join(lines) + "\n"
