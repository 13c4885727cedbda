"""Resolution proofs: data model, PRES v1 text format, checker and small refuters.

A proof is a list of steps.  Each step either cites a clause (``K`` from the
input formula, ``P`` from a promise axiom), resolves two earlier steps on a
pivot variable (``R``), or weakens an earlier step by extra literals (``W``).
Steps carry their clause so a checker can validate each one in O(width).
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable, Sequence

from .cnf import Clause, CnfFormula, VarSpace, guard_bits, is_satisfiable, is_tautology, make_clause
from .errors import GuardExceeded, ParseError, ResolutionError, SatisfiableInput

# size(refute_2cnf(F)) <= C2 * n**2 for every unsatisfiable 2CNF on n >= 1 variables
C2 = 9

INPUT, PROMISE, RESOLVE, WEAKEN = "K", "P", "R", "W"


def resolve(c: Iterable[int], d: Iterable[int], pivot: int) -> Clause:
    """Resolvent of ``c`` and ``d`` on variable ``pivot`` (either premise order)."""
    x = abs(int(pivot))
    if x == 0:
        raise ResolutionError("pivot must be a variable index >= 1")
    c, d = set(c), set(d)
    if x in c and -x in d:
        pos, neg = c, d
    elif -x in c and x in d:
        pos, neg = d, c
    elif x in c or -x in c or x in d or -x in d:
        raise ResolutionError(f"pivot {x} occurs with the same polarity in both premises")
    else:
        raise ResolutionError(f"pivot {x} missing from a premise")
    if -x in pos or x in neg:
        raise ResolutionError(f"residue still contains pivot {x}")
    return make_clause((pos - {x}) | (neg - {-x}))


def weaken(c: Iterable[int], add: Iterable[int]) -> Clause:
    return make_clause(tuple(c) + tuple(add))


# --------------------------------------------------------------------------- proof objects


@dataclass(frozen=True)
class ProofStep:
    id: int
    rule: str
    clause: Clause | None
    refs: tuple[int, ...] = ()
    pivot: int | None = None
    added: Clause = ()

    def __post_init__(self):
        if self.rule not in (INPUT, PROMISE, RESOLVE, WEAKEN):
            raise ValueError(f"unknown rule {self.rule!r}")
        if self.clause is not None:
            object.__setattr__(self, "clause", make_clause(self.clause))


@dataclass(frozen=True)
class Proof:
    space: VarSpace
    steps: tuple[ProofStep, ...]
    uses_promise: bool = False

    @property
    def size(self) -> int:
        return len(self.steps)

    @property
    def width(self) -> int:
        return max((len(s.clause) for s in self.steps if s.clause is not None), default=0)

    @property
    def final(self) -> Clause | None:
        return self.steps[-1].clause if self.steps else None

    def count(self, rule: str) -> int:
        return sum(1 for s in self.steps if s.rule == rule)


@dataclass(frozen=True)
class Verdict:
    accepted: bool
    failing_step: int | None
    reason: str
    size: int
    width: int

    def as_dict(self) -> dict:
        return {
            "accepted": self.accepted,
            "failing_step": self.failing_step,
            "reason": self.reason,
            "size": self.size,
            "width": self.width,
        }


class ProofBuilder:
    """Accumulates steps, reusing identical citations and resolutions."""

    def __init__(self):
        self.steps: list[ProofStep] = []
        self._memo: dict[tuple, int] = {}

    def __len__(self) -> int:
        return len(self.steps)

    def clause(self, ref: int) -> Clause:
        return self.steps[ref - 1].clause

    def _push(self, key, **kw) -> int:
        if key is not None and key in self._memo:
            return self._memo[key]
        sid = len(self.steps) + 1
        self.steps.append(ProofStep(id=sid, **kw))
        if key is not None:
            self._memo[key] = sid
        return sid

    def cite(self, kind: str, clause: Iterable[int]) -> int:
        c = make_clause(clause)
        return self._push((kind, c), rule=kind, clause=c)

    def resolve(self, a: int, b: int, pivot: int) -> int:
        x = abs(pivot)
        if a > b:
            a, b = b, a
        c = resolve(self.clause(a), self.clause(b), x)
        return self._push((RESOLVE, a, b, x), rule=RESOLVE, clause=c, refs=(a, b), pivot=x)

    def weaken(self, a: int, add: Iterable[int]) -> int:
        extra = make_clause(add)
        c = weaken(self.clause(a), extra)
        if c == self.clause(a):
            return a
        return self._push((WEAKEN, a, extra), rule=WEAKEN, clause=c, refs=(a,), added=extra)

    def build(self, space: VarSpace, uses_promise: bool | None = None) -> Proof:
        if uses_promise is None:
            uses_promise = any(s.rule == PROMISE for s in self.steps)
        return Proof(space, tuple(self.steps), uses_promise)


# --------------------------------------------------------------------------- PRES v1


def serialize_proof(p: Proof, comments: Sequence[str] = ()) -> str:
    lines = [f"c {c}" for c in comments]
    lines += [f"p pres {p.space.n_original} {p.space.n_total} {int(p.uses_promise)}"]
    for s in p.steps:
        if s.rule in (INPUT, PROMISE):
            body = " ".join(map(str, s.clause + (0,)))
            lines.append(f"{s.id} {s.rule} {body}")
        elif s.rule == RESOLVE:
            lines.append(f"{s.id} R {s.refs[0]} {s.refs[1]} {s.pivot}")
        else:
            body = " ".join(map(str, s.added + (0,)))
            lines.append(f"{s.id} W {s.refs[0]} {body}")
    return "\n".join(lines) + "\n"


def _zero_terminated(tokens: list[str], lineno: int) -> Clause:
    if not tokens or tokens[-1] != "0":
        raise ParseError(f"line {lineno}: clause not terminated by 0")
    try:
        lits = [int(t) for t in tokens[:-1]]
    except ValueError:
        raise ParseError(f"line {lineno}: bad literal") from None
    if 0 in lits:
        raise ParseError(f"line {lineno}: 0 inside clause")
    return make_clause(lits)


def parse_proof(text: str | bytes) -> Proof:
    """Parse PRES v1.  ``R`` lines may carry the stored resolvent as ``<lits> 0``."""
    if isinstance(text, bytes):
        text = text.decode()
    space = None
    uses = False
    steps: list[ProofStep] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        tok = line.split()
        if tok[0] == "p":
            if space is not None:
                raise ParseError(f"line {lineno}: duplicate header")
            if len(tok) != 5 or tok[1] != "pres" or tok[4] not in ("0", "1"):
                raise ParseError(f"line {lineno}: malformed header {line!r}")
            try:
                space = VarSpace(int(tok[2]), int(tok[3]))
            except ValueError as e:
                raise ParseError(f"line {lineno}: {e}") from None
            uses = tok[4] == "1"
            continue
        if space is None:
            raise ParseError(f"line {lineno}: step before header")
        if len(tok) < 2:
            raise ParseError(f"line {lineno}: truncated step")
        try:
            sid = int(tok[0])
        except ValueError:
            raise ParseError(f"line {lineno}: bad step id {tok[0]!r}") from None
        rule = tok[1]
        try:
            if rule in (INPUT, PROMISE):
                steps.append(ProofStep(sid, rule, _zero_terminated(tok[2:], lineno)))
            elif rule == RESOLVE:
                if len(tok) < 5:
                    raise ParseError(f"line {lineno}: R needs <i> <j> <pivot>")
                i, j, piv = int(tok[2]), int(tok[3]), int(tok[4])
                stored = _zero_terminated(tok[5:], lineno) if len(tok) > 5 else None
                steps.append(ProofStep(sid, RESOLVE, stored, (i, j), piv))
            elif rule == WEAKEN:
                if len(tok) < 4:
                    raise ParseError(f"line {lineno}: W needs <i> <lits> 0")
                add = _zero_terminated(tok[3:], lineno)
                steps.append(ProofStep(sid, WEAKEN, None, (int(tok[2]),), added=add))
            else:
                raise ParseError(f"line {lineno}: unknown rule {rule!r}")
        except ValueError as e:
            if isinstance(e, ParseError):
                raise
            raise ParseError(f"line {lineno}: {e}") from None
    if space is None:
        raise ParseError("missing 'p pres' header")
    return Proof(space, tuple(steps), uses)


# --------------------------------------------------------------------------- checker


def _as_axiom_list(axiom) -> list[CnfFormula]:
    if axiom is None:
        return []
    if isinstance(axiom, CnfFormula):
        return [axiom]
    return list(axiom)


def check_proof(
    k: CnfFormula,
    axiom: CnfFormula | Sequence[CnfFormula] | None,
    p: Proof,
    *,
    strict_no_weakening: bool = False,
    refutation: bool = True,
) -> Verdict:
    """Validate ``p`` against input ``k`` and an optional promise axiom.

    ``axiom`` may be a list of declared axiom CNFs; every ``P`` step must then
    cite clauses of one and the same member.
    """
    axioms = _as_axiom_list(axiom)
    clauses: list[Clause] = []
    width = 0

    def fail(step: int | None, why: str) -> Verdict:
        return Verdict(False, step, why, p.size, width)

    n_total = p.space.n_total
    if k.space.n_total > n_total or any(a.space.n_total > n_total for a in axioms):
        return fail(None, "proof variable space smaller than the formulas it cites")
    if k.space.n_original != p.space.n_original:
        return fail(None, "proof and input disagree on the number of original variables")
    kset = set(k.clauses)
    asets = [set(a.clauses) for a in axioms]
    candidates = set(range(len(asets)))

    for pos, s in enumerate(p.steps, 1):
        if s.id != pos:
            return fail(s.id, f"step id {s.id} out of sequence (expected {pos})")
        if s.rule == INPUT:
            c = s.clause
            if c not in kset:
                return fail(s.id, "input clause not in K")
        elif s.rule == PROMISE:
            c = s.clause
            if not p.uses_promise:
                return fail(s.id, "promise clause in a proof declared without axiom")
            if not asets:
                return fail(s.id, "promise clause cited but no axiom supplied")
            hits = {i for i in candidates if c in asets[i]}
            if not hits:
                if any(c in a for a in asets):
                    return fail(s.id, "proof cites more than one promise axiom (at most one promise axiom allowed)")
                return fail(s.id, "promise clause not in the axiom")
            candidates = hits
        elif s.rule == RESOLVE:
            i, j = s.refs
            if not (1 <= i < pos and 1 <= j < pos):
                return fail(s.id, "reference to a later or missing step")
            try:
                c = resolve(clauses[i - 1], clauses[j - 1], s.pivot)
            except ResolutionError as e:
                return fail(s.id, str(e))
            if s.clause is not None and s.clause != c:
                return fail(s.id, "stored clause differs from the resolvent")
        else:
            if strict_no_weakening:
                return fail(s.id, "weakening disabled in strict mode")
            (i,) = s.refs
            if not 1 <= i < pos:
                return fail(s.id, "reference to a later or missing step")
            c = weaken(clauses[i - 1], s.added)
            if s.clause is not None and s.clause != c:
                return fail(s.id, "stored clause differs from the weakening")
        if any(abs(l) > n_total for l in c):
            return fail(s.id, "literal outside the declared variable space")
        clauses.append(c)
        width = max(width, len(c))

    if not p.steps:
        return fail(None, "empty proof")
    if refutation and clauses[-1] != ():
        return fail(p.size, "final clause is not empty")
    return Verdict(True, None, "ok", p.size, width)


# --------------------------------------------------------------------------- 2CNF refuter


def _implication_graph(clauses: Sequence[Clause]) -> dict[int, list[tuple[int, int]]]:
    """Edges lit -> (lit', clause index), one pair per clause literal."""
    g: dict[int, list[tuple[int, int]]] = {}
    for idx, c in enumerate(clauses):
        if len(c) == 1:
            (a,) = c
            g.setdefault(-a, []).append((a, idx))
        elif len(c) == 2:
            a, b = c
            g.setdefault(-a, []).append((b, idx))
            g.setdefault(-b, []).append((a, idx))
    return g


def _path(g, src: int, dst: int) -> list[tuple[int, int]] | None:
    """Shortest src -> dst path as [(lit, clause idx), ...]; BFS over sorted edges."""
    prev: dict[int, tuple[int, int]] = {src: (0, -1)}
    q = deque([src])
    while q:
        u = q.popleft()
        if u == dst and u != src:
            break
        for v, idx in g.get(u, ()):
            if v not in prev:
                prev[v] = (u, idx)
                q.append(v)
    if dst not in prev or dst == src:
        return None
    out = []
    v = dst
    while v != src:
        u, idx = prev[v]
        out.append((v, idx))
        v = u
    out.reverse()
    return out


def plan_2cnf(clauses: Sequence[Clause]) -> list[tuple]:
    """Refutation plan over premise indices.

    Ops: ("premise", idx) or ("resolve", a, b, pivot) where a, b index earlier
    ops.  The last op derives the empty clause.  Raises SatisfiableInput.
    """
    for idx, c in enumerate(clauses):
        if len(c) == 0:
            return [("premise", idx)]
        if len(c) > 2:
            raise ValueError("refute_2cnf needs width <= 2")
    g = _implication_graph(clauses)
    for key in g:
        g[key].sort(key=lambda e: (abs(e[0]), e[0] < 0, e[1]))
    variables = sorted({abs(l) for c in clauses for l in c})
    ops: list[tuple] = []
    cur_clause: list[Clause] = []
    memo: dict = {}

    def op_premise(idx):
        key = ("premise", idx)
        if key not in memo:
            memo[key] = len(ops)
            ops.append(key)
            cur_clause.append(clauses[idx])
        return memo[key]

    def op_resolve(a, b, pivot):
        key = ("resolve", min(a, b), max(a, b), pivot)
        if key not in memo:
            memo[key] = len(ops)
            ops.append(key)
            cur_clause.append(resolve(cur_clause[a], cur_clause[b], pivot))
        return memo[key]

    for x in variables:
        p1 = _path(g, x, -x)
        if p1 is None:
            continue
        p2 = _path(g, -x, x)
        if p2 is None:
            continue
        neg = _chain(p1, x, clauses, op_premise, op_resolve, cur_clause)
        pos = _chain(p2, -x, clauses, op_premise, op_resolve, cur_clause)
        op_resolve(neg, pos, x)
        return ops
    raise SatisfiableInput("2CNF is satisfiable")


def _chain(path, start, clauses, op_premise, op_resolve, cur_clause) -> int:
    """Derive the unit clause (-start) from a path start -> ... -> -start."""
    goal = {-start}
    ref = op_premise(path[0][1])
    prev = path[0][0]
    for lit, idx in path[1:]:
        if set(cur_clause[ref]) <= goal:
            return ref
        # current clause is (-start v prev); the edge clause is (-prev v lit)
        ref = op_resolve(ref, op_premise(idx), abs(prev))
        prev = lit
    return ref


def replay_plan(plan: Sequence[tuple], builder: ProofBuilder, premise_refs: Sequence[int]) -> int:
    """Emit ``plan`` into ``builder``; premise i is the existing step premise_refs[i]."""
    refs: list[int] = []
    for op in plan:
        if op[0] == "premise":
            refs.append(premise_refs[op[1]])
        else:
            _, a, b, pivot = op
            refs.append(builder.resolve(refs[a], refs[b], pivot))
    return refs[-1]


def refute_2cnf(f: CnfFormula) -> Proof:
    if f.width > 2:
        raise ValueError(f"refute_2cnf needs width <= 2, got {f.width}")
    plan = plan_2cnf(f.clauses)
    b = ProofBuilder()
    cited: dict[int, int] = {}
    used = sorted({op[1] for op in plan if op[0] == "premise"})
    for idx in used:
        cited[idx] = b.cite(INPUT, f.clauses[idx])
    premise_refs = [cited.get(i, 0) for i in range(len(f.clauses))]
    replay_plan(plan, b, premise_refs)
    return b.build(f.space, False)


# --------------------------------------------------------------------------- width


def _to_masks(c: Clause) -> tuple[int, int]:
    pos = neg = 0
    for l in c:
        if l > 0:
            pos |= 1 << (l - 1)
        else:
            neg |= 1 << (-l - 1)
    return pos, neg


def saturate(clauses: Iterable[Clause], w: int) -> set[tuple[int, int]]:
    """Closure under resolution restricted to non-tautological clauses of width <= w."""
    start = set()
    for c in clauses:
        if len(c) <= w and not is_tautology(c):
            start.add(_to_masks(c))
    known = set(start)
    frontier = list(start)
    while frontier:
        if (0, 0) in known:
            break
        new = []
        pool = list(known)
        for a in frontier:
            pa, na = a
            for b in pool:
                pb, nb = b
                piv = (pa & nb) | (na & pb)
                if piv == 0 or piv & (piv - 1):
                    # no clash, or two clashing variables (resolvent is a tautology)
                    continue
                p = (pa | pb) & ~piv
                n = (na | nb) & ~piv
                if p & n or (p.bit_count() + n.bit_count()) > w:
                    continue
                r = (p, n)
                if r not in known:
                    known.add(r)
                    new.append(r)
        frontier = new
    return known


def min_width(k: CnfFormula, axiom: CnfFormula | None = None, guard: int | None = None) -> int:
    """Exact minimal refutation width of k (together with axiom clauses)."""
    clauses = list(k.clauses) + (list(axiom.clauses) if axiom is not None else [])
    n = max(k.space.n_total, axiom.space.n_total if axiom is not None else 0)
    g = guard_bits(guard)
    if n > g:
        raise GuardExceeded(f"min_width: {n} variables exceeds guard {g}")
    if () in clauses:
        return 0
    if is_satisfiable(clauses):
        raise SatisfiableInput("formula is satisfiable; no refutation exists")
    w = max(len(c) for c in clauses)
    while True:
        if (0, 0) in saturate(clauses, w):
            return w
        w += 1
        if w > n:  # pragma: no cover - unsat formulas are refutable at width n
            raise AssertionError("saturation failed at full width on an unsat formula")


def size_width_indicator(n: int, r: int, w: int) -> float:
    """(w - r)^2 / n, the exponent body of the size-width relation."""
    if w < r:
        raise ValueError("width must be at least the formula width r")
    if n <= 0:
        raise ValueError("n must be positive")
    return (w - r) ** 2 / n


__all__ = [
    "C2",
    "Proof",
    "ProofBuilder",
    "ProofStep",
    "Verdict",
    "check_proof",
    "min_width",
    "parse_proof",
    "plan_2cnf",
    "refute_2cnf",
    "replay_plan",
    "resolve",
    "saturate",
    "serialize_proof",
    "size_width_indicator",
    "weaken",
]

