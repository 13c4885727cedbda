"""Tree-like resolution by DPLL with proof recording.

``derive`` runs unit propagation and splitting over a small premise set and
returns a proof step whose clause is falsified by the assumption literals, so
it only contains negations of assumptions.  With no assumptions that clause
is empty.  Assumptions play the role of guard literals: running the search
under assumption ``l`` on ``(not l) v A`` yields a derivation of ``not l``.

At a conflict the falsified premise is resolved backwards against the reasons
of the propagated literals on the trail; at a split the two sub-derivations
are resolved on the split variable unless one of them already avoids it.
"""

from __future__ import annotations

import sys
from typing import Sequence

from .cnf import Clause, make_clause
from .errors import SatisfiableInput
from .resolution import ProofBuilder

Premise = tuple[Clause, "int | str"]


class _Search:
    def __init__(self, builder: ProofBuilder, premises: Sequence[Premise], order: Sequence[int]):
        self.b = builder
        self.clauses = [make_clause(c) for c, _ in premises]
        self.sources = [r for _, r in premises]
        self.refs: dict[int, int] = {}
        self.occ: dict[int, list[int]] = {}
        for i, c in enumerate(self.clauses):
            for lit in c:
                self.occ.setdefault(lit, []).append(i)
        self.order = list(order)
        seen = set(self.order)
        for v in sorted({abs(l) for c in self.clauses for l in c}):
            if v not in seen:
                self.order.append(v)
        self.val: dict[int, bool] = {}

    def ref(self, i: int) -> int:
        if i not in self.refs:
            src = self.sources[i]
            self.refs[i] = self.b.cite(src, self.clauses[i]) if isinstance(src, str) else src
        return self.refs[i]

    def _status(self, i: int):
        """('sat'|'conflict'|'unit'|'open', free literal)."""
        free = None
        n_free = 0
        val = self.val
        for lit in self.clauses[i]:
            v = val.get(abs(lit))
            if v is None:
                n_free += 1
                free = lit
            elif v == (lit > 0):
                return "sat", None
        if n_free == 0:
            return "conflict", None
        if n_free == 1:
            return "unit", free
        return "open", None

    def propagate(self, new: Sequence[int] | None, trail: list[tuple[int, int]]) -> int | None:
        """Unit propagation to fixpoint; returns a falsified premise index or None."""
        queue: list[int] = []
        if new is None:
            candidates = range(len(self.clauses))
        else:
            queue.extend(new)
            candidates = ()
        for i in candidates:
            st, lit = self._status(i)
            if st == "conflict":
                return i
            if st == "unit":
                self.val[abs(lit)] = lit > 0
                trail.append((lit, i))
                queue.append(lit)
        head = 0
        while head < len(queue):
            lit = queue[head]
            head += 1
            for i in self.occ.get(-lit, ()):
                st, u = self._status(i)
                if st == "conflict":
                    return i
                if st == "unit":
                    self.val[abs(u)] = u > 0
                    trail.append((u, i))
                    queue.append(u)
        return None

    def unwind(self, d: int, trail: list[tuple[int, int]]) -> int:
        for lit, reason in reversed(trail):
            if -lit in self.b.clause(d):
                d = self.b.resolve(d, self.ref(reason), abs(lit))
        for lit, _ in trail:
            del self.val[abs(lit)]
        return d

    def node(self, new: Sequence[int] | None) -> int:
        trail: list[tuple[int, int]] = []
        conflict = self.propagate(new, trail)
        if conflict is not None:
            return self.unwind(self.ref(conflict), trail)
        x = next((v for v in self.order if v not in self.val), None)
        if x is None:
            for lit, _ in trail:
                del self.val[abs(lit)]
            raise SatisfiableInput("premises are satisfiable under the assumptions")
        try:
            self.val[x] = False
            d0 = self.node([-x])
            del self.val[x]
            if x not in self.b.clause(d0):
                return self.unwind(d0, trail)
            self.val[x] = True
            d1 = self.node([x])
            del self.val[x]
            if -x not in self.b.clause(d1):
                return self.unwind(d1, trail)
            return self.unwind(self.b.resolve(d0, d1, x), trail)
        except SatisfiableInput:
            self.val.pop(x, None)
            for lit, _ in trail:
                self.val.pop(abs(lit), None)
            raise


def derive(
    builder: ProofBuilder,
    premises: Sequence[Premise],
    assumptions: Sequence[int] = (),
    order: Sequence[int] = (),
) -> int:
    """Record a tree-like refutation of ``premises`` under ``assumptions``.

    Each premise is ``(clause, ref)`` where ``ref`` is an existing step id or a
    rule letter (``"K"``/``"P"``) used to cite the clause on first use.
    Splitting follows ``order`` first, then remaining variables by index.
    Returns the step id of a clause made of negated assumption literals.
    """
    s = _Search(builder, premises, order)
    for a in assumptions:
        s.val[abs(a)] = a > 0
    need = 4 * (len(s.order) + 64)
    if need > sys.getrecursionlimit():
        sys.setrecursionlimit(need)
    return s.node(None)


__all__ = ["derive"]
