"""CNF data model, DIMACS I/O and exact semantic oracles.

Literals follow the DIMACS convention: variable ``v`` is the positive
integer ``v`` and its negation is ``-v``.  A clause is a tuple of distinct
literals sorted by ``(variable, sign)``, positive literal first, so equal
clauses compare and hash equal.

The oracles here are the ground truth for every other module.  Anything that
enumerates assignments is bounded by an enumeration guard (24 bits by default,
``PRES_GUARD_BITS`` or an explicit ``guard=`` argument overrides it).  Searches
over extension variables use a SAT backend with assumptions instead of
enumeration, since axiom CNFs carry many extension variables even for tiny n.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np
from pysat.solvers import Solver as _SatSolver

from .errors import GuardExceeded, ParseError, PartialAssignment

Literal = int
Clause = tuple[int, ...]

DEFAULT_GUARD_BITS = 24
_CHUNK_BITS = 20
_BACKEND = "g4"


def guard_bits(override: int | None = None) -> int:
    if override is not None:
        return int(override)
    env = os.environ.get("PRES_GUARD_BITS")
    if env:
        return int(env)
    return DEFAULT_GUARD_BITS


def lit_key(lit: int) -> tuple[int, bool]:
    return (abs(lit), lit < 0)


def make_clause(lits: Iterable[int]) -> Clause:
    """Canonical clause: duplicates removed, sorted by (var, sign)."""
    seen = set()
    for lit in lits:
        lit = int(lit)
        if lit == 0:
            raise ValueError("0 is not a literal")
        seen.add(lit)
    return tuple(sorted(seen, key=lit_key))


def is_tautology(clause: Iterable[int]) -> bool:
    s = set(clause)
    return any(-lit in s for lit in s)


def clause_vars(clause: Iterable[int]) -> set[int]:
    return {abs(lit) for lit in clause}


def guard_clause(guard: Iterable[int], clauses: Iterable[Clause]) -> list[Clause]:
    """Add every literal of ``guard`` to every clause (the l (+)v A operation)."""
    g = tuple(guard)
    return [make_clause(g + tuple(c)) for c in clauses]


@dataclass(frozen=True)
class VarSpace:
    """Variables ``1..n_original`` are the X variables, the rest are extension."""

    n_original: int
    n_total: int

    def __post_init__(self):
        if not 0 <= self.n_original <= self.n_total:
            raise ValueError(
                f"need 0 <= n_original <= n_total, got {self.n_original}, {self.n_total}"
            )

    @classmethod
    def plain(cls, n: int) -> "VarSpace":
        return cls(n, n)


@dataclass(frozen=True)
class CnfFormula:
    space: VarSpace
    clauses: tuple[Clause, ...]

    def __post_init__(self):
        canon = tuple(make_clause(c) for c in self.clauses)
        for c in canon:
            for lit in c:
                if abs(lit) > self.space.n_total:
                    raise ValueError(
                        f"literal {lit} exceeds variable count {self.space.n_total}"
                    )
        object.__setattr__(self, "clauses", canon)

    @classmethod
    def from_clauses(
        cls,
        clauses: Iterable[Iterable[int]],
        n_vars: int | None = None,
        n_original: int | None = None,
    ) -> "CnfFormula":
        cl = [make_clause(c) for c in clauses]
        top = max((abs(l) for c in cl for l in c), default=0)
        n_total = top if n_vars is None else n_vars
        return cls(VarSpace(n_total if n_original is None else n_original, n_total), tuple(cl))

    @property
    def n_vars(self) -> int:
        return self.space.n_total

    @property
    def size(self) -> int:
        return len(self.clauses)

    @property
    def width(self) -> int:
        return max((len(c) for c in self.clauses), default=0)

    def variables(self) -> set[int]:
        return {abs(l) for c in self.clauses for l in c}

    def extend(self, clauses: Iterable[Iterable[int]], n_total: int | None = None) -> "CnfFormula":
        """Conjoin extra clauses, optionally growing the variable space."""
        space = self.space if n_total is None else VarSpace(self.space.n_original, n_total)
        return CnfFormula(space, self.clauses + tuple(make_clause(c) for c in clauses))

    def __len__(self) -> int:
        return len(self.clauses)


# --------------------------------------------------------------------------- DIMACS


def parse_dimacs(text: str | bytes) -> CnfFormula:
    if isinstance(text, bytes):
        text = text.decode()
    n_vars = n_clauses = None
    n_original = None
    tokens: list[int] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line == "%":
            continue
        if line.startswith("c"):
            parts = line.split()
            if len(parts) >= 3 and parts[0] == "c" and parts[1] == "xvars":
                try:
                    n_original = int(parts[2])
                except ValueError:
                    raise ParseError(f"line {lineno}: bad xvars comment {line!r}") from None
            continue
        if line.startswith("p"):
            parts = line.split()
            if n_vars is not None:
                raise ParseError(f"line {lineno}: duplicate header")
            if len(parts) != 4 or parts[1] != "cnf":
                raise ParseError(f"line {lineno}: malformed header {line!r}")
            try:
                n_vars, n_clauses = int(parts[2]), int(parts[3])
            except ValueError:
                raise ParseError(f"line {lineno}: malformed header {line!r}") from None
            if n_vars < 0 or n_clauses < 0:
                raise ParseError(f"line {lineno}: negative counts in header")
            continue
        if n_vars is None:
            raise ParseError(f"line {lineno}: clause before header")
        for tok in line.split():
            try:
                lit = int(tok)
            except ValueError:
                raise ParseError(f"line {lineno}: bad literal {tok!r}") from None
            if abs(lit) > n_vars:
                raise ParseError(f"line {lineno}: literal {lit} exceeds declared {n_vars} vars")
            tokens.append(lit)
    if n_vars is None:
        raise ParseError("missing 'p cnf' header")
    clauses: list[list[int]] = []
    cur: list[int] = []
    for lit in tokens:
        if lit == 0:
            clauses.append(cur)
            cur = []
        else:
            cur.append(lit)
    if cur:
        raise ParseError("unterminated clause at end of input")
    if len(clauses) != n_clauses:
        raise ParseError(f"header declares {n_clauses} clauses, found {len(clauses)}")
    if n_original is None:
        n_original = n_vars
    if not 0 <= n_original <= n_vars:
        raise ParseError(f"xvars {n_original} outside 0..{n_vars}")
    return CnfFormula(VarSpace(n_original, n_vars), tuple(make_clause(c) for c in clauses))


def serialize_dimacs(f: CnfFormula, comments: Sequence[str] = ()) -> str:
    lines = [f"c {c}" for c in comments]
    if f.space.n_original < f.space.n_total:
        lines.append(f"c xvars {f.space.n_original}")
    lines.append(f"p cnf {f.space.n_total} {len(f.clauses)}")
    for c in f.clauses:
        lines.append(" ".join(map(str, c + (0,))))
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------- evaluation


def eval_clause(clause: Iterable[int], values: Sequence[int | bool]) -> bool:
    return any(bool(values[abs(l) - 1]) == (l > 0) for l in clause)


def evaluate(f: CnfFormula, values: Sequence[int | bool]) -> bool:
    """Truth value of ``f`` under ``values`` (``values[i]`` is variable i+1)."""
    if len(values) < f.space.n_total:
        raise PartialAssignment(
            f"assignment covers {len(values)} variables, formula has {f.space.n_total}"
        )
    return all(eval_clause(c, values) for c in f.clauses)


def _bits(index: int, n: int) -> tuple[int, ...]:
    return tuple((index >> i) & 1 for i in range(n))


def assignments(n: int) -> Iterator[tuple[int, ...]]:
    """All 0/1 tuples of length n; entry i is variable i+1, x1 varies fastest."""
    for i in range(1 << n):
        yield _bits(i, n)


def _satisfying_chunks(clauses: Sequence[Clause], n: int) -> Iterator[np.ndarray]:
    """Yield arrays of assignment indices (bit v-1 = variable v) satisfying all clauses."""
    total = 1 << n
    step = 1 << min(n, _CHUNK_BITS)
    for start in range(0, total, step):
        idx = np.arange(start, min(start + step, total), dtype=np.uint64)
        ok = np.ones(idx.shape, dtype=bool)
        for c in clauses:
            sat = np.zeros(idx.shape, dtype=bool)
            for lit in c:
                bit = ((idx >> np.uint64(abs(lit) - 1)) & np.uint64(1)).astype(bool)
                sat |= bit if lit > 0 else ~bit
            ok &= sat
            if not ok.any():
                break
        yield idx[ok]


def _check_guard(width: int, guard: int | None, what: str) -> None:
    g = guard_bits(guard)
    if width > g:
        raise GuardExceeded(f"{what}: {width} variables exceeds enumeration guard {g}")


class _Backend:
    """SAT backend holding a formula, queried under assumptions."""

    def __init__(self, clauses: Iterable[Clause]):
        self._empty = False
        self._solver = _SatSolver(name=_BACKEND)
        for c in clauses:
            if not c:
                self._empty = True
            elif not is_tautology(c):
                self._solver.add_clause(list(c))

    def sat(self, assumptions: Sequence[int] = ()) -> bool:
        if self._empty:
            return False
        return bool(self._solver.solve(assumptions=list(assumptions)))

    def model(self) -> list[int] | None:
        return self._solver.get_model()

    def close(self) -> None:
        self._solver.delete()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def is_satisfiable(f: CnfFormula | Iterable[Clause], assumptions: Sequence[int] = ()) -> bool:
    clauses = f.clauses if isinstance(f, CnfFormula) else f
    with _Backend(clauses) as b:
        return b.sat(assumptions)


def find_model(
    f: CnfFormula | Iterable[Clause], assumptions: Sequence[int] = ()
) -> dict[int, bool] | None:
    """A satisfying assignment (var -> value) or None; unconstrained vars are omitted."""
    clauses = f.clauses if isinstance(f, CnfFormula) else f
    with _Backend(clauses) as b:
        if not b.sat(assumptions):
            return None
        return {abs(l): l > 0 for l in (b.model() or [])}


def count_models(
    f: CnfFormula, over: Sequence[int] | int | None = None, guard: int | None = None
) -> int:
    """Number of assignments to ``over`` that extend to a model of ``f``.

    ``over`` is a list of variables, an integer k meaning x1..xk, or None for
    all variables of the space (plain model count).
    """
    n = f.space.n_total
    if over is None:
        rng = list(range(1, n + 1))
    elif isinstance(over, int):
        rng = list(range(1, over + 1))
    else:
        rng = list(over)
    if any(not 1 <= v <= n for v in rng) or len(set(rng)) != len(rng):
        raise ValueError("range must be distinct variables of the formula")
    _check_guard(len(rng), guard, "count_models")
    if any(len(c) == 0 for c in f.clauses):
        return 0
    if n <= guard_bits(guard):
        if len(rng) == n:
            return sum(int(chunk.size) for chunk in _satisfying_chunks(f.clauses, n))
        seen = np.zeros(1 << len(rng), dtype=bool)
        for chunk in _satisfying_chunks(f.clauses, n):
            if chunk.size == 0:
                continue
            proj = np.zeros(chunk.shape, dtype=np.uint64)
            for j, v in enumerate(rng):
                proj |= ((chunk >> np.uint64(v - 1)) & np.uint64(1)) << np.uint64(j)
            seen[proj.astype(np.int64)] = True
        return int(seen.sum())
    with _Backend(f.clauses) as b:
        return sum(
            1
            for bits in assignments(len(rng))
            if b.sat([v if bit else -v for v, bit in zip(rng, bits)])
        )


def discarded_assignments(a: CnfFormula, guard: int | None = None) -> set[tuple[int, ...]]:
    """X-assignments (over x1..x_{n_original}) with no satisfying extension."""
    nx = a.space.n_original
    _check_guard(nx, guard, "discarded_assignments")
    xs = list(range(1, nx + 1))
    if any(len(c) == 0 for c in a.clauses):
        return set(assignments(nx))
    out = set()
    with _Backend(a.clauses) as b:
        _discard_walk(b, xs, [], out)
    return out


def _discard_walk(b: _Backend, xs: list[int], prefix: list[int], out: set) -> None:
    # prune whole subcubes whose prefix already has no extension
    if not b.sat(prefix):
        k = len(prefix)
        head = tuple(1 if lit > 0 else 0 for lit in prefix)
        for tail in assignments(len(xs) - k):
            out.add(head + tail)
        return
    if len(prefix) == len(xs):
        return
    v = xs[len(prefix)]
    _discard_walk(b, xs, prefix + [-v], out)
    _discard_walk(b, xs, prefix + [v], out)


def semantic_implies(a: CnfFormula | Iterable[Clause], b: Iterable[int]) -> bool:
    """A |= B: every model of A satisfies clause B."""
    clause = make_clause(b)
    if is_tautology(clause):
        return True
    clauses = a.clauses if isinstance(a, CnfFormula) else list(a)
    with _Backend(clauses) as s:
        return not s.sat([-l for l in clause])


class SubsetOracle:
    """Implication queries over ``base`` plus any chosen subset of ``optional``.

    Optional clause i is loaded as (C_i v -s_i) with a fresh selector s_i, so
    one solver answers every subset by assuming the chosen selectors.
    """

    def __init__(self, base: Iterable[Clause], optional: Sequence[Clause], n_vars: int):
        self.optional = [make_clause(c) for c in optional]
        self.sel = [n_vars + 1 + i for i in range(len(self.optional))]
        loaded = [make_clause(c) for c in base]
        loaded += [c + (-s,) for c, s in zip(self.optional, self.sel)]
        self._b = _Backend(loaded)

    def satisfiable(self, subset: Iterable[int], assumptions: Sequence[int] = ()) -> bool:
        return self._b.sat([self.sel[i] for i in subset] + list(assumptions))

    def implies(self, subset: Iterable[int], clause: Iterable[int]) -> bool:
        clause = make_clause(clause)
        if is_tautology(clause):
            return True
        return not self.satisfiable(subset, [-l for l in clause])

    def close(self) -> None:
        self._b.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def brute_force_models(f: CnfFormula) -> Iterator[tuple[int, ...]]:
    """Every model of f, by plain enumeration (reference path for small tests)."""
    _check_guard(f.space.n_total, None, "brute_force_models")
    for a in assignments(f.space.n_total):
        if evaluate(f, a):
            yield a


def pad(values: Sequence[int], n: int) -> tuple[int, ...]:
    return tuple(values) + (0,) * (n - len(values))


__all__ = [
    "Clause",
    "CnfFormula",
    "Literal",
    "SubsetOracle",
    "find_model",
    "VarSpace",
    "assignments",
    "brute_force_models",
    "clause_vars",
    "count_models",
    "discarded_assignments",
    "eval_clause",
    "evaluate",
    "guard_bits",
    "guard_clause",
    "is_satisfiable",
    "is_tautology",
    "make_clause",
    "parse_dimacs",
    "semantic_implies",
    "serialize_dimacs",
]

