"""Random 3CNF sampling and exact small-scale measures on clause collections.

Everything here is exhaustive: subset enumerations are bounded by an explicit
guard and refuse to run past it instead of sampling.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Sequence

import networkx as nx
import numpy as np

from .axioms import AxiomCnf, PromiseSpec, parse_fraction
from .cnf import (
    Clause,
    CnfFormula,
    SubsetOracle,
    VarSpace,
    clause_vars,
    find_model,
    is_satisfiable,
    make_clause,
    serialize_dimacs,
)
from .errors import GuardExceeded

GENERATOR_ID = "numpy-pcg64/1"
SUBSET_GUARD = 1 << 20
ETA_MAX_CLAUSES = 16


# --------------------------------------------------------------------------- generation


@dataclass(frozen=True)
class RandomSpec:
    n: int
    beta: Fraction
    seed: int
    generator_id: str = GENERATOR_ID

    def __post_init__(self):
        object.__setattr__(self, "beta", parse_fraction(self.beta))
        if self.n < 3:
            raise ValueError("random 3CNF needs n >= 3")
        if self.beta <= 0:
            raise ValueError("density must be positive")
        if not 0 <= self.seed < 1 << 64:
            raise ValueError("seed must fit in 64 bits")
        if self.generator_id != GENERATOR_ID:
            raise ValueError(f"unknown generator {self.generator_id!r}")

    @property
    def m(self) -> int:
        """Clause count: beta*n rounded half up, exactly."""
        return math.floor(self.beta * self.n + Fraction(1, 2))

    @property
    def universe(self) -> int:
        return 8 * math.comb(self.n, 3)

    def header(self) -> str:
        b = self.beta
        return f"seed {self.seed} gen {self.generator_id} beta {b.numerator}/{b.denominator}"


def unrank_clause(index: int, n: int) -> Clause:
    """Clause number ``index`` of the universe: triple index * 8 + sign bits.

    Triples are in lexicographic order; bit j of the sign part negates the
    j-th variable of the triple.
    """
    triple, signs = divmod(index, 8)
    if not 0 <= triple < math.comb(n, 3):
        raise ValueError("clause index outside the universe")
    vs = []
    lo = 1
    for slot in range(3, 0, -1):
        v = lo
        while True:
            block = math.comb(n - v, slot - 1)
            if triple < block:
                break
            triple -= block
            v += 1
        vs.append(v)
        lo = v + 1
    return tuple(-v if signs >> j & 1 else v for j, v in enumerate(vs))


def gen_random_3cnf(spec: RandomSpec) -> CnfFormula:
    """Draw ``spec.m`` clauses i.i.d. uniform from the 3-clause universe.

    One PCG64 stream seeded by ``spec.seed``; draw i is clause i.
    """
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    idx = rng.integers(0, spec.universe, size=spec.m, dtype=np.int64)
    return CnfFormula(VarSpace.plain(spec.n), [unrank_clause(int(i), spec.n) for i in idx])


def corpus_text(spec: RandomSpec) -> str:
    return serialize_dimacs(gen_random_3cnf(spec), comments=[spec.header()])


def parse_corpus_header(text: str) -> dict | None:
    for line in text.splitlines():
        parts = line.split()
        if len(parts) == 7 and parts[0] == "c" and parts[1] == "seed" and parts[3] == "gen" and parts[5] == "beta":
            return {"seed": int(parts[2]), "generator_id": parts[4], "beta": parts[6]}
    return None


# --------------------------------------------------------------------------- window


@dataclass(frozen=True)
class Window:
    """Size window [k/2, k] with k = 2n(80 beta)^(-2/(1-eps)).

    ``lo`` and ``hi`` are the integer sizes inside the real window (ceiling of
    the left end, floor of the right end), decided by exact integer
    comparisons; the float fields are for display only.
    """

    n: int
    beta: Fraction
    eps: Fraction
    lo: int
    hi: int
    k_float: float
    rounding: str = "inward"

    @property
    def empty(self) -> bool:
        return self.lo > self.hi

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "beta": str(self.beta),
            "eps": str(self.eps),
            "k": self.k_float,
            "k_half": self.k_float / 2,
            "k_exact": f"2*{self.n}*(80*{self.beta})^(-2/(1-{self.eps}))",
            "lo": self.lo,
            "hi": self.hi,
            "rounding": self.rounding,
        }


def _cmp_k(x: Fraction, n: int, beta: Fraction, eps: Fraction) -> int:
    """Sign of x - 2n(80 beta)^(-2b/(b-a)) for eps = a/b, without roots."""
    a, b = eps.numerator, eps.denominator
    lhs = x ** (b - a) * (80 * beta) ** (2 * b)
    rhs = Fraction(2 * n) ** (b - a)
    return (lhs > rhs) - (lhs < rhs)


def _first(pred) -> int:
    """Smallest s >= 0 with pred(s), for pred monotone increasing."""
    hi = 1
    while not pred(hi):
        hi *= 2
    lo = -1
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if pred(mid):
            hi = mid
        else:
            lo = mid
    return hi


def lower_bound_window(n: int, beta, eps) -> Window:
    beta, eps = parse_fraction(beta), parse_fraction(eps)
    if not 0 < eps < Fraction(1, 2):
        raise ValueError("eps must lie in (0, 1/2)")
    if beta <= 0 or n < 1:
        raise ValueError("need n >= 1 and beta > 0")
    hi = _first(lambda s: _cmp_k(Fraction(s), n, beta, eps) > 0) - 1
    lo = _first(lambda s: _cmp_k(Fraction(2 * s), n, beta, eps) >= 0)
    k = 2 * n * float(80 * beta) ** (-2 / (1 - float(eps)))
    return Window(n, beta, eps, lo, hi, k)


# --------------------------------------------------------------------------- measures


def _var_masks(clauses: Sequence[Clause]) -> list[int]:
    out = []
    for c in clauses:
        m = 0
        for lit in c:
            m |= 1 << abs(lit)
        out.append(m)
    return out


def _subset_count(m: int, sizes: range) -> int:
    return sum(math.comb(m, s) for s in sizes)


def _check_subsets(m: int, sizes: range, guard: int, what: str) -> None:
    total = _subset_count(m, sizes)
    if total > guard:
        raise GuardExceeded(f"{what}: {total} subsets exceeds guard {guard}")


def _clauses(k) -> list[Clause]:
    return list(k.clauses) if isinstance(k, CnfFormula) else [make_clause(c) for c in k]


def expansion_value(k, lo: int, hi: int, guard: int = SUBSET_GUARD) -> tuple[int, tuple[int, ...]] | None:
    """min 2|Vars(K')| - 3|K'| over sub-collections with lo <= |K'| <= hi.

    Returns (value, clause indices of a minimiser) or None for an empty range.
    """
    clauses = _clauses(k)
    sizes = range(max(lo, 1), min(hi, len(clauses)) + 1)
    if not sizes:
        return None
    _check_subsets(len(clauses), sizes, guard, "expansion")
    masks = _var_masks(clauses)
    best: tuple[int, tuple[int, ...]] | None = None
    for s in sizes:
        for sub in itertools.combinations(range(len(clauses)), s):
            acc = 0
            for i in sub:
                acc |= masks[i]
            val = 2 * acc.bit_count() - 3 * s
            if best is None or val < best[0]:
                best = (val, sub)
    return best


def expansion(k, beta=None, eps=None, window: tuple[int, int] | None = None, guard: int = SUBSET_GUARD):
    """Expansion over the density window, or over an explicit (lo, hi) override."""
    if window is None:
        w = lower_bound_window(_n_of(k), beta, eps)
        window = (w.lo, w.hi)
    res = expansion_value(k, *window, guard=guard)
    return None if res is None else res[0]


def _n_of(k) -> int:
    if isinstance(k, CnfFormula):
        return k.space.n_original or k.space.n_total
    return max((abs(l) for c in k for l in c), default=0)


@dataclass(frozen=True)
class Matchability:
    matchable: bool | None
    method: str
    witness: tuple[int, ...] | None = None

    def as_dict(self) -> dict:
        v = "unknown" if self.matchable is None else self.matchable
        return {"matchable": v, "method": self.method, "witness": list(self.witness) if self.witness else None}


def _hall_violation(clauses: Sequence[Clause], bound: int, guard: int) -> tuple[int, ...] | None:
    sizes = range(1, min(bound, len(clauses)) + 1)
    _check_subsets(len(clauses), sizes, guard, "matchability")
    masks = _var_masks(clauses)
    for s in sizes:
        for sub in itertools.combinations(range(len(clauses)), s):
            acc = 0
            for i in sub:
                acc |= masks[i]
            if acc.bit_count() < s:
                return sub
    return None


def system_of_representatives(clauses: Sequence[Clause]) -> dict[int, int] | None:
    """Clause index -> distinct variable, or None if no full matching exists."""
    g = nx.Graph()
    left = [("c", i) for i in range(len(clauses))]
    g.add_nodes_from(left, bipartite=0)
    for i, c in enumerate(clauses):
        for lit in c:
            g.add_edge(("c", i), ("v", abs(lit)))
    match = nx.bipartite.hopcroft_karp_matching(g, top_nodes=left)
    if any(node not in match for node in left):
        return None
    return {i: match[("c", i)][1] for i in range(len(clauses))}


def is_partially_matchable(k, bound: int, mode: str = "fast", guard: int = SUBSET_GUARD) -> Matchability:
    """Hall's condition |Vars(K')| >= |K'| for every K' with |K'| <= bound.

    ``exact`` enumerates; ``fast`` accepts on a clause-saturating matching
    and otherwise enumerates if within guard, else answers unknown.
    """
    clauses = _clauses(k)
    if mode not in ("fast", "exact"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "fast":
        if system_of_representatives(clauses) is not None:
            return Matchability(True, "matching")
        if _subset_count(len(clauses), range(1, min(bound, len(clauses)) + 1)) > guard:
            return Matchability(None, "unknown")
    w = _hall_violation(clauses, bound, guard)
    return Matchability(w is None, "exact", w)


def boundary(k) -> set[int]:
    """Variables occurring in exactly one clause."""
    seen: dict[int, int] = {}
    for c in _clauses(k):
        for v in clause_vars(c):
            seen[v] = seen.get(v, 0) + 1
    return {v for v, cnt in seen.items() if cnt == 1}


def variables(k) -> set[int]:
    return set().union(*(clause_vars(c) for c in _clauses(k))) if _clauses(k) else set()


# --------------------------------------------------------------------------- eta


class EtaOracle:
    """eta(D) = min |K'| with axiom + K' |= D, by selector-guarded SAT calls."""

    def __init__(self, k, axiom: AxiomCnf | CnfFormula | None = None, max_clauses: int = ETA_MAX_CLAUSES):
        self.clauses = _clauses(k)
        if len(self.clauses) > max_clauses:
            raise GuardExceeded(f"eta: {len(self.clauses)} clauses exceeds limit {max_clauses}")
        base: list[Clause] = []
        top = max((abs(l) for c in self.clauses for l in c), default=0)
        if axiom is not None:
            cnf = axiom.cnf if isinstance(axiom, AxiomCnf) else axiom
            base = list(cnf.clauses)
            top = max(top, cnf.n_vars)
        self._top = top
        self._oracle = SubsetOracle(base, self.clauses, top + 1)
        self._memo: dict[Clause, tuple[float, tuple[int, ...] | None]] = {}

    def witness(self, d: Iterable[int]) -> tuple[float, tuple[int, ...] | None]:
        d = make_clause(d)
        if d in self._memo:
            return self._memo[d]
        res: tuple[float, tuple[int, ...] | None] = (math.inf, None)
        for s in range(len(self.clauses) + 1):
            hit = next(
                (sub for sub in itertools.combinations(range(len(self.clauses)), s) if self._oracle.implies(sub, d)),
                None,
            )
            if hit is not None:
                res = (s, hit)
                break
        self._memo[d] = res
        return res

    def __call__(self, d: Iterable[int]) -> float:
        return self.witness(d)[0]

    def close(self) -> None:
        self._oracle.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def eta(k, d: Iterable[int], axiom: AxiomCnf | CnfFormula | None = None) -> float:
    """Exact eta; ``math.inf`` when no sub-collection implies ``d``."""
    with EtaOracle(k, axiom) as o:
        return o(d)


def resolvent_pairs(clauses: Sequence[Clause]) -> Iterator[tuple[Clause, Clause, Clause]]:
    """All (E, F, D) with D the non-tautological resolvent of E and F."""
    uniq = sorted(set(clauses))
    for a, b in itertools.combinations(uniq, 2):
        clash = [l for l in a if -l in b]
        if len(clash) != 1:
            continue
        x = clash[0]
        yield a, b, make_clause([l for l in a if l != x] + [l for l in b if l != -x])


def sample_resolvable_pairs(k, rng: np.random.Generator, count: int, rounds: int = 2) -> list[tuple[Clause, Clause, Clause]]:
    """Resolvable pairs drawn from K closed under ``rounds`` resolution steps."""
    pool = sorted(set(_clauses(k)))
    for _ in range(rounds):
        new = {d for _, _, d in resolvent_pairs(pool)}
        pool = sorted(set(pool) | new)
    pairs = list(resolvent_pairs(pool))
    if len(pairs) <= count:
        return pairs
    pick = rng.choice(len(pairs), size=count, replace=False)
    return [pairs[int(i)] for i in sorted(pick)]


def subadditivity_violations(oracle: EtaOracle, pairs: Iterable[tuple[Clause, Clause, Clause]]) -> list:
    out = []
    for e, f, d in pairs:
        if oracle(e) + oracle(f) < oracle(d):
            out.append((e, f, d))
    return out


# --------------------------------------------------------------------------- structural checks


@dataclass
class FlipOutcome:
    var: int
    clause: Clause
    alpha: dict[int, bool] | None
    holds: bool


def flip_check(sub: Sequence[Clause], d: Iterable[int], var: int) -> FlipOutcome:
    """The boundary-flip step for a boundary variable ``var`` not in ``d``.

    Finds alpha with (sub minus the clause holding var) true and d false,
    sets var to satisfy that clause, and re-evaluates. ``alpha`` is None when
    no starting assignment exists (sub without that clause already implies d).
    """
    d = make_clause(d)
    sub = [make_clause(c) for c in sub]
    owners = [c for c in sub if var in clause_vars(c)]
    if len(owners) != 1:
        raise ValueError(f"x{var} is not a boundary variable")
    if var in clause_vars(d):
        raise ValueError(f"x{var} occurs in D")
    ki = owners[0]
    rest = [c for c in sub if c is not ki]
    alpha = find_model(rest, [-l for l in d])
    if alpha is None:
        return FlipOutcome(var, ki, None, False)
    lit = next(l for l in ki if abs(l) == var)
    alpha[var] = lit > 0
    sat_sub = all(any(alpha.get(abs(l), False) == (l > 0) for l in c) for c in sub)
    d_false = all(alpha.get(abs(l), False) != (l > 0) for l in d)
    return FlipOutcome(var, ki, alpha, sat_sub and d_false)


@dataclass
class MatchCheck:
    checked: int = 0
    premise_held: int = 0
    violations: list = field(default_factory=list)


def matchability_extension_check(k, axiom: AxiomCnf, bound: int, guard: int = SUBSET_GUARD) -> MatchCheck:
    """Desk form of the matchability argument against a promise axiom.

    For each K' with |K'| <= bound: a system of distinct representatives
    fixes |K'| variables, leaving 2^(n-|K'|) extensions satisfying K'. When
    that exceeds Lambda the axiom cannot discard them all, so axiom + K'
    must be satisfiable; any K' where this fails is a violation.
    """
    clauses = _clauses(k)
    spec: PromiseSpec = axiom.spec
    sizes = range(1, min(bound, len(clauses)) + 1)
    _check_subsets(len(clauses), sizes, guard, "matchability check")
    out = MatchCheck()
    for s in sizes:
        for sub in itertools.combinations(range(len(clauses)), s):
            kp = [clauses[i] for i in sub]
            out.checked += 1
            if system_of_representatives(kp) is None:
                continue
            if spec.within_promise(1 << (spec.n - s)):
                continue
            out.premise_held += 1
            if not is_satisfiable(list(axiom.cnf.clauses) + kp):
                out.violations.append(sub)
    return out


__all__ = [
    "ETA_MAX_CLAUSES",
    "GENERATOR_ID",
    "SUBSET_GUARD",
    "EtaOracle",
    "FlipOutcome",
    "MatchCheck",
    "Matchability",
    "RandomSpec",
    "Window",
    "boundary",
    "corpus_text",
    "eta",
    "expansion",
    "expansion_value",
    "flip_check",
    "gen_random_3cnf",
    "is_partially_matchable",
    "lower_bound_window",
    "matchability_extension_check",
    "parse_corpus_header",
    "resolvent_pairs",
    "sample_resolvable_pairs",
    "subadditivity_violations",
    "system_of_representatives",
    "unrank_clause",
    "variables",
]
