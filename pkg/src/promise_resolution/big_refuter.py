"""Promise-resolution refutations of unsatisfiable 3CNFs under Lambda = eps * 2^n.

The pipeline picks clauses greedily.  If it finds few variable-disjoint
clauses, their variables hit every clause and a plain resolution refutation
is assembled from 2CNF refutations of all restrictions.  Otherwise the
disjoint clauses seed a small core V of variables on which K falsifies at
least a (1 - 2^-r) fraction of assignments.  A circuit family then maps its
inputs onto falsifying core assignments (with the remaining variables passed
through), and the proof uses the matching promise axiom.

Production mode uses c = 3 * ceil(log_{7/8}(eps/2)).  Test mode takes an
explicit small c and, when the clauses it yields are too few to falsify
enough core assignments, grows the core by further variables of K and, if
that fails, retries with c + 3.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .axioms import AxiomCnf, CircuitFamily, PromiseSpec, build_prm, derive_spec, layout
from .circuits import Circuit, CircuitBuilder, sop_outputs
from .cnf import Clause, CnfFormula, count_models, guard_bits, is_satisfiable, make_clause
from .errors import InfeasibleConstruction, SatisfiableInput
from .prover import derive
from .resolution import C2, INPUT, PROMISE, Proof, ProofBuilder, check_proof, plan_2cnf, replay_plan

DEFAULT_CORE_LIMIT = 5  # max core input bits in test mode
MAX_HITTING_BITS = 16


def constant_c(eps) -> int:
    """3 * ceil(log_{7/8}(eps / 2)), computed exactly."""
    eps = Fraction(eps)
    if not 0 < eps < 1:
        raise ValueError("eps must lie strictly between 0 and 1")
    m = 0
    while Fraction(7, 8) ** m > eps / 2:
        m += 1
    return 3 * m


@dataclass(frozen=True)
class Dichotomy:
    kind: str  # "hitting" or "matching"
    hitting_set: tuple[int, ...] = ()
    matching: tuple[Clause, ...] = ()


def hitting_or_matching(k: CnfFormula | Sequence[Clause], c: int) -> Dichotomy:
    """Greedy disjoint clauses: c of them, or the variables of fewer than c."""
    clauses = k.clauses if isinstance(k, CnfFormula) else k
    picked: list[Clause] = []
    used: set[int] = set()
    for cl in clauses:
        vs = {abs(l) for l in cl}
        if not vs or vs & used:
            continue
        picked.append(cl)
        used |= vs
        if len(picked) == c:
            return Dichotomy("matching", matching=tuple(picked))
    return Dichotomy("hitting", hitting_set=tuple(sorted(used)))


# --------------------------------------------------------------------------- case (i)


def hitting_bound(n: int, n_clauses: int, s: int) -> int:
    return (1 << s) * (C2 * n * n + n_clauses + n) + (1 << s)


def refute_via_hitting(k: CnfFormula, s_vars: Sequence[int], builder: ProofBuilder | None = None) -> Proof:
    """Refute k by splitting on every assignment to the hitting set."""
    s_vars = sorted(set(s_vars))
    if any(cl and not {abs(l) for l in cl} & set(s_vars) for cl in k.clauses):
        raise ValueError("S does not hit every clause of K")
    if () in k.clauses:
        b = builder or ProofBuilder()
        b.cite(INPUT, ())
        return b.build(k.space, False)
    if is_satisfiable(k):
        raise SatisfiableInput("K is satisfiable")
    b = builder or ProofBuilder()
    sset = set(s_vars)
    leaves: dict[tuple[int, ...], int] = {}
    for rho in itertools.product((0, 1), repeat=len(s_vars)):
        val = dict(zip(s_vars, rho))
        kept: list[int] = []
        restricted: list[Clause] = []
        for idx, cl in enumerate(k.clauses):
            if any(abs(l) in sset and val[abs(l)] == (l > 0) for l in cl):
                continue
            kept.append(idx)
            restricted.append(tuple(l for l in cl if abs(l) not in sset))
        plan = plan_2cnf(restricted)
        refs = [0] * len(restricted)
        for op in plan:
            if op[0] == "premise":
                refs[op[1]] = b.cite(INPUT, k.clauses[kept[op[1]]])
        leaves[rho] = replay_plan(plan, b, refs)

    def combine(prefix: tuple[int, ...]) -> int:
        if len(prefix) == len(s_vars):
            return leaves[prefix]
        x = s_vars[len(prefix)]
        d0 = combine(prefix + (0,))
        if x not in b.clause(d0):
            return d0
        d1 = combine(prefix + (1,))
        if -x not in b.clause(d1):
            return d1
        return b.resolve(d0, d1, x)

    combine(())
    return b.build(k.space, False)


# --------------------------------------------------------------------------- case (ii)


def _falsifying(k_clauses: Sequence[Clause], core: Sequence[int]) -> list[tuple[int, ...]]:
    """Assignments to core (lexicographic, first core variable most significant) falsifying K_V."""
    pos = {v: i for i, v in enumerate(core)}
    out = []
    for bits in itertools.product((0, 1), repeat=len(core)):
        if any(all(bits[pos[abs(l)]] != (l > 0) for l in cl) for cl in k_clauses):
            out.append(bits)
    return out


def _inside(k: CnfFormula, core: set[int]) -> list[Clause]:
    return [cl for cl in k.clauses if cl and {abs(l) for l in cl} <= core]


def find_core(k: CnfFormula, seed: Sequence[int], r: int, limit: int) -> tuple[int, ...] | None:
    """Smallest V containing seed (first in lexicographic order) with
    #models_V(K_V) <= 2^(|V| - r) and |V| > r."""
    seed = sorted(set(seed))
    others = sorted(k.variables() - set(seed))
    for extra in range(0, max(0, limit - len(seed)) + 1):
        for add in itertools.combinations(others, extra):
            core = tuple(sorted(seed + list(add)))
            if len(core) <= r:
                continue
            bad = _falsifying(_inside(k, set(core)), core)
            if len(bad) >= (1 << len(core)) - (1 << (len(core) - r)):
                return core
    return None


@dataclass(frozen=True)
class CoreFamily:
    family: CircuitFamily
    core: tuple[int, ...]
    core_inputs: int
    passthrough: dict  # X position (1-based) -> input index (1-based)
    t_clauses: tuple[Clause, ...]


def build_family_for_T(
    t_clauses: Sequence[Clause], spec: PromiseSpec, core: Sequence[int] | None = None
) -> CoreFamily:
    """Circuits whose images are disjoint consecutive blocks of falsifying core assignments."""
    if core is None:
        core = sorted({abs(l) for cl in t_clauses for l in cl})
    core = tuple(sorted(core))
    n, r, t = spec.n, spec.r, spec.t
    mc = len(core) - r
    if mc < 1 or mc > spec.n - r:
        raise InfeasibleConstruction(f"core of {len(core)} variables does not fit r={r}, n={n}")
    bad = _falsifying(t_clauses, core)
    if len(bad) < t << mc:
        raise InfeasibleConstruction(
            f"only {len(bad)} falsifying core assignments, need {t << mc}"
        )
    rest = [x for x in range(1, n + 1) if x not in core]
    passthrough = {x: mc + 1 + idx for idx, x in enumerate(rest)}
    members: list[Circuit] = []
    for i in range(1, t + 1):
        block = bad[(i - 1) << mc : i << mc]
        b = CircuitBuilder(n - r, f"M{i}")
        ins = [b.inp(j) for j in range(1, mc + 1)]
        tables = [[row[pos] for row in block] for pos in range(len(core))]
        core_out = dict(zip(core, sop_outputs(b, ins, tables)))
        outs = [core_out[x] if x in core_out else b.inp(passthrough[x]) for x in range(1, n + 1)]
        members.append(b.build(outs))
    return CoreFamily(CircuitFamily(spec, tuple(members)), core, mc, passthrough, tuple(t_clauses))


def _run_bound(premises: Sequence, order_len: int) -> int:
    vs = {abs(l) for c, _ in premises for l in c}
    return len(premises) + (1 << order_len) * (len(vs) + 1)


def _eliminate(b: ProofBuilder, ref: int, sides: Sequence[tuple[int, int]]) -> int:
    """Resolve ref against each (step, pivot literal in ref); a side missing the
    opposite literal already subsumes the goal and replaces ref."""
    for side, lit in sides:
        if -lit not in b.clause(side):
            ref = side
        elif lit in b.clause(ref):
            ref = b.resolve(ref, side, abs(lit))
    return ref


def _refute_matching(k: CnfFormula, cf: CoreFamily, b: ProofBuilder) -> tuple[AxiomCnf, int]:
    fam = cf.family
    spec = fam.spec
    ax = build_prm(fam)
    lay = layout(fam)
    t, mc = spec.t, cf.core_inputs
    core_pos = [x - 1 for x in cf.core]  # 0-based output positions
    w1, w2 = lay.blocks[0], lay.blocks[1]
    bound = 0

    def P(clause) -> tuple[Clause, str]:
        return (make_clause(clause), PROMISE)

    # (a) -q1 v -p_k for every member
    neg_p: list[tuple[int, int]] = []
    for kk in range(1, t + 1):
        g = [-lay.q1, -lay.p[kk - 1]]
        y, z = lay.y(kk), lay.z(kk)
        long_ref = b.cite(PROMISE, g + [-lay.v[j] for j in range(spec.n - spec.r)])
        for x, j in sorted(cf.passthrough.items()):
            i = x - 1
            a1, a2 = w1[j - 1], w2[j - 1]
            assert y[i] == a1 and z[i] == a2
            vj = lay.v[j - 1]
            unit = b.cite(PROMISE, g + [lay.u[i]])
            e1 = b.resolve(b.cite(PROMISE, g + [-lay.u[i], -a1, a2]), unit, lay.u[i])
            e2 = b.resolve(b.cite(PROMISE, g + [-lay.u[i], a1, -a2]), unit, lay.u[i])
            c1 = b.resolve(e1, b.cite(PROMISE, g + [vj, a1, a2]), a1)
            c2 = b.resolve(e2, b.cite(PROMISE, g + [vj, -a1, -a2]), a1)
            vref = b.resolve(c1, c2, a2)
            long_ref = b.resolve(long_ref, vref, vj)
        bound += 11 * len(cf.passthrough) + 1
        prem: list = [(b.clause(long_ref), long_ref)]
        prem += [(c, PROMISE) for c in lay.enc[(kk, 0)].clauses]
        prem += [(c, PROMISE) for c in lay.enc[(kk, 1)].clauses]
        for i in core_pos:
            prem += [P(g + [-lay.u[i], -y[i], z[i]]), P(g + [-lay.u[i], y[i], -z[i]]), P(g + [lay.u[i]])]
        for j in range(mc):
            prem += [P(g + [lay.v[j], w1[j], w2[j]]), P(g + [lay.v[j], -w1[j], -w2[j]])]
        order = w1[:mc] + w2[:mc]
        bound += _run_bound(prem, len(order))
        neg_p.append((derive(b, prem, [lay.q1, lay.p[kk - 1]], order), -lay.p[kk - 1]))
    top = b.cite(PROMISE, [-lay.q1] + lay.p)
    neg_q1 = _eliminate(b, top, [(ref, -lit) for ref, lit in neg_p])
    bound += t + 1

    # (c) -q2 via the pair blocks
    if lay.pairs:
        neg_pij = []
        for (i, j), pij in sorted(lay.pairs.items()):
            g = [-lay.q2, -pij]
            ya, zb = lay.pair_sides(i, j)
            prem = [(c, PROMISE) for c in lay.enc[(i, 0)].clauses]
            prem += [(c, PROMISE) for c in lay.enc[(j, 1)].clauses]
            for pos in core_pos:
                sv = lay.s[pos]
                prem += [P(g + [-sv, -ya[pos], zb[pos]]), P(g + [-sv, ya[pos], -zb[pos]]), P(g + [sv])]
            order = w1[:mc] + w2[:mc]
            bound += _run_bound(prem, len(order))
            neg_pij.append((derive(b, prem, [lay.q2, pij], order), -pij))
        top2 = b.cite(PROMISE, [-lay.q2] + [v for _, v in sorted(lay.pairs.items())])
        neg_q2 = _eliminate(b, top2, [(ref, -lit) for ref, lit in neg_pij])
        bound += len(lay.pairs) + 1
    else:
        neg_q2 = b.cite(PROMISE, [-lay.q2])
        bound += 1

    # (d, e) restriction part on the core against K_V
    guard = [lay.q1, lay.q2]
    prem = [(b.clause(neg_q1), neg_q1), (b.clause(neg_q2), neg_q2)]
    prem += [(c, INPUT) for c in cf.t_clauses]
    for kk in range(1, t + 1):
        prem += [(c, PROMISE) for c in lay.enc[(kk, 0)].clauses]
        y, f = lay.y(kk), lay.f[kk - 1]
        for i in core_pos:
            prem += [P(guard + [-f[i], -y[i], lay.x[i]]), P(guard + [-f[i], y[i], -lay.x[i]])]
            prem.append(P(guard + [-lay.h[kk - 1], f[i]]))
    prem.append(P(guard + lay.h))
    order = w1[:mc] + lay.h
    bound += _run_bound(prem, len(order))
    derive(b, prem, (), order)
    return ax, bound


# --------------------------------------------------------------------------- driver


@dataclass
class RefuteResult:
    proof: Proof
    axiom: AxiomCnf | None
    stats: dict = field(default_factory=dict)

    @property
    def bound(self) -> int:
        return self.stats["declared_bound"]


def refute_big(
    k: CnfFormula,
    eps,
    test_c: int | None = None,
    core_limit: int = DEFAULT_CORE_LIMIT,
    guard: int | None = None,
    self_check: bool = True,
) -> RefuteResult:
    """Refutation of an unsatisfiable 3CNF k under the promise eps * 2^n."""
    t0 = time.perf_counter()
    if k.width > 3:
        raise ValueError(f"refute_big handles 3CNFs only, got width {k.width}")
    n = k.space.n_original
    spec = derive_spec("big", eps, n)
    if k.space.n_total != n:
        raise ValueError("K must not contain extension variables")
    if is_satisfiable(k):
        models = count_models(k) if n <= guard_bits(guard) else None
        over = models is not None and not spec.within_promise(models)
        raise SatisfiableInput(
            "no refutation exists: K is satisfiable"
            + (f" with {models} models, above the promise" if over else ""),
            models,
        )
    if test_c is not None and (test_c < 3 or test_c % 3):
        raise ValueError("test c must be a positive multiple of 3")
    c = test_c if test_c is not None else constant_c(spec.param)
    r, t = spec.r, spec.t
    b = ProofBuilder()

    def finish(case: str, proof: Proof, axiom: AxiomCnf | None, bound: int, extra: dict) -> RefuteResult:
        stats = {
            "case": case,
            "c": c,
            "t": t,
            "r": r,
            "proof_size": proof.size,
            "proof_width": proof.width,
            "elapsed": round(time.perf_counter() - t0, 6),
            "declared_bound": bound,
        }
        stats.update(extra)
        if self_check:
            v = check_proof(k, axiom.cnf if axiom else None, proof)
            if not v.accepted:  # pragma: no cover - would be a construction bug
                raise AssertionError(f"self-check failed at step {v.failing_step}: {v.reason}")
        return RefuteResult(proof, axiom, stats)

    if () in k.clauses:
        b.cite(INPUT, ())
        return finish("hitting", b.build(k.space, False), None, 1, {"hitting_set": []})

    while True:
        d = hitting_or_matching(k, c // 3)
        if d.kind == "hitting":
            s = d.hitting_set
            if len(s) > MAX_HITTING_BITS:
                raise InfeasibleConstruction(f"hitting set of {len(s)} variables needs 2^{len(s)} restrictions")
            proof = refute_via_hitting(k, s, b)
            bound = hitting_bound(n, len(k.clauses), len(s))
            return finish("hitting", proof, None, bound, {"hitting_set": list(s)})
        seed = sorted({abs(l) for cl in d.matching for l in cl})
        if test_c is None:
            core = tuple(seed)
            if len(core) - r > core_limit:
                raise InfeasibleConstruction(
                    f"core of {len(core)} variables (c={c}) is beyond desk scale; use a test c"
                )
        else:
            core = find_core(k, seed, r, core_limit + r)
            if core is None or len(core) - r > core_limit:
                c += 3
                continue
        if len(core) - r > n - r or len(core) > n:
            raise InfeasibleConstruction("core larger than the variable set")
        cf = build_family_for_T(_inside(k, set(core)), spec, core)
        ax, bound = _refute_matching(k, cf, b)
        proof = b.build(ax.cnf.space, True)
        return finish("matching", proof, ax, bound, {"core": list(core), "core_inputs": cf.core_inputs})


__all__ = [
    "CoreFamily",
    "Dichotomy",
    "RefuteResult",
    "build_family_for_T",
    "constant_c",
    "find_core",
    "hitting_bound",
    "hitting_or_matching",
    "refute_big",
    "refute_via_hitting",
]
