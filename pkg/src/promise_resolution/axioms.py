"""Promise axioms PRM_{C,Lambda} as CNF, with decoding tables and validation.

Two promise shapes are supported:

* big, Lambda = eps * 2^n: r = ceil(log2(1/eps)), t = 2^r - 1 circuits, each
  with n - r inputs; every circuit is applied to two shared input blocks W1, W2.
* small, Lambda = 2^(delta*n): t = ceil((1-delta)*n) circuits, circuit i has
  n - i inputs and its own pair of blocks W_i, W'_i.

Circuit encodings are emitted once, without selector guards.  They define
their output variables as functions of the input blocks, so every assignment
to the blocks extends uniquely; guarding them (as a literal reading of the
nested construction would) lets the restriction part pick arbitrary outputs
and the axiom would discard nothing.  All other groups carry the selector
guards: ``-q1 v -p_k`` for the k-th non-injectivity block, ``-q2 v -p_ij`` for
the pair blocks and ``q1 v q2`` for the restriction part.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .circuits import (
    AND,
    IN,
    NOT,
    OR,
    Circuit,
    CircuitBuilder,
    EncodedCircuit,
    Gate,
    encode,
    gate_clauses,
    parse_circuits,
    serialize_circuit,
)
from .cnf import Clause, CnfFormula, VarSpace, guard_clause, make_clause
from .errors import ArityError, ParseError, StructureError

BIG, SMALL = "big", "small"
TABLE_FORMAT = "PRM-TBL v1"


# --------------------------------------------------------------------------- specs


def _ceil_log2_inverse(eps: Fraction) -> int:
    r = 0
    while eps * (1 << r) < 1:
        r += 1
    return r


@dataclass(frozen=True)
class PromiseSpec:
    kind: str
    param: Fraction
    n: int

    @property
    def r(self) -> int | None:
        return _ceil_log2_inverse(self.param) if self.kind == BIG else None

    @property
    def t(self) -> int:
        if self.kind == BIG:
            return (1 << self.r) - 1
        return math.ceil((1 - self.param) * self.n)

    @property
    def widths(self) -> tuple[int, ...]:
        if self.kind == BIG:
            return (self.n - self.r,) * self.t
        return tuple(self.n - i for i in range(1, self.t + 1))

    @property
    def lam(self) -> Fraction | None:
        """Lambda as an exact rational for the big promise; None when irrational."""
        if self.kind == BIG:
            return self.param * (1 << self.n)
        e = self.param * self.n
        return Fraction(1 << int(e)) if e.denominator == 1 else None

    @property
    def lam_float(self) -> float:
        if self.kind == BIG:
            return float(self.param) * 2.0**self.n
        return 2.0 ** (float(self.param) * self.n)

    def within_promise(self, count: int) -> bool:
        """count <= Lambda, decided exactly."""
        if self.kind == BIG:
            return count * self.param.denominator <= self.param.numerator << self.n
        p, q = self.param.numerator, self.param.denominator
        return count**q <= 1 << (p * self.n)

    def above_half_promise(self, count: int) -> bool:
        """count >= Lambda / 2, decided exactly."""
        if self.kind == BIG:
            return 2 * count * self.param.denominator >= self.param.numerator << self.n
        p, q = self.param.numerator, self.param.denominator
        return (2 * count) ** q >= 1 << (p * self.n)

    def header(self) -> str:
        return f"promise {self.kind} {self.param.numerator}/{self.param.denominator} n {self.n}"

    def as_dict(self) -> dict:
        return {
            "kind": self.kind,
            "param": f"{self.param.numerator}/{self.param.denominator}",
            "n": self.n,
            "t": self.t,
            "r": self.r,
            "widths": list(self.widths),
        }


def parse_fraction(text: str | Fraction | int) -> Fraction:
    if isinstance(text, (Fraction, int)):
        return Fraction(text)
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError):
        raise ValueError(f"not a rational number: {text!r}") from None


def derive_spec(kind: str, param, n: int) -> PromiseSpec:
    kind = kind.lower()
    val = parse_fraction(param)
    if kind not in (BIG, SMALL):
        raise ValueError(f"promise kind must be 'big' or 'small', got {kind!r}")
    if not 0 < val < 1:
        raise ValueError(f"promise parameter must lie strictly between 0 and 1, got {val}")
    if n < 1:
        raise ValueError("n must be at least 1")
    spec = PromiseSpec(kind, val, int(n))
    if kind == BIG and spec.n - spec.r < 1:
        raise ValueError(f"big promise with r={spec.r} leaves no input bits at n={n}")
    if kind == SMALL and spec.t > spec.n - 1:
        raise ValueError(f"small promise with t={spec.t} leaves no input bits at n={n}")
    return spec


def image_size_expected(spec: PromiseSpec) -> int:
    if spec.kind == BIG:
        return spec.t << (spec.n - spec.r)
    return (1 << spec.n) - (1 << (spec.n - spec.t))


# --------------------------------------------------------------------------- families


@dataclass(frozen=True)
class CircuitFamily:
    spec: PromiseSpec
    members: tuple[Circuit, ...]

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(self.members))

    def check_arity(self) -> None:
        if len(self.members) != self.spec.t:
            raise ArityError(f"promise needs {self.spec.t} circuits, family has {len(self.members)}")
        for k, (c, m) in enumerate(zip(self.members, self.spec.widths), 1):
            if c.n_inputs != m:
                raise ArityError(f"circuit {k} has {c.n_inputs} inputs, promise needs {m}")
            if c.n_outputs != self.spec.n:
                raise ArityError(f"circuit {k} has {c.n_outputs} outputs, promise needs {self.spec.n}")


def serialize_family(fam: CircuitFamily) -> str:
    return fam.spec.header() + "\n" + "".join(serialize_circuit(c) for c in fam.members)


def parse_family(text: str) -> CircuitFamily:
    lines = text.splitlines()
    head = None
    for i, raw in enumerate(lines):
        line = raw.split("#", 1)[0].strip()
        if line:
            head = (i, line)
            break
    if head is None:
        raise ParseError("empty family file")
    i, line = head
    tok = line.split()
    if len(tok) != 5 or tok[0] != "promise" or tok[3] != "n":
        raise ParseError(f"line {i + 1}: malformed promise header {line!r}")
    try:
        spec = derive_spec(tok[1], tok[2], int(tok[4]))
    except ValueError as e:
        raise ParseError(f"line {i + 1}: {e}") from None
    members = parse_circuits(lines[i + 1 :], first_lineno=i + 2)
    return CircuitFamily(spec, tuple(members))


def _xor(b: CircuitBuilder, x: int, y: int) -> int:
    return b.disj(b.conj(x, b.neg(y)), b.conj(b.neg(x), y))


def _scramble(b: CircuitBuilder, wires: list[int], rng: np.random.Generator | None, layers: int) -> list[int]:
    """Apply random reversible gates (NOT, CNOT, Toffoli) to the wires."""
    if rng is None or len(wires) == 0:
        return wires
    wires = list(wires)
    for _ in range(layers):
        op = int(rng.integers(3)) if len(wires) >= 3 else int(rng.integers(min(2, len(wires))))
        if op == 0:
            a = int(rng.integers(len(wires)))
            wires[a] = b.neg(wires[a])
        elif op == 1:
            a, c = (int(v) for v in rng.choice(len(wires), size=2, replace=False))
            wires[c] = _xor(b, wires[c], wires[a])
        else:
            a, d, c = (int(v) for v in rng.choice(len(wires), size=3, replace=False))
            wires[c] = _xor(b, wires[c], b.conj(wires[a], wires[d]))
    return wires


def standard_family(
    spec: PromiseSpec, rng: np.random.Generator | None = None, layers: int = 0
) -> CircuitFamily:
    """Injective family with pairwise disjoint images of the expected total size.

    Big: member i outputs the r-bit binary code of i followed by its input.
    Small: member i outputs 0^(i-1) 1 followed by its input.  With an rng,
    the input is first passed through random reversible gates.
    """
    members = []
    for i, m in enumerate(spec.widths, 1):
        b = CircuitBuilder(m, f"M{i}")
        wires = _scramble(b, [b.inp(j) for j in range(1, m + 1)], rng, layers)
        if spec.kind == BIG:
            prefix = [(i >> (spec.r - 1 - j)) & 1 for j in range(spec.r)]
        else:
            prefix = [0] * (i - 1) + [1]
        outs = [b.const(bit) for bit in prefix] + wires
        members.append(b.build(outs))
    return CircuitFamily(spec, tuple(members))


def broken_family(spec: PromiseSpec, rng: np.random.Generator, mode: str) -> CircuitFamily:
    """A family violating the premise: 'noninjective' or 'overlap'."""
    fam = standard_family(spec, rng, layers=int(rng.integers(3)))
    members = list(fam.members)
    k = int(rng.integers(len(members)))
    if mode == "noninjective":
        c = members[k]
        m = c.n_inputs
        b = CircuitBuilder(m, c.name)
        ins = [b.inp(j) for j in range(1, m + 1)]
        # output ignores input 1 when m >= 2, or is constant when m == 1
        w = ins[1:] if m >= 2 else []
        outs = [b.const(0)] * (spec.n - len(w)) + w
        members[k] = b.build(outs)
    elif mode == "overlap":
        if len(members) < 2:
            raise ValueError("overlap needs at least two members")
        j = (k + 1) % len(members)
        if spec.kind == BIG:
            members[j] = members[k]
        else:
            # reuse member k's outputs, dropping or padding inputs to fit j's width
            src = members[k]
            m = members[j].n_inputs
            b = CircuitBuilder(m, members[j].name)
            ins = [b.inp(x) for x in range(1, m + 1)]
            pad = [b.const(0)] * max(0, src.n_inputs - m)
            vals = ins[: src.n_inputs] + pad
            outs = _replay(b, src, vals)
            members[j] = b.build(outs)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return CircuitFamily(spec, tuple(members))


def _replay(b: CircuitBuilder, src: Circuit, inputs: list[int]) -> list[int]:
    ids: list[int] = []
    for g in src.gates:
        if g.kind == IN:
            ids.append(inputs[g.args[0] - 1])
        elif g.kind == NOT:
            ids.append(b.neg(ids[g.args[0]]))
        else:
            x, y = ids[g.args[0]], ids[g.args[1]]
            if x == y:
                ids.append(x)
            else:
                ids.append(b.conj(x, y) if g.kind == AND else b.disj(x, y))
    return [ids[o] for o in src.outputs]


# --------------------------------------------------------------------------- layout


class _Alloc:
    def __init__(self, start: int):
        self.next = start

    def take(self, k: int) -> list[int]:
        out = list(range(self.next, self.next + k))
        self.next += k
        return out


@dataclass
class Layout:
    """Variable allocation of one axiom: X, W blocks, encodings, selectors."""

    spec: PromiseSpec
    x: list[int]
    blocks: list[list[int]]
    enc: dict[tuple[int, int], EncodedCircuit]
    u: list[int]
    v: list[int]
    p: list[int]
    pairs: dict[tuple[int, int], int]
    s: list[int]
    f: list[list[int]]
    h: list[int]
    q1: int
    q2: int
    n_total: int

    def copies(self, k: int) -> tuple[int, int]:
        """Block indices (first copy, second copy) fed to member k (1-based)."""
        if self.spec.kind == BIG:
            return (0, 1)
        return (k - 1, self.spec.t + k - 1)

    def y(self, k: int) -> tuple[int, ...]:
        return self.enc[(k, 0)].output_vars

    def z(self, k: int) -> tuple[int, ...]:
        return self.enc[(k, 1)].output_vars

    def pair_sides(self, i: int, j: int) -> tuple[tuple[int, ...], tuple[int, ...]]:
        if self.spec.kind == BIG:
            return self.y(i), self.z(j)
        return self.y(i), self.y(j)


def layout(fam: CircuitFamily, check: bool = True) -> Layout:
    spec = fam.spec
    if check:
        fam.check_arity()
    n, t = spec.n, len(fam.members)
    a = _Alloc(1)
    x = a.take(n)
    if spec.kind == BIG:
        m = fam.members[0].n_inputs if fam.members else 0
        blocks = [a.take(m), a.take(m)]
    else:
        blocks = [a.take(c.n_inputs) for c in fam.members]
        blocks += [a.take(c.n_inputs) for c in fam.members]
    enc: dict[tuple[int, int], EncodedCircuit] = {}
    for k, c in enumerate(fam.members, 1):
        first, second = (0, 1) if spec.kind == BIG else (k - 1, t + k - 1)
        for copy, blk in ((0, first), (1, second)):
            e = encode(c, blocks[blk], a.next)
            a.next = e.next_var
            enc[(k, copy)] = e
    u = a.take(n)
    v = a.take(max((c.n_inputs for c in fam.members), default=0))
    p = a.take(t)
    pairs = {}
    for i in range(1, t + 1):
        for j in range(i + 1, t + 1):
            pairs[(i, j)] = a.take(1)[0]
    s = a.take(n) if pairs else []
    f = [a.take(n) for _ in range(t)]
    h = a.take(t)
    q1, q2 = a.take(2)
    return Layout(spec, x, blocks, enc, u, v, p, pairs, s, f, h, q1, q2, a.next - 1)


# --------------------------------------------------------------------------- groups


def _inj_body(lay: Layout, fam: CircuitFamily, k: int) -> list[Clause]:
    """Groups 2-5 of the k-th non-injectivity block (no encodings)."""
    y, z = lay.y(k), lay.z(k)
    b1, b2 = lay.copies(k)
    w1, w2 = lay.blocks[b1], lay.blocks[b2]
    m = fam.members[k - 1].n_inputs
    out: list[Clause] = []
    for i in range(lay.spec.n):
        out.append(make_clause((-lay.u[i], -y[i], z[i])))
        out.append(make_clause((-lay.u[i], y[i], -z[i])))
    for i in range(m):
        out.append(make_clause((lay.v[i], w1[i], w2[i])))
        out.append(make_clause((lay.v[i], -w1[i], -w2[i])))
    for i in range(lay.spec.n):
        out.append((lay.u[i],))
    out.append(make_clause([-lay.v[i] for i in range(m)]))
    return out


def _encodings_of(lay: Layout, k: int) -> list[Clause]:
    return list(lay.enc[(k, 0)].clauses) + list(lay.enc[(k, 1)].clauses)


def _dsj_body(lay: Layout, i: int, j: int) -> list[Clause]:
    a, b = lay.pair_sides(i, j)
    out: list[Clause] = []
    for l in range(lay.spec.n):
        out.append(make_clause((-lay.s[l], -a[l], b[l])))
        out.append(make_clause((-lay.s[l], a[l], -b[l])))
    for l in range(lay.spec.n):
        out.append((lay.s[l],))
    return out


def _rst(lay: Layout) -> list[Clause]:
    out: list[Clause] = []
    t = len(lay.h)
    for k in range(1, t + 1):
        y = lay.y(k)
        fk = lay.f[k - 1]
        for i in range(lay.spec.n):
            out.append(make_clause((-fk[i], -y[i], lay.x[i])))
            out.append(make_clause((-fk[i], y[i], -lay.x[i])))
    for k in range(1, t + 1):
        for i in range(lay.spec.n):
            out.append(make_clause((-lay.h[k - 1], lay.f[k - 1][i])))
    out.append(make_clause(lay.h))
    return out


def _space(lay: Layout) -> VarSpace:
    return VarSpace(lay.spec.n, lay.n_total)


def build_neg_inj_k(fam: CircuitFamily, k: int, lay: Layout | None = None) -> CnfFormula:
    """The k-th non-injectivity block: both encodings plus groups 2-5."""
    lay = lay or layout(fam)
    return CnfFormula(_space(lay), tuple(_encodings_of(lay, k) + _inj_body(lay, fam, k)))


def build_neg_inj(fam: CircuitFamily, lay: Layout | None = None) -> CnfFormula:
    lay = lay or layout(fam)
    out: list[Clause] = []
    for k in range(1, len(fam.members) + 1):
        out += guard_clause([-lay.p[k - 1]], _encodings_of(lay, k) + _inj_body(lay, fam, k))
    out.append(make_clause(lay.p))
    return CnfFormula(_space(lay), tuple(out))


def build_neg_dsj(fam: CircuitFamily, lay: Layout | None = None) -> CnfFormula:
    """Pair blocks guarded by -p_ij, plus the disjunction of all p_ij.

    With a single member there are no pairs; the result is the empty clause,
    i.e. the (unsatisfiable) empty disjunction.
    """
    lay = lay or layout(fam)
    out: list[Clause] = []
    for (i, j), pij in lay.pairs.items():
        out += guard_clause([-pij], _encodings_of(lay, i) + _encodings_of(lay, j) + _dsj_body(lay, i, j))
    out.append(make_clause(lay.pairs.values()))
    return CnfFormula(_space(lay), tuple(out))


def build_rst(fam: CircuitFamily, lay: Layout | None = None) -> CnfFormula:
    lay = lay or layout(fam)
    return CnfFormula(_space(lay), tuple(_rst(lay)))


# --------------------------------------------------------------------------- PRM


@dataclass(frozen=True)
class AxiomCnf:
    cnf: CnfFormula
    tables: dict
    family: CircuitFamily
    groups: dict = field(default_factory=dict, compare=False)

    @property
    def spec(self) -> PromiseSpec:
        return self.family.spec


def _tables(lay: Layout, fam: CircuitFamily) -> dict:
    encs = []
    for (k, copy), e in sorted(lay.enc.items()):
        gates = []
        for pos, var in sorted(e.gate_var_map.items()):
            g = fam.members[k - 1].gates[pos]
            if g.kind == IN:
                continue
            gates.append([var, g.kind, [e.gate_var_map[a] for a in g.args]])
        encs.append(
            {
                "member": k,
                "copy": copy,
                "block": lay.copies(k)[copy],
                "outputs": list(e.output_vars),
                "gates": gates,
            }
        )
    return {
        "format": TABLE_FORMAT,
        "promise": {
            "kind": lay.spec.kind,
            "param": f"{lay.spec.param.numerator}/{lay.spec.param.denominator}",
            "n": lay.spec.n,
        },
        "n_total": lay.n_total,
        "x": lay.x,
        "blocks": lay.blocks,
        "encodings": encs,
        "u": lay.u,
        "v": lay.v,
        "p": lay.p,
        "pairs": [[i, j, var] for (i, j), var in sorted(lay.pairs.items())],
        "s": lay.s,
        "f": lay.f,
        "h": lay.h,
        "q1": lay.q1,
        "q2": lay.q2,
        "chain": [],
    }


def build_prm(fam: CircuitFamily, check: bool = True) -> AxiomCnf:
    """PRM_{C,Lambda}: encodings, then -q1 (+)v -INJ, -q2 (+)v -DSJ, q1 (+)v q2 (+)v RST."""
    lay = layout(fam, check)
    t = len(fam.members)
    enc: list[Clause] = []
    for k in range(1, t + 1):
        enc += _encodings_of(lay, k)
    inj: list[Clause] = []
    for k in range(1, t + 1):
        inj += guard_clause([-lay.q1, -lay.p[k - 1]], _inj_body(lay, fam, k))
    inj.append(make_clause([-lay.q1] + lay.p))
    dsj: list[Clause] = []
    if lay.pairs:
        for (i, j), pij in lay.pairs.items():
            dsj += guard_clause([-lay.q2, -pij], _dsj_body(lay, i, j))
        dsj.append(make_clause([-lay.q2] + list(lay.pairs.values())))
    else:
        dsj.append((-lay.q2,))
    rst = guard_clause([lay.q1, lay.q2], _rst(lay))
    cnf = CnfFormula(_space(lay), tuple(enc + inj + dsj + rst))
    groups = {"encodings": len(enc), "inj": len(inj), "dsj": len(dsj), "rst": len(rst)}
    return AxiomCnf(cnf, _tables(lay, fam), fam, groups)


# --------------------------------------------------------------------------- tables I/O


def serialize_tables(tables: dict) -> str:
    return json.dumps(tables, sort_keys=True, separators=(",", ":")) + "\n"


def parse_tables(text: str) -> dict:
    try:
        tables = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"table file is not valid JSON: {e}") from None
    if not isinstance(tables, dict) or tables.get("format") != TABLE_FORMAT:
        raise ParseError(f"table file must declare format {TABLE_FORMAT!r}")
    return tables


# --------------------------------------------------------------------------- validation


def _decode_gate(var: int, clauses: list[Clause]) -> Gate:
    """Recover (kind, operand vars) from the clauses defining gate variable ``var``."""
    cs = sorted(set(clauses))
    if len(clauses) != len(cs):
        raise StructureError(f"duplicated gate clauses for variable {var}")
    operands = sorted({abs(l) for c in cs for l in c} - {var})
    if len(cs) == 2 and len(operands) == 1:
        kind_candidates = [(NOT, tuple(operands))]
    elif len(cs) == 4 and len(operands) == 2:
        kind_candidates = [(AND, tuple(operands)), (OR, tuple(operands))]
    else:
        raise StructureError(f"clauses for variable {var} match no gate pattern")
    for kind, ops in kind_candidates:
        if sorted(gate_clauses(kind, ops, var)) == cs:
            return Gate(kind, ops)
    raise StructureError(f"clauses for variable {var} match no gate pattern")


def decode_family(cnf: CnfFormula, tables: dict) -> CircuitFamily:
    """Rebuild the circuit family from the encoding clauses and role tables."""
    try:
        pr = tables["promise"]
        spec = derive_spec(pr["kind"], pr["param"], int(pr["n"]))
        blocks = [list(b) for b in tables["blocks"]]
        encs = tables["encodings"]
        roles = set(tables["x"]) | {v for b in blocks for v in b}
        for key in ("u", "v", "p", "s", "h", "chain"):
            roles |= set(tables[key])
        roles |= {v for row in tables["f"] for v in row}
        roles |= {var for _, _, var in tables["pairs"]}
        roles |= {tables["q1"], tables["q2"]}
    except (KeyError, TypeError, ValueError) as e:
        raise StructureError(f"malformed tables: {e}") from None

    if cnf.space.n_original != spec.n or list(tables["x"]) != list(range(1, spec.n + 1)):
        raise ArityError(f"axiom has {cnf.space.n_original} original variables, promise needs {spec.n}")
    t = spec.t
    expected_blocks = 2 if spec.kind == BIG else 2 * t
    if len(blocks) != expected_blocks:
        raise ArityError(f"expected {expected_blocks} input blocks, tables list {len(blocks)}")
    for idx, b in enumerate(blocks):
        want = spec.widths[0] if spec.kind == BIG else spec.widths[idx % t]
        if len(b) != want:
            raise ArityError(f"input block {idx} has {len(b)} bits, promise needs {want}")

    # gate variables: defined by the clauses whose largest variable they are
    selectors = roles - set(tables["x"]) - {v for b in blocks for v in b}
    defining: dict[int, list[Clause]] = {}
    for c in cnf.clauses:
        vs = {abs(l) for l in c}
        if not vs or vs & selectors:
            continue
        top = max(vs)
        if top in roles:
            continue
        defining.setdefault(top, []).append(c)
    gates = {var: _decode_gate(var, cs) for var, cs in defining.items()}

    members: dict[int, Circuit] = {}
    for e in encs:
        k, copy = int(e["member"]), int(e["copy"])
        blk = (0, 1)[copy] if spec.kind == BIG else (k - 1 if copy == 0 else t + k - 1)
        if not 1 <= k <= t:
            raise ArityError(f"encoding for member {k} but promise has {t} members")
        if len(e["outputs"]) != spec.n:
            raise ArityError(f"member {k} has {len(e['outputs'])} outputs, promise needs {spec.n}")
        circ = _rebuild(e["outputs"], blocks[blk], gates, f"M{k}")
        if copy == 0:
            members[k] = circ
    if sorted(members) != list(range(1, t + 1)):
        raise StructureError("tables do not list an encoding for every member")
    return CircuitFamily(spec, tuple(members[k] for k in range(1, t + 1)))


def _rebuild(outputs: Sequence[int], block: Sequence[int], gates: dict[int, Gate], name: str) -> Circuit:
    pos_in_block = {v: j for j, v in enumerate(block, 1)}
    need: set[int] = set()
    stack = list(outputs)
    while stack:
        v = stack.pop()
        if v in need:
            continue
        need.add(v)
        if v in pos_in_block:
            continue
        if v not in gates:
            raise StructureError(f"variable {v} is neither an input of its block nor a decodable gate")
        stack.extend(gates[v].args)
    order = sorted(v for v in need if v in pos_in_block) + sorted(v for v in need if v not in pos_in_block)
    idx = {v: i for i, v in enumerate(order)}
    glist = []
    for v in order:
        if v in pos_in_block:
            glist.append(Gate(IN, (pos_in_block[v],)))
        else:
            g = gates[v]
            if any(idx[a] >= idx[v] for a in g.args):
                raise StructureError(f"gate variable {v} refers to a later variable")
            glist.append(Gate(g.kind, tuple(idx[a] for a in g.args)))
    return Circuit(len(block), tuple(glist), tuple(idx[v] for v in outputs), name)


def validate_axiom_instance(cnf: CnfFormula, tables: dict) -> PromiseSpec:
    """Decode the circuits, check arities and re-derive the exact clause multiset."""
    fam = decode_family(cnf, tables)
    fam.check_arity()
    rebuilt = build_prm(fam)
    chain = list(tables.get("chain", []))
    target = rebuilt.cnf
    if chain:
        target = to_constant_width(target, int(tables.get("chain_width", 3)))
    if target.space != cnf.space:
        raise StructureError(
            f"variable space {cnf.space} does not match the decoded axiom {target.space}"
        )
    have, want = Counter(cnf.clauses), Counter(target.clauses)
    if have != want:
        if set(have) == set(want):
            raise StructureError("duplicated promise axiom material")
        extra = sum((have - want).values())
        missing = sum((want - have).values())
        raise StructureError(
            f"clauses differ from the decoded axiom ({extra} unexpected, {missing} missing)"
        )
    return fam.spec


# --------------------------------------------------------------------------- width rewrite


def to_constant_width(f: CnfFormula, max_w: int = 3) -> CnfFormula:
    """Split every clause wider than max_w into a chain linked by fresh variables.

    (l1..lk) becomes (l1..l_{w-2}, e1), (-e1, next w-2 literals, e2), ...,
    (-e_last, remaining <= w-1 literals).  Fresh variables follow n_total.
    """
    if max_w < 3:
        raise ValueError("max_w must be at least 3")
    nxt = f.space.n_total + 1
    out: list[Clause] = []
    step = max_w - 2
    for c in f.clauses:
        if len(c) <= max_w:
            out.append(c)
            continue
        rest = list(c)
        e = nxt
        nxt += 1
        out.append(make_clause(rest[:step] + [e]))
        rest = rest[step:]
        while len(rest) > max_w - 1:
            e2 = nxt
            nxt += 1
            out.append(make_clause([-e] + rest[:step] + [e2]))
            rest = rest[step:]
            e = e2
        out.append(make_clause([-e] + rest))
    return CnfFormula(VarSpace(f.space.n_original, nxt - 1), tuple(out))


def constant_width_axiom(ax: AxiomCnf, max_w: int = 3) -> AxiomCnf:
    cnf = to_constant_width(ax.cnf, max_w)
    tables = dict(ax.tables)
    tables["chain"] = list(range(ax.cnf.space.n_total + 1, cnf.space.n_total + 1))
    tables["chain_width"] = max_w
    tables["n_total"] = cnf.space.n_total
    return AxiomCnf(cnf, tables, ax.family, ax.groups)


__all__ = [
    "BIG",
    "SMALL",
    "AxiomCnf",
    "CircuitFamily",
    "Layout",
    "PromiseSpec",
    "broken_family",
    "build_neg_dsj",
    "build_neg_inj",
    "build_neg_inj_k",
    "build_prm",
    "build_rst",
    "constant_width_axiom",
    "decode_family",
    "derive_spec",
    "image_size_expected",
    "layout",
    "parse_family",
    "parse_fraction",
    "parse_tables",
    "serialize_family",
    "serialize_tables",
    "standard_family",
    "to_constant_width",
    "validate_axiom_instance",
]

