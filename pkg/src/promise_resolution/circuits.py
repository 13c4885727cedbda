"""Boolean circuits over {And, Or, Not}, their CNF encoding and image oracles.

Gates are stored in topological order.  ``Gate("IN", (j,))`` is input bit
w_j (1-based); the other kinds reference earlier gates by 0-based position.
Input bit vectors are tuples with w_1 first.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .cnf import Clause, guard_bits, make_clause
from .errors import ArityError, CircuitError, GuardExceeded, ParseError

IN, NOT, AND, OR = "IN", "NOT", "AND", "OR"
_ARITY = {IN: 1, NOT: 1, AND: 2, OR: 2}


@dataclass(frozen=True)
class Gate:
    kind: str
    args: tuple[int, ...]


@dataclass(frozen=True)
class Circuit:
    n_inputs: int
    gates: tuple[Gate, ...]
    outputs: tuple[int, ...]
    name: str = "C"

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(Gate(g.kind, tuple(g.args)) for g in self.gates))
        object.__setattr__(self, "outputs", tuple(self.outputs))
        if self.n_inputs < 0:
            raise CircuitError("negative input count")
        seen_inputs = set()
        for pos, g in enumerate(self.gates):
            if g.kind not in _ARITY or len(g.args) != _ARITY[g.kind]:
                raise CircuitError(f"gate {pos}: bad gate {g}")
            if g.kind == IN:
                (j,) = g.args
                if not 1 <= j <= self.n_inputs:
                    raise CircuitError(f"gate {pos}: input {j} out of range 1..{self.n_inputs}")
                if j in seen_inputs:
                    raise CircuitError(f"gate {pos}: input {j} declared twice")
                seen_inputs.add(j)
                continue
            for a in g.args:
                if not 0 <= a < pos:
                    raise CircuitError(f"gate {pos}: reference {a} is not an earlier gate")
            if g.kind in (AND, OR) and g.args[0] == g.args[1]:
                raise CircuitError(f"gate {pos}: fan-in 2 gate with identical operands")
        for o in self.outputs:
            if not 0 <= o < len(self.gates):
                raise CircuitError(f"output {o} is not a gate")

    @property
    def n_outputs(self) -> int:
        return len(self.outputs)

    @property
    def size(self) -> int:
        return len(self.gates)

    def reachable(self) -> set[int]:
        """Gates syntactically reachable from some output."""
        seen: set[int] = set()
        stack = list(self.outputs)
        while stack:
            g = stack.pop()
            if g in seen:
                continue
            seen.add(g)
            if self.gates[g].kind != IN:
                stack.extend(self.gates[g].args)
        return seen


class CircuitBuilder:
    """Helper that assembles a circuit, one Input gate per bit."""

    def __init__(self, n_inputs: int, name: str = "C"):
        self.n_inputs = n_inputs
        self.name = name
        self.gates: list[Gate] = []
        self._memo: dict[tuple, int] = {}

    def _add(self, kind: str, args: tuple[int, ...]) -> int:
        key = (kind, args)
        if key not in self._memo:
            self._memo[key] = len(self.gates)
            self.gates.append(Gate(kind, args))
        return self._memo[key]

    def inp(self, j: int) -> int:
        return self._add(IN, (j,))

    def neg(self, g: int) -> int:
        return self._add(NOT, (g,))

    def conj(self, a: int, b: int) -> int:
        return self._add(AND, (a, b))

    def disj(self, a: int, b: int) -> int:
        return self._add(OR, (a, b))

    def const(self, value: int) -> int:
        w = self.inp(1)
        return self.disj(w, self.neg(w)) if value else self.conj(w, self.neg(w))

    def build(self, outputs: Sequence[int]) -> Circuit:
        return Circuit(self.n_inputs, tuple(self.gates), tuple(outputs), self.name)


# --------------------------------------------------------------------------- evaluation


def _eval_arrays(c: Circuit, cols: Sequence[np.ndarray]) -> list[np.ndarray]:
    vals: list[np.ndarray] = []
    for g in c.gates:
        if g.kind == IN:
            vals.append(cols[g.args[0] - 1])
        elif g.kind == NOT:
            vals.append(~vals[g.args[0]])
        elif g.kind == AND:
            vals.append(vals[g.args[0]] & vals[g.args[1]])
        else:
            vals.append(vals[g.args[0]] | vals[g.args[1]])
    return vals


def gate_values(c: Circuit, bits: Sequence[int]) -> list[int]:
    """Value of every gate on one input."""
    if len(bits) != c.n_inputs:
        raise ArityError(f"circuit {c.name} takes {c.n_inputs} bits, got {len(bits)}")
    cols = [np.array([bool(b)]) for b in bits]
    return [int(v[0]) for v in _eval_arrays(c, cols)]


def eval_circuit(c: Circuit, bits: Sequence[int]) -> tuple[int, ...]:
    vals = gate_values(c, bits)
    return tuple(vals[o] for o in c.outputs)


def _all_inputs(m: int) -> list[np.ndarray]:
    idx = np.arange(1 << m, dtype=np.int64)
    # row r is the input whose bits w_1..w_m spell r with w_1 most significant
    return [((idx >> (m - 1 - j)) & 1).astype(bool) for j in range(m)]


def output_table(c: Circuit, guard: int | None = None) -> np.ndarray:
    """Array of shape (2^m, n_outputs) with the output on every input row."""
    g = guard_bits(guard)
    if c.n_inputs > g:
        raise GuardExceeded(f"circuit with {c.n_inputs} inputs exceeds guard {g}")
    m = c.n_inputs
    vals = _eval_arrays(c, _all_inputs(m))
    rows = 1 << m
    if not c.outputs:
        return np.zeros((rows, 0), dtype=np.uint8)
    return np.stack([np.broadcast_to(vals[o], (rows,)) for o in c.outputs], axis=1).astype(np.uint8)


def image(c: Circuit, guard: int | None = None) -> set[tuple[int, ...]]:
    return {tuple(int(b) for b in row) for row in output_table(c, guard)}


def is_injective(c: Circuit, guard: int | None = None) -> bool:
    return len(image(c, guard)) == 1 << c.n_inputs


def images_disjoint(c1: Circuit, c2: Circuit, guard: int | None = None) -> bool:
    return not (image(c1, guard) & image(c2, guard))


# --------------------------------------------------------------------------- encoding


@dataclass(frozen=True)
class EncodedCircuit:
    clauses: tuple[Clause, ...]
    input_vars: tuple[int, ...]
    output_vars: tuple[int, ...]
    gate_var_map: dict
    next_var: int

    @property
    def fresh_vars(self) -> tuple[int, ...]:
        inputs = set(self.input_vars)
        return tuple(sorted(v for v in self.gate_var_map.values() if v not in inputs))


def gate_clauses(kind: str, operands: Sequence[int], y: int) -> list[Clause]:
    """Clauses tying variable y to the gate function of its operand variables."""
    if kind == NOT:
        (w,) = operands
        return [make_clause((w, y)), make_clause((-w, -y))]
    v1, v2 = operands
    fn = (lambda a, b: a & b) if kind == AND else (lambda a, b: a | b)
    out = []
    for e1 in (0, 1):
        for e2 in (0, 1):
            # y_{v1}^{not e1} v y_{v2}^{not e2} v y^{fn(e1,e2)}, with x^1 = x and x^0 = -x
            out.append(
                make_clause(
                    (
                        v1 if not e1 else -v1,
                        v2 if not e2 else -v2,
                        y if fn(e1, e2) else -y,
                    )
                )
            )
    return out


def encode(c: Circuit, input_vars: Sequence[int], first_var: int) -> EncodedCircuit:
    """Encode c with input bit j identified with ``input_vars[j-1]``.

    Gate variables are allocated from ``first_var`` upward, in gate order,
    for gates reachable from an output.  Unreachable inputs never occur.
    """
    if len(input_vars) != c.n_inputs:
        raise ArityError(f"circuit {c.name} has {c.n_inputs} inputs, got {len(input_vars)} variables")
    if len(set(input_vars)) != len(input_vars):
        raise CircuitError("input variables must be distinct")
    if first_var < 1 or (input_vars and first_var <= max(input_vars)):
        raise CircuitError("fresh gate variables collide with input variables")
    live = c.reachable()
    var: dict[int, int] = {}
    nxt = first_var
    clauses: list[Clause] = []
    for pos, g in enumerate(c.gates):
        if pos not in live:
            continue
        if g.kind == IN:
            var[pos] = input_vars[g.args[0] - 1]
            continue
        var[pos] = nxt
        nxt += 1
        clauses.extend(gate_clauses(g.kind, [var[a] for a in g.args], var[pos]))
    return EncodedCircuit(
        tuple(clauses),
        tuple(input_vars),
        tuple(var[o] for o in c.outputs),
        var,
        nxt,
    )


# --------------------------------------------------------------------------- truth tables

MAX_TABLE_INPUTS = 12


def truth_table_circuit(
    tables: Sequence[int] | Sequence[Sequence[int]], k: int, name: str = "T"
) -> Circuit:
    """Sum-of-products circuit on k inputs.

    ``tables`` is one table (2^k bits, row r is the input spelling r with
    w_1 most significant) or a list of such tables, one per output.
    Minterm gates are shared between outputs.
    """
    if not 1 <= k <= MAX_TABLE_INPUTS:
        raise ArityError(f"truth tables need 1 <= k <= {MAX_TABLE_INPUTS}, got {k}")
    multi = len(tables) > 0 and not isinstance(tables[0], (int, np.integer))
    tabs = [list(t) for t in tables] if multi else [list(tables)]
    for t in tabs:
        if len(t) != 1 << k:
            raise ArityError(f"table of length {len(t)} does not match k={k}")
    b = CircuitBuilder(k, name)
    outs = sop_outputs(b, [b.inp(j) for j in range(1, k + 1)], tabs)
    return b.build(outs)


def sop_outputs(b: CircuitBuilder, ins: Sequence[int], tables: Sequence[Sequence[int]]) -> list[int]:
    """Add sum-of-products gates over the gates ``ins`` to b, one per table."""
    k = len(ins)
    minterms: dict[int, int] = {}

    def minterm(row: int) -> int:
        if row not in minterms:
            acc = None
            for j in range(k):
                bit = (row >> (k - 1 - j)) & 1
                lit = ins[j] if bit else b.neg(ins[j])
                acc = lit if acc is None else b.conj(acc, lit)
            minterms[row] = acc
        return minterms[row]

    outs = []
    for t in tables:
        ones = [r for r, v in enumerate(t) if v]
        if not ones:
            outs.append(b.const(0))
        elif len(ones) == len(t):
            outs.append(b.const(1))
        else:
            acc = None
            for r in ones:
                m = minterm(r)
                acc = m if acc is None else b.disj(acc, m)
            outs.append(acc)
    return outs


# --------------------------------------------------------------------------- CIRC v1


def serialize_circuit(c: Circuit) -> str:
    lines = [f"circuit {c.name} inputs {c.n_inputs} outputs {c.n_outputs}"]
    for pos, g in enumerate(c.gates, 1):
        if g.kind == IN:
            lines.append(f"g{pos} = IN {g.args[0]}")
        else:
            lines.append(f"g{pos} = {g.kind} " + " ".join(f"g{a + 1}" for a in g.args))
    lines.append("outputs " + " ".join(f"g{o + 1}" for o in c.outputs))
    return "\n".join(lines) + "\n"


def _gate_ref(tok: str, where: str) -> int:
    if not tok.startswith("g"):
        raise ParseError(f"{where}: expected gate reference, got {tok!r}")
    try:
        return int(tok[1:]) - 1
    except ValueError:
        raise ParseError(f"{where}: bad gate reference {tok!r}") from None


def parse_circuits(lines: Iterable[str], first_lineno: int = 1) -> list[Circuit]:
    """Parse consecutive CIRC v1 sections."""
    out: list[Circuit] = []
    cur = None
    for lineno, raw in enumerate(lines, first_lineno):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        where = f"line {lineno}"
        if tok[0] == "circuit":
            if cur is not None:
                raise ParseError(f"{where}: previous circuit has no outputs line")
            if len(tok) != 6 or tok[2] != "inputs" or tok[4] != "outputs":
                raise ParseError(f"{where}: malformed circuit header")
            try:
                cur = {"name": tok[1], "m": int(tok[3]), "n": int(tok[5]), "gates": []}
            except ValueError:
                raise ParseError(f"{where}: malformed circuit header") from None
        elif cur is None:
            raise ParseError(f"{where}: gate outside a circuit section")
        elif tok[0] == "outputs":
            outs = tuple(_gate_ref(t, where) for t in tok[1:])
            if len(outs) != cur["n"]:
                raise ParseError(f"{where}: header declares {cur['n']} outputs, found {len(outs)}")
            try:
                out.append(Circuit(cur["m"], tuple(cur["gates"]), outs, cur["name"]))
            except CircuitError as e:
                raise ParseError(f"{where}: {e}") from None
            cur = None
        else:
            if len(tok) < 4 or tok[1] != "=":
                raise ParseError(f"{where}: malformed gate line")
            pos = _gate_ref(tok[0], where)
            if pos != len(cur["gates"]):
                raise ParseError(f"{where}: gates must be numbered g1, g2, ... in order")
            kind = tok[2]
            if kind not in _ARITY or len(tok) != 3 + _ARITY[kind]:
                raise ParseError(f"{where}: bad gate {' '.join(tok[2:])!r}")
            if kind == IN:
                try:
                    args = (int(tok[3]),)
                except ValueError:
                    raise ParseError(f"{where}: bad input index") from None
            else:
                args = tuple(_gate_ref(t, where) for t in tok[3:])
            cur["gates"].append(Gate(kind, args))
    if cur is not None:
        raise ParseError("circuit section without outputs line")
    return out


def parse_circuit(text: str) -> Circuit:
    cs = parse_circuits(text.splitlines())
    if len(cs) != 1:
        raise ParseError(f"expected one circuit, found {len(cs)}")
    return cs[0]


# --------------------------------------------------------------------------- generators


def identity_circuit(m: int, name: str = "I") -> Circuit:
    b = CircuitBuilder(m, name)
    return b.build([b.inp(j) for j in range(1, m + 1)])


def random_circuit(
    rng: np.random.Generator, n_inputs: int, n_gates: int, n_outputs: int, name: str = "R"
) -> Circuit:
    """Random circuit: n_inputs Input gates then up to n_gates logic gates."""
    gates = [Gate(IN, (j,)) for j in range(1, n_inputs + 1)]
    for _ in range(n_gates):
        kind = (NOT, AND, OR)[int(rng.integers(3))]
        if kind == NOT or len(gates) < 2:
            gates.append(Gate(NOT, (int(rng.integers(len(gates))),)))
        else:
            a, b = rng.choice(len(gates), size=2, replace=False)
            gates.append(Gate(kind, (int(a), int(b))))
    outs = tuple(int(x) for x in rng.integers(len(gates), size=n_outputs))
    return Circuit(n_inputs, tuple(gates), outs, name)


__all__ = [
    "AND",
    "IN",
    "NOT",
    "OR",
    "Circuit",
    "CircuitBuilder",
    "EncodedCircuit",
    "Gate",
    "encode",
    "eval_circuit",
    "gate_clauses",
    "gate_values",
    "identity_circuit",
    "image",
    "images_disjoint",
    "is_injective",
    "output_table",
    "parse_circuit",
    "parse_circuits",
    "random_circuit",
    "serialize_circuit",
    "sop_outputs",
    "truth_table_circuit",
]
