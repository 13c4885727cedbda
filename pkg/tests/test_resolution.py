import itertools
import random

import pytest

from helpers import implies, random_cnf
from promise_resolution.cnf import CnfFormula, VarSpace, is_satisfiable, make_clause
from promise_resolution.errors import ParseError, ResolutionError, SatisfiableInput
from promise_resolution.resolution import (
    C2,
    Proof,
    ProofBuilder,
    ProofStep,
    check_proof,
    min_width,
    parse_proof,
    refute_2cnf,
    resolve,
    serialize_proof,
    size_width_indicator,
    weaken,
)

XOR2 = ((1, 2), (-1, 2), (1, -2), (-1, -2))


def cnf(clauses, n=None, n_original=None):
    return CnfFormula.from_clauses(clauses, n, n_original)


def tiny_proof(stored=None):
    return Proof(
        VarSpace.plain(1),
        (ProofStep(1, "K", (1,)), ProofStep(2, "K", (-1,)), ProofStep(3, "R", stored, (1, 2), 1)),
    )


def test_resolve_examples():
    assert resolve((1, 2), (-1, 3), 1) == (2, 3)
    assert resolve((-1, 3), (1, 2), 1) == (2, 3)
    assert resolve((1,), (-1,), 1) == ()


@pytest.mark.parametrize("c,d,p", [((1, 2), (2, 3), 1), ((1,), (1,), 1), ((1, -1, 2), (-1,), 1)])
def test_resolve_errors(c, d, p):
    with pytest.raises(ResolutionError):
        resolve(c, d, p)


def test_weaken_examples():
    assert weaken((1,), (2,)) == (1, 2)
    assert weaken((), (1,)) == (1,)


def test_rule_soundness_sweep():
    rng = random.Random(1)
    done = 0
    while done < 60:
        c, d = random_cnf(rng, 5, 2, 3)
        clash = [l for l in c if -l in d]
        if len(clash) != 1:
            continue
        r = resolve(c, d, abs(clash[0]))
        assert implies([c, d], r, 5)
        w = weaken(c, random_cnf(rng, 5, 1, 2)[0])
        assert implies([c], w, 5)
        done += 1


def test_checker_accepts_tiny_refutation():
    k = cnf([(1,), (-1,)])
    v = check_proof(k, None, tiny_proof())
    assert v.accepted and v.failing_step is None
    assert (v.size, v.width) == (3, 1)


def test_checker_rejects_wrong_stored_clause():
    k = cnf([(1,), (-1,)])
    v = check_proof(k, None, tiny_proof(stored=(1,)))
    assert not v.accepted and v.failing_step == 3


def test_checker_rejections():
    k = cnf([(1,), (-1,)])
    bad_input = Proof(VarSpace.plain(1), (ProofStep(1, "K", (1,)), ProofStep(2, "K", (1, -1))))
    assert check_proof(k, None, bad_input).failing_step == 2
    fwd = Proof(VarSpace.plain(1), (ProofStep(1, "R", None, (1, 2), 1),))
    assert not check_proof(k, None, fwd).accepted
    seq = Proof(VarSpace.plain(1), (ProofStep(2, "K", (1,)),))
    assert not check_proof(k, None, seq).accepted
    not_empty = Proof(VarSpace.plain(1), (ProofStep(1, "K", (1,)),))
    v = check_proof(k, None, not_empty)
    assert not v.accepted and "empty" in v.reason
    assert check_proof(k, None, not_empty, refutation=False).accepted


def test_promise_steps_need_axiom():
    k = cnf([(1,)], 2, 1)
    ax = cnf([(-1, 2), (-2,)], 2, 1)
    p = Proof(
        VarSpace(1, 2),
        (
            ProofStep(1, "K", (1,)),
            ProofStep(2, "P", (-1, 2)),
            ProofStep(3, "P", (-2,)),
            ProofStep(4, "R", None, (1, 2), 1),
            ProofStep(5, "R", None, (3, 4), 2),
        ),
        True,
    )
    assert check_proof(k, ax, p).accepted
    assert not check_proof(k, None, p).accepted
    undeclared = Proof(p.space, p.steps, False)
    assert not check_proof(k, ax, undeclared).accepted


def test_two_axioms_rejected():
    k = cnf([(1,)], 2, 1)
    a1 = cnf([(-1, 2)], 2, 1)
    a2 = cnf([(-2,)], 2, 1)
    p = Proof(
        VarSpace(1, 2),
        (
            ProofStep(1, "K", (1,)),
            ProofStep(2, "P", (-1, 2)),
            ProofStep(3, "P", (-2,)),
            ProofStep(4, "R", None, (1, 2), 1),
            ProofStep(5, "R", None, (3, 4), 2),
        ),
        True,
    )
    v = check_proof(k, [a1, a2], p)
    assert not v.accepted and v.failing_step == 3
    assert "at most one promise axiom" in v.reason
    assert check_proof(k, [a1.extend([(-2,)]), a2], p).accepted


def test_strict_no_weakening():
    k = cnf([(1,), (-1,)], 2)
    p = Proof(
        VarSpace.plain(2),
        (
            ProofStep(1, "K", (1,)),
            ProofStep(2, "W", None, (1,), added=(2,)),
            ProofStep(3, "K", (-1,)),
            ProofStep(4, "R", None, (2, 3), 1),
            ProofStep(5, "K", (-1,)),
        ),
    )
    assert not check_proof(k, None, p).accepted  # final clause is (-1)
    q = Proof(p.space, p.steps[:2] + (ProofStep(3, "K", (-1,)), ProofStep(4, "R", None, (1, 3), 1)))
    assert check_proof(k, None, q).accepted
    v = check_proof(k, None, q, strict_no_weakening=True)
    assert not v.accepted and v.failing_step == 2


def test_pres_round_trip():
    p = tiny_proof()
    text = serialize_proof(p, ["origin test"])
    assert text.splitlines()[1] == "p pres 1 1 0"
    q = parse_proof(text)
    assert [(s.id, s.rule, s.refs, s.pivot) for s in q.steps] == [(s.id, s.rule, s.refs, s.pivot) for s in p.steps]
    assert check_proof(cnf([(1,), (-1,)]), None, q).accepted


def test_pres_stored_resolvent():
    q = parse_proof("p pres 1 1 0\n1 K 1 0\n2 K -1 0\n3 R 1 2 1 0\n")
    assert q.steps[2].clause == ()
    assert check_proof(cnf([(1,), (-1,)]), None, q).accepted


@pytest.mark.parametrize(
    "text",
    [
        "1 K 1 0\n",
        "p pres 1 1\n",
        "p pres 1 1 0\n1 K 1\n",
        "p pres 1 1 0\n1 X 1 0\n",
        "p pres 1 1 0\n1 R 1\n",
        "p pres 1 1 0\nx K 1 0\n",
        "p pres 1 1 0\np pres 1 1 0\n",
        "",
    ],
)
def test_pres_parse_errors(text):
    with pytest.raises(ParseError):
        parse_proof(text)


def test_refute_2cnf_examples():
    p = refute_2cnf(cnf([(1,), (-1,)]))
    assert p.size == 3
    k = cnf(XOR2)
    v = check_proof(k, None, refute_2cnf(k))
    assert v.accepted and v.width <= 2


def test_refute_2cnf_satisfiable():
    with pytest.raises(SatisfiableInput):
        refute_2cnf(cnf([(1, 2), (-1,)]))
    with pytest.raises(ValueError):
        refute_2cnf(cnf([(1, 2, 3)]))


def random_unsat_2cnf(rng, n):
    while True:
        cl = random_cnf(rng, n, rng.randint(n, 3 * n), 2)
        if not is_satisfiable(cl):
            return cnf(cl, n)


def test_refute_2cnf_random_within_bound():
    rng = random.Random(2)
    for _ in range(50):
        n = rng.randint(2, 12)
        k = random_unsat_2cnf(rng, n)
        p = refute_2cnf(k)
        v = check_proof(k, None, p, strict_no_weakening=True)
        assert v.accepted, v.reason
        assert p.size <= C2 * n * n
        assert v.width <= 2


def reference_width(clauses, n):
    """Width-bounded closure on frozensets (independent of the bitmask version)."""
    cls = {frozenset(c) for c in clauses}
    for w in range(max(len(c) for c in cls), n + 1):
        known = {c for c in cls if len(c) <= w and not any(-l in c for l in c)}
        changed = True
        while changed and frozenset() not in known:
            changed = False
            for a, b in itertools.combinations(list(known), 2):
                for l in a:
                    if -l in b:
                        r = (a - {l}) | (b - {-l})
                        if len(r) <= w and not any(-x in r for x in r) and r not in known:
                            known.add(r)
                            changed = True
        if frozenset() in known:
            return w
    raise AssertionError


def test_min_width_examples():
    assert min_width(cnf([(1,), (-1,)])) == 1
    assert min_width(cnf(XOR2)) == 2
    with pytest.raises(SatisfiableInput):
        min_width(cnf([(1, 2)]))


def test_min_width_agrees_with_reference():
    rng = random.Random(4)
    seen = 0
    while seen < 30:
        n = rng.randint(2, 4)
        cl = random_cnf(rng, n, rng.randint(4, 12), 3)
        if is_satisfiable(cl):
            continue
        w = min_width(cnf(cl, n))
        assert w == reference_width(cl, n)
        assert w <= n
        seen += 1


def test_size_width_indicator():
    assert size_width_indicator(100, 3, 3) == 0
    assert size_width_indicator(100, 3, 23) == 4.0
    vals = [size_width_indicator(50, 3, w) for w in range(3, 20)]
    assert vals == sorted(vals)
    with pytest.raises(ValueError):
        size_width_indicator(10, 5, 4)


def test_builder_memoizes():
    b = ProofBuilder()
    i = b.cite("K", (1,))
    assert b.cite("K", make_clause((1,))) == i
    j = b.cite("K", (-1,))
    assert b.resolve(i, j, 1) == b.resolve(j, i, 1)
    assert len(b) == 3
