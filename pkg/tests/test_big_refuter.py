import itertools
import math
import random
from fractions import Fraction

import pytest

from helpers import random_3cnf
from promise_resolution.axioms import derive_spec
from promise_resolution.big_refuter import (
    build_family_for_T,
    constant_c,
    hitting_bound,
    hitting_or_matching,
    refute_big,
    refute_via_hitting,
)
from promise_resolution.circuits import eval_circuit, images_disjoint, is_injective
from promise_resolution.cnf import CnfFormula, count_models, is_satisfiable
from promise_resolution.errors import InfeasibleConstruction, SatisfiableInput
from promise_resolution.resolution import check_proof


def cnf(clauses, n=None):
    return CnfFormula.from_clauses(clauses, n)


FULL3 = [tuple(s * v for s, v in zip(signs, (1, 2, 3))) for signs in itertools.product((1, -1), repeat=3)]


def test_constant_c():
    assert constant_c(Fraction(1, 2)) == 33
    for eps in [Fraction(1, 2), Fraction(1, 3), Fraction(1, 10), Fraction(7, 8), Fraction(1, 1000)]:
        c = constant_c(eps)
        assert c % 3 == 0
        assert Fraction(7, 8) ** (c // 3) <= eps / 2
        assert Fraction(7, 8) ** (c // 3 - 1) > eps / 2
        # closed form through logarithms agrees away from exact powers
        assert c == 3 * math.ceil(math.log(float(eps) / 2, 7 / 8) - 1e-12)


def test_dichotomy_examples():
    disjoint = [(3 * i + 1, 3 * i + 2, 3 * i + 3) for i in range(4)]
    d = hitting_or_matching(disjoint, 4)
    assert d.kind == "matching" and len(d.matching) == 4
    star = [(1, 2, 3), (1, 4, 5), (-1, 2, 6), (1, -5, 7)]
    d = hitting_or_matching(star, 2)
    assert d.kind == "hitting" and set(d.hitting_set) <= {1, 2, 3}


def test_dichotomy_verified_random():
    rng = random.Random(1)
    for _ in range(100):
        n = rng.randint(3, 15)
        k = random_3cnf(rng, n, rng.randint(1, 20))
        c = rng.randint(1, 5)
        d = hitting_or_matching(k, c)
        if d.kind == "hitting":
            assert len(d.hitting_set) <= 3 * (c - 1)
            assert all(set(map(abs, cl)) & set(d.hitting_set) for cl in k)
        else:
            assert len(d.matching) == c
            vs = [abs(l) for cl in d.matching for l in cl]
            assert len(vs) == len(set(vs))


def test_refute_via_hitting_trivial():
    k = cnf([(1,), (-1,)])
    p = refute_via_hitting(k, [1])
    assert check_proof(k, None, p).accepted


def test_refute_via_hitting_rejects_bad_input():
    with pytest.raises(ValueError):
        refute_via_hitting(cnf([(1, 2), (3,)]), [1])
    with pytest.raises(SatisfiableInput):
        refute_via_hitting(cnf([(1, 2)]), [1])


def test_refute_via_hitting_bound_random():
    rng = random.Random(2)
    seen = 0
    while seen < 40:
        n = rng.randint(3, 7)
        k = cnf(random_3cnf(rng, n, rng.randint(8, 40)), n)
        if is_satisfiable(k):
            continue
        d = hitting_or_matching(k, 3)
        if d.kind != "hitting":
            continue
        p = refute_via_hitting(k, d.hitting_set)
        assert check_proof(k, None, p, strict_no_weakening=True).accepted
        assert p.size <= hitting_bound(n, k.size, len(d.hitting_set))
        seen += 1


def check_core_family(cf, spec):
    fam = cf.family
    assert all(is_injective(c) for c in fam.members)
    for a, b in itertools.combinations(fam.members, 2):
        assert images_disjoint(a, b)
    outs = set()
    pos = {v: i for i, v in enumerate(cf.core)}
    for c in fam.members:
        for bits in itertools.product((0, 1), repeat=c.n_inputs):
            y = eval_circuit(c, bits)
            core_bits = tuple(y[v - 1] for v in cf.core)
            assert any(all(core_bits[pos[abs(l)]] != (l > 0) for l in cl) for cl in cf.t_clauses)
            for x, j in cf.passthrough.items():
                assert y[x - 1] == bits[j - 1]
            outs.add(core_bits)
    return outs


def test_family_for_T_half():
    spec = derive_spec("big", "1/2", 4)
    t_clauses = [(1, 2, 3), (1, 2, -3), (1, -2, 3), (1, -2, -3)]
    cf = build_family_for_T(t_clauses, spec)
    outs = check_core_family(cf, spec)
    assert len(outs) == 2**3 * (1 - Fraction(1, 2)) == 4


def test_family_for_T_quarter():
    spec = derive_spec("big", "1/4", 5)
    t_clauses = [(1, 2, 3), (1, 2, -3), (1, -2, 3), (1, -2, -3), (-1, 2, 3), (-1, 2, -3)]
    cf = build_family_for_T(t_clauses, spec)
    outs = check_core_family(cf, spec)
    assert len(outs) == 2**3 * (1 - Fraction(1, 4)) == 6


def test_family_for_T_infeasible():
    with pytest.raises(InfeasibleConstruction):
        build_family_for_T([(1, 2, 3)], derive_spec("big", "1/2", 4))


def test_refute_big_full_three_variable():
    k = cnf(FULL3)
    for tc in (None, 3, 6):
        res = refute_big(k, Fraction(1, 2), test_c=tc)
        ax = res.axiom.cnf if res.axiom else None
        assert check_proof(k, ax, res.proof).accepted
        assert res.proof.size <= res.bound


def test_refute_big_random_corpus():
    rng = random.Random(3)
    seen = {"hitting": 0, "matching": 0}
    tried = 0
    while (seen["hitting"] < 3 or seen["matching"] < 6) and tried < 400:
        tried += 1
        n = rng.randint(3, 8)
        k = cnf(random_3cnf(rng, n, rng.randint(10, 45)), n)
        if is_satisfiable(k):
            continue
        eps = rng.choice([Fraction(1, 2), Fraction(1, 4)])
        if n - derive_spec("big", eps, n).r < 1:
            continue
        res = refute_big(k, eps, test_c=rng.choice([3, 6]))
        ax = res.axiom.cnf if res.axiom else None
        assert check_proof(k, ax, res.proof).accepted
        assert res.proof.size <= res.bound
        if ax is not None:
            assert not is_satisfiable(list(k.clauses) + list(ax.clauses))
        seen[res.stats["case"]] += 1
    assert min(seen.values()) >= 1


def test_refute_big_satisfiable_above_promise():
    k = cnf([(1, 2, 3)], 3)
    with pytest.raises(SatisfiableInput) as info:
        refute_big(k, Fraction(1, 2), test_c=3)
    assert info.value.model_count == count_models(k) == 7
    assert "no refutation exists" in str(info.value)


def test_refute_big_stats_fields():
    res = refute_big(cnf(FULL3), Fraction(1, 2), test_c=3)
    for key in ("case", "c", "t", "r", "proof_size", "proof_width", "elapsed", "declared_bound"):
        assert key in res.stats


def test_refute_big_test_c_validation():
    with pytest.raises(ValueError):
        refute_big(cnf(FULL3), Fraction(1, 2), test_c=4)
