import collections
import itertools
import math
import random
from fractions import Fraction

import numpy as np
import pytest

from helpers import implies, random_3cnf
from promise_resolution.axioms import build_prm, derive_spec, standard_family
from promise_resolution.cnf import is_satisfiable, make_clause, parse_dimacs
from promise_resolution.errors import GuardExceeded
from promise_resolution.random_lab import (
    EtaOracle,
    RandomSpec,
    boundary,
    corpus_text,
    eta,
    expansion,
    expansion_value,
    flip_check,
    gen_random_3cnf,
    is_partially_matchable,
    lower_bound_window,
    matchability_extension_check,
    parse_corpus_header,
    resolvent_pairs,
    sample_resolvable_pairs,
    subadditivity_violations,
    system_of_representatives,
    unrank_clause,
    variables,
)

CHI2_79_999 = 123.594  # 0.999 quantile of chi-square with 79 degrees of freedom


def nvars(cls):
    return len({abs(l) for c in cls for l in c})


# --------------------------------------------------------------------------- generation


def test_generation_shape_and_determinism():
    f = gen_random_3cnf(RandomSpec(4, 1, 9))
    assert f.size == 4
    assert all(len({abs(l) for l in c}) == 3 for c in f.clauses)
    assert gen_random_3cnf(RandomSpec(30, "4.5", 77)) == gen_random_3cnf(RandomSpec(30, "9/2", 77))
    assert gen_random_3cnf(RandomSpec(30, 2, 1)) != gen_random_3cnf(RandomSpec(30, 2, 2))


def test_clause_count_rounding():
    assert RandomSpec(10, "1/4", 0).m == 3  # 2.5 rounds up
    assert RandomSpec(7, "1/3", 0).m == 2


def test_spec_validation():
    for bad in [dict(n=2, beta=1, seed=0), dict(n=5, beta=0, seed=0), dict(n=5, beta=1, seed=-1)]:
        with pytest.raises(ValueError):
            RandomSpec(**bad)
    with pytest.raises(ValueError):
        RandomSpec(5, 1, 0, "mt19937")


def test_unrank_is_a_bijection_onto_the_universe():
    n = 5
    clauses = [unrank_clause(i, n) for i in range(8 * math.comb(n, 3))]
    assert len(set(clauses)) == 80
    triples = sorted({tuple(sorted(map(abs, c))) for c in clauses})
    assert triples == list(itertools.combinations(range(1, 6), 3))
    with pytest.raises(ValueError):
        unrank_clause(80, n)


def test_uniformity_chi_square():
    f = gen_random_3cnf(RandomSpec(5, 20000, 12345))
    assert f.size == 100000
    cnt = collections.Counter(f.clauses)
    assert len(cnt) == 80
    e = f.size / 80
    stat = sum((c - e) ** 2 / e for c in cnt.values())
    assert stat < CHI2_79_999


def test_corpus_header_round_trip():
    spec = RandomSpec(20, 5, 7)
    text = corpus_text(spec)
    assert text.startswith("c seed 7 gen numpy-pcg64/1 beta 5/1\n")
    assert parse_corpus_header(text) == {"seed": 7, "generator_id": "numpy-pcg64/1", "beta": "5/1"}
    assert parse_dimacs(text) == gen_random_3cnf(spec)
    assert corpus_text(spec) == text


# --------------------------------------------------------------------------- window


def test_window_example():
    w = lower_bound_window(100, 1, "0.25")
    assert w.k_float == pytest.approx(200 * 80 ** (-8 / 3))
    assert w.empty and (w.lo, w.hi) == (1, 0)


def test_window_endpoints_match_closed_form():
    for n, beta, eps in [(10**9, 1, "1/4"), (10**12, 2, "1/3"), (5 * 10**10, "1/2", "1/10")]:
        w = lower_bound_window(n, beta, eps)
        k = 2 * n * (80 * float(Fraction(beta))) ** (-2 / (1 - float(Fraction(eps))))
        assert w.hi == math.floor(k)
        assert w.lo == math.ceil(k / 2)


def test_window_linear_in_n():
    a = lower_bound_window(10**9, 1, "1/4")
    b = lower_bound_window(2 * 10**9, 1, "1/4")
    assert b.k_float == pytest.approx(2 * a.k_float)
    assert abs(b.hi - 2 * a.hi) <= 1


def test_window_range():
    for eps in ("0", "1/2", "3/4"):
        with pytest.raises(ValueError):
            lower_bound_window(10, 1, eps)


# --------------------------------------------------------------------------- expansion


def brute_expansion(cls, lo, hi):
    best = None
    for mask in range(1, 1 << len(cls)):
        sub = [cls[i] for i in range(len(cls)) if mask >> i & 1]
        if lo <= len(sub) <= hi:
            val = 2 * nvars(sub) - 3 * len(sub)
            best = val if best is None else min(best, val)
    return best


def test_expansion_examples():
    disjoint = [(1, 2, 3), (4, 5, 6), (7, 8, 9)]
    assert expansion(disjoint, window=(1, 2)) == 3
    triple = [(1, 2, 3), (-1, 2, 3), (1, -2, -3)]
    assert expansion(triple, window=(3, 3)) == -3
    assert expansion(disjoint, window=(5, 9)) is None


def test_expansion_against_brute_force():
    rng = random.Random(1)
    for _ in range(100):
        n = rng.randint(3, 8)
        cls = random_3cnf(rng, n, rng.randint(1, 12))
        lo = rng.randint(1, 4)
        hi = rng.randint(lo, 8)
        got = expansion_value(cls, lo, hi)
        want = brute_expansion(cls, lo, hi)
        assert (got[0] if got else None) == want
        if got:
            sub = [cls[i] for i in got[1]]
            assert 2 * nvars(sub) - 3 * len(sub) == got[0]


def test_expansion_guard():
    cls = [(1, 2, 3)] * 40
    with pytest.raises(GuardExceeded):
        expansion_value(cls, 1, 20)


def test_expansion_via_density_window():
    cls = [(1, 2, 3)]
    assert expansion(cls, beta=1, eps="1/4") is None


# --------------------------------------------------------------------------- matchability


def brute_matchable(cls, bound):
    for mask in range(1, 1 << len(cls)):
        sub = [cls[i] for i in range(len(cls)) if mask >> i & 1]
        if len(sub) <= bound and nvars(sub) < len(sub):
            return False
    return True


def test_matchability_examples():
    pigeon = [(1, 2, 3), (-1, 2, 3), (1, -2, 3), (1, 2, -3)]
    m = is_partially_matchable(pigeon, 4)
    assert m.matchable is False and len(m.witness) == 4
    assert is_partially_matchable(pigeon, 3).matchable is True
    d = is_partially_matchable([(1, 2, 3), (4, 5, 6)], 5)
    assert d.matchable is True and d.method == "matching"


def test_matchability_unknown_above_guard():
    cls = [(1, 2, 3)] * 30
    m = is_partially_matchable(cls, 30, mode="fast", guard=1000)
    assert m.matchable is None and m.method == "unknown"
    with pytest.raises(GuardExceeded):
        is_partially_matchable(cls, 30, mode="exact", guard=1000)


def test_matchability_modes_agree_and_match_brute_force():
    rng = random.Random(2)
    for _ in range(200):
        n = rng.randint(3, 6)
        cls = random_3cnf(rng, n, rng.randint(1, 10))
        bound = rng.randint(1, 10)
        exact = is_partially_matchable(cls, bound, "exact")
        fast = is_partially_matchable(cls, bound, "fast")
        assert exact.matchable == brute_matchable(cls, bound)
        if fast.matchable is not None:
            assert fast.matchable == exact.matchable


def test_system_of_representatives():
    cls = [(1, 2, 3), (1, 2, 4), (1, 3, 4)]
    sdr = system_of_representatives(cls)
    assert len(set(sdr.values())) == 3
    assert all(sdr[i] in {abs(l) for l in cls[i]} for i in range(3))
    assert system_of_representatives([(1,), (-1,)]) is None


# --------------------------------------------------------------------------- boundary


def test_boundary_examples():
    assert boundary([(1, 2, 3), (1, 4, 5)]) == {2, 3, 4, 5}
    assert boundary([(1, -2, 3)]) == {1, 2, 3}
    assert boundary([(1, 2, 3), (-1, -2, -3)]) == set()


def test_boundary_inequality_sweep():
    rng = random.Random(3)
    for _ in range(500):
        n = rng.randint(3, 12)
        sub = random_3cnf(rng, n, rng.randint(1, 8))
        assert len(boundary(sub)) >= 2 * len(variables(sub)) - 3 * len(sub)


# --------------------------------------------------------------------------- eta


def brute_min_core(cls, n):
    for s in range(len(cls) + 1):
        for sub in itertools.combinations(cls, s):
            if implies(list(sub), (), n):
                return s
    return math.inf


def test_eta_examples():
    assert eta([(1,)], (1,)) == 1
    assert eta([(1,)], (1, -1)) == 0
    assert eta([(1, 2)], (1,)) == math.inf


def test_eta_empty_clause_is_min_core():
    rng = random.Random(4)
    seen = 0
    while seen < 15:
        n = rng.randint(3, 4)
        cls = random_3cnf(rng, n, rng.randint(8, 12))
        if is_satisfiable(cls):
            continue
        assert eta(cls, ()) == brute_min_core(cls, n)
        seen += 1


def test_eta_subadditivity_sweep():
    rng = random.Random(5)
    npg = np.random.Generator(np.random.PCG64(5))
    checked = 0
    for _ in range(12):
        n = rng.randint(3, 5)
        cls = random_3cnf(rng, n, rng.randint(4, 9))
        pairs = sample_resolvable_pairs(cls, npg, 25)
        with EtaOracle(cls) as o:
            assert subadditivity_violations(o, pairs) == []
            for c in cls:
                assert o(c) <= 1
        checked += len(pairs)
    assert checked > 100


def test_eta_with_axiom():
    spec = derive_spec("small", "1/2", 4)
    ax = build_prm(standard_family(spec))
    rng = random.Random(6)
    cls = random_3cnf(rng, 4, 6)
    pairs = list(resolvent_pairs(cls))[:10]
    with EtaOracle(cls, ax) as o:
        assert subadditivity_violations(o, pairs) == []
        base = o(())
    plain = eta(cls, ())
    assert base <= plain


def test_eta_guard():
    with pytest.raises(GuardExceeded):
        EtaOracle([(1, 2, 3)] * 17)


# --------------------------------------------------------------------------- structural checks


def test_flip_step_on_constructed_instance():
    sub = [(1, 2, 3), (-1, 4, 5), (-4, 6, 7)]
    d = (2, 3, -5)
    out = flip_check(sub, d, 6)
    assert out.alpha is not None and out.holds
    assert out.clause == make_clause((-4, 6, 7))
    with pytest.raises(ValueError):
        flip_check(sub, d, 1)  # not a boundary variable
    with pytest.raises(ValueError):
        flip_check(sub, d, 2)  # occurs in D


def test_flip_step_random_sweep():
    rng = random.Random(7)
    runs = 0
    for _ in range(300):
        n = rng.randint(4, 8)
        sub = random_3cnf(rng, n, rng.randint(1, 5))
        d = tuple(v if rng.random() < 0.5 else -v for v in rng.sample(range(1, n + 1), rng.randint(0, 3)))
        dv = {abs(l) for l in d}
        for x in sorted(boundary(sub) - dv):
            out = flip_check(sub, d, x)
            if out.alpha is not None:
                assert out.holds
                runs += 1
    assert runs > 100


def test_minimal_implying_sets_have_boundary_inside_d():
    """Without an axiom a minimal K' implying D has every boundary variable in D."""
    rng = random.Random(8)
    checked = 0
    for _ in range(60):
        n = rng.randint(3, 5)
        cls = random_3cnf(rng, n, rng.randint(3, 8))
        with EtaOracle(cls) as o:
            for e, f, d in list(resolvent_pairs(cls))[:6]:
                val, wit = o.witness(d)
                if wit is None or val == 0:
                    continue
                sub = [cls[i] for i in wit]
                dv = {abs(l) for l in d}
                for x in boundary(sub) - dv:
                    assert flip_check(sub, d, x).alpha is None
                assert boundary(sub) <= dv
                checked += 1
    assert checked > 20


def test_matchability_extension_argument():
    spec = derive_spec("small", "1/2", 6)
    ax = build_prm(standard_family(spec))
    rng = random.Random(9)
    cls = random_3cnf(rng, 6, 6)
    res = matchability_extension_check(cls, ax, bound=2)
    assert res.checked == 6 + 15
    assert res.premise_held > 0
    assert res.violations == []
