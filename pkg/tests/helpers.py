"""Independent brute-force oracles written without the package's enumerators."""

from __future__ import annotations

import itertools
import random


def sat_by(clause, a):
    """a maps var -> 0/1."""
    return any(a[abs(l)] == (1 if l > 0 else 0) for l in clause)


def all_assignments(vs):
    vs = sorted(vs)
    for bits in itertools.product((0, 1), repeat=len(vs)):
        yield dict(zip(vs, bits))


def models(clauses, n):
    return [a for a in all_assignments(range(1, n + 1)) if all(sat_by(c, a) for c in clauses)]


def count_recursive(clauses, n):
    """Model count by splitting on the lowest free variable (second counter)."""

    def go(cls, v):
        if any(len(c) == 0 for c in cls):
            return 0
        if v > n:
            return 1
        total = 0
        for lit in (v, -v):
            reduced = [tuple(l for l in c if l != -lit) for c in cls if lit not in c]
            total += go(reduced, v + 1)
        return total

    return go([tuple(c) for c in clauses], 1)


def discarded(clauses, n_orig, n_total):
    out = set()
    ext = range(n_orig + 1, n_total + 1)
    for xs in itertools.product((0, 1), repeat=n_orig):
        base = dict(zip(range(1, n_orig + 1), xs))
        ok = False
        for e in all_assignments(ext):
            a = {**base, **e}
            if all(sat_by(c, a) for c in clauses):
                ok = True
                break
        if not ok:
            out.add(xs)
    return out


def implies(clauses, clause, n):
    return all(sat_by(clause, a) for a in models(clauses, n))


def random_cnf(rng: random.Random, n, m, width):
    out = []
    for _ in range(m):
        w = rng.randint(1, width)
        vs = rng.sample(range(1, n + 1), min(w, n))
        out.append(tuple(v if rng.random() < 0.5 else -v for v in vs))
    return out


def random_3cnf(rng: random.Random, n, m):
    return [tuple(v if rng.random() < 0.5 else -v for v in rng.sample(range(1, n + 1), 3)) for _ in range(m)]
