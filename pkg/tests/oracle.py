"""Brute-force reference implementations used by the tests.

Everything here uses scalar polynomial arithmetic (FieldCtx.mul / pow) and
plain Python loops, never the log tables or the triangular solver.
"""

import itertools
import random

from drl.gf import make_field, prime_power
from drl.lang import parse_system
from drl.specializer import layout


def field(spec, q, m=1):
    p, k = prime_power(q)
    assert p == spec.p
    return make_field(p, k * m)


def _eval(ctx, q, poly, env, powcache):
    total = 0
    for mono, c in poly.terms:
        val = ctx.embed(c)
        for var, shift, e in mono:
            x = env[var]
            key = (x, q**shift * e)
            if key not in powcache:
                powcache[key] = ctx.pow(x, key[1])
            val = ctx.mul(val, powcache[key])
        total = ctx.add(total, val)
    return total


def brute_omega(spec, u, q, m=1):
    """Every assignment of the coordinates of u satisfying all equations at v <= u."""
    ctx = field(spec, q, m)
    coords = layout(spec, u)
    eqs = [e for b in spec.blocks if set(b.subset) <= set(u) for e in b.eqs]
    out = set()
    cache = {}
    for vals in itertools.product(range(ctx.order), repeat=len(coords)):
        env = dict(zip(coords, vals))
        if all(_eval(ctx, q, e, env, cache) == 0 for e in eqs):
            out.add(vals)
    return coords, out


def search_space(spec, q, m=1):
    Q = field(spec, q, m).order
    return sum(Q ** len(layout(spec, u)) for u in spec.closure() if u)


def brute_octahedral(sys, u, f):
    """Sum over all 2^|u| tuples of boundary rows that agree wherever their patterns agree."""
    base = sys.boundary(u)
    rows = base.tuples()
    owner = sys.spec.owner()
    u = tuple(sorted(u))
    pats = list(itertools.product((0, 1), repeat=len(u)))
    # coordinate c of the copy for pattern iota is labelled by the bits of iota on owner[c]
    labels = [[(c, tuple(b for i, b in zip(u, iota) if i in owner[c])) for c in base.coords] for iota in pats]
    total = 0
    for combo in itertools.product(range(len(rows)), repeat=len(pats)):
        env = {}
        ok = True
        for labs, r in zip(labels, combo):
            for lab, x in zip(labs, rows[r]):
                if env.setdefault(lab, x) != x:
                    ok = False
                    break
            if not ok:
                break
        if ok:
            prod = 1
            for r in combo:
                prod *= f[r]
            total += prod
    return total


def random_bipartite_text(seed, p):
    """A Cartesian bipartite system over two fixed-field sorts with a random cover."""
    rnd = random.Random(seed)
    kind = rnd.randrange(3)
    a, b, c = (rnd.randrange(1, p) for _ in range(3))
    i, j = rnd.randrange(1, 3), rnd.randrange(1, 3)
    if kind == 0:
        cover = f"cover {{0,1}}: vars w; eqs w^2 - ({a}*x0^{i} + {b}*x1^{j} + {c}), s(w) - w"
    elif kind == 1:
        cover = f"cover {{0,1}}: eqs x0^{i} - {a}*x1^{j} - {c}"
    else:
        cover = f"cover {{0,1}}: vars w; eqs w^2 - ({a}*x0*x1 + {b}), s(w) - w"
    return "\n".join([f"system random-{seed}", f"char {p}", "vertices 0 1",
                      "sort 0: eqs s(x0) - x0", "sort 1: eqs s(x1) - x1", cover])


def random_bipartite(seed, p):
    return parse_system(random_bipartite_text(seed, p))
