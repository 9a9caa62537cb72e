"""Subset-lattice operations on a specialized system.

Fibre products, the projections rho_u, refinements and radical twists,
doublings, and fibre-signature classes (the empirical stand-in for
irreducible components).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace

import numpy as np

from .gf import GuardError
from .lang import (CoverBlock, DiffPolynomial, DvsError, Diagnostic, RefinementSpec, SystemSpec,
                   fmt_subset, rebind_refinement, subset_key, validate, vertex_var)
from .points import PointSet, check_guard, join, row_keys


def proper_subsets(u, nonempty=True):
    u = tuple(sorted(u))
    out = []
    for r in range(1 if nonempty else 0, len(u)):
        out.extend(itertools.combinations(u, r))
    return sorted(out, key=subset_key)


def index_in(ps: PointSet, rows: np.ndarray) -> np.ndarray:
    """Position in ``ps`` of each row (-1 when absent)."""
    n = len(ps)
    if ps.data.shape[1] == 0:
        return np.zeros(len(rows), dtype=np.int64) if n else np.full(len(rows), -1)
    if len(rows) == 0:
        return np.zeros(0, dtype=np.int64)
    keys = row_keys(np.concatenate([ps.data, rows]))
    pos = np.full(int(keys.max()) + 1, -1, dtype=np.int64)
    pos[keys[:n]] = np.arange(n)
    return pos[keys[n:]]


def fibre_product(sys, u) -> PointSet:
    """Omega(u)^-."""
    return sys.boundary(u)


def fibre_product_over(sys, family, coords=None) -> PointSet:
    """Compatible tuples over the union of coordinates of Omega(v), v in family."""
    ps = PointSet.unit()
    for v in sorted({tuple(sorted(v)) for v in family}, key=subset_key):
        ps = join(ps, sys.omega(v))
    return ps.reorder(coords) if coords is not None else ps


def rho_image(sys, u) -> PointSet:
    """Image of Omega(u) in Omega(u)^- under coordinate restriction."""
    key = ("rho", tuple(sorted(u)))
    hit = sys._cache.get(key)
    if hit is None:
        hit = sys.omega(u).project(sys.boundary(u).coords)
        sys._cache[key] = hit
    return hit


def fibre_sizes(sys, u) -> np.ndarray:
    """|rho_u^{-1}(b)| for every b in Omega(u)^-, aligned with its rows."""
    key = ("fibres", tuple(sorted(u)))
    hit = sys._cache.get(key)
    if hit is None:
        base = sys.boundary(u)
        idx = index_in(base, sys.omega(u).columns(base.coords))
        hit = np.bincount(idx, minlength=len(base)) if len(idx) else np.zeros(len(base), np.int64)
        sys._cache[key] = hit
    return hit


# -- refinements and twists -------------------------------------------------

def apply_refinement(spec: SystemSpec, ref: RefinementSpec) -> SystemSpec:
    """Merge a refinement into a spec.

    A refinement variable whose name is already declared at a superset block
    is moved down to the refined subset; that block keeps its equations,
    which now see the variable from below.
    """
    if not ref.targets:
        return spec
    if any(e.p != spec.p for b in ref.targets for e in b.eqs):
        ref = rebind_refinement(ref, spec.p)
    blocks = {b.subset: b for b in spec.blocks}
    owner = spec.owner()
    for t in ref.targets:
        for v in t.vars:
            if v in owner:
                w = owner[v]
                if set(t.subset) < set(w):
                    blk = blocks[w]
                    blocks[w] = replace(blk, vars=tuple(x for x in blk.vars if x != v))
                else:
                    raise DvsError([Diagnostic(
                        "NAME_COLLISION", f"{v} is already declared at {fmt_subset(w)}")])
            owner[v] = t.subset
        cur = blocks.get(t.subset, CoverBlock(t.subset))
        blocks[t.subset] = CoverBlock(t.subset, cur.vars + t.vars, cur.eqs + t.eqs)
    merged = replace(spec, blocks=tuple(sorted(blocks.values(), key=lambda b: subset_key(b.subset))))
    diags = validate(merged)
    if diags:
        raise DvsError(diags)
    return merged


def _radical_shape(spec: SystemSpec, w: str):
    """Find (block, e, g-polynomial, sigma-equation) for w^e - g and s(w) - w."""
    owner = spec.owner()
    if w not in owner or w.startswith("x") and w[1:].isdigit():
        raise ValueError(f"{w} is not a cover variable")
    blk = spec.block(owner[w])
    earlier = set(blk.vars[: blk.vars.index(w)])
    radical = sigma = None
    for eq in blk.eqs:
        d = eq.as_dict()
        if len(d) == 2 and d.get(((w, 1, 1),)) is not None and d.get(((w, 0, 1),)) == -d[((w, 1, 1),)]:
            sigma = sigma or eq
            continue
        wterms = {m: c for m, c in d.items() if any(v == w for v, _, _ in m)}
        if len(wterms) != 1 or radical is not None:
            continue
        (mono, c), = wterms.items()
        if len(mono) == 1 and mono[0][:2] == (w, 0) and c in (1, -1):
            g = DiffPolynomial.from_dict(spec.p, {m: -cc * c for m, cc in d.items() if m != mono})
            local = g.variables() & set(blk.vars)
            if local <= earlier:
                radical = (mono[0][2], g)
    if radical is None or sigma is None:
        raise ValueError(f"{w} is not of radical shape w^e - g with s(w) - w")
    return blk, radical[0], radical[1]


def generate_radical_twists(spec: SystemSpec, cover_var: str, name=None) -> list:
    """One refinement per c with c^e = 1 in F_p: w'^e = g, s(w') = c*w'.

    The new variable sits at the smallest subset holding the variables of g.
    """
    blk, e, g = _radical_shape(spec, cover_var)
    owner = spec.owner()
    target = set()
    for v in g.variables():
        target |= set(owner[v])
    target = tuple(sorted(target)) or blk.subset
    p = spec.p
    out = []
    for c in range(1, p):
        if pow(c, e, p) != 1:
            continue
        new = name or f"{cover_var}_{c}"
        if name:
            new = f"{name}_{c}"
        wv = DiffPolynomial.var(p, new)
        rad = wv.power(e) - g
        sig = DiffPolynomial.var(p, new, 1) - DiffPolynomial.const(p, c) * wv
        out.append(RefinementSpec((CoverBlock(target, (new,), (rad, sig)),)))
    return out


def twist_constant(ref: RefinementSpec) -> int:
    """The c of a twist produced by generate_radical_twists."""
    b = ref.targets[0]
    sig = b.eqs[1].as_dict()
    c = -sig[((b.vars[0], 0, 1),)]
    return c % b.eqs[1].p


# -- fibre signatures -------------------------------------------------------

@dataclass(frozen=True)
class SignatureClass:
    key: tuple          # sorted completion counts per value of the first cover variable
    points: PointSet    # base points of Omega(u)^- in this class

    @property
    def fibre_size(self) -> int:
        return sum(self.key)


def fibre_signature_classes(sys, u) -> list:
    """Partition of Omega(u)^- by the shape of the rho_u fibres ("empirical components")."""
    u = tuple(sorted(u))
    key = ("sig", u)
    hit = sys._cache.get(key)
    if hit is not None:
        return hit
    base = sys.boundary(u)
    om = sys.omega(u)
    extra = [c for c in om.coords if c not in base.coords]
    bidx = index_in(base, om.columns(base.coords))
    sigs = [[] for _ in range(len(base))]
    if extra and len(om):
        first = om.col(extra[0])
        pairs = np.stack([bidx, first], axis=1)
        uniq, cnt = np.unique(pairs, axis=0, return_counts=True)
        for (b, _), c in zip(uniq.tolist(), cnt.tolist()):
            sigs[b].append(c)
    else:
        for b in bidx.tolist():
            sigs[b].append(1)
    groups = {}
    for i, s in enumerate(sigs):
        groups.setdefault(tuple(sorted(s)), []).append(i)
    out = [SignatureClass(k, base.select(np.isin(np.arange(len(base)), idx)))
           for k, idx in sorted(groups.items())]
    sys._cache[key] = out
    return out


def largest_class(classes) -> SignatureClass:
    return max(classes, key=lambda c: (len(c.points), c.key))


def fibre_product_plus(sys, cand, u) -> PointSet:
    """Pairs (a, b) with a in Omega(u), b in Omega'(u)^-, agreeing on Omega(u)^-.

    ``cand`` is the specialized candidate refinement; its boundary at u must
    contain the coordinates of Omega(u)^-. Coordinates of b outside the
    original boundary are renamed with a trailing prime.
    """
    base = sys.boundary(u)
    cb = cand.boundary(u)
    missing = [c for c in base.coords if c not in cb.coords]
    if missing:
        raise ValueError(f"candidate boundary lacks coordinates {missing}")
    if (sys.q, sys.m) != (cand.q, cand.m):
        raise ValueError("systems specialized at different (q, m)")
    om = sys.omega(u)
    ren = tuple(c if c in base.coords else c + "'" for c in cb.coords)
    while any(r in om.coords and r not in base.coords for r in ren):
        ren = tuple(r if r in base.coords else r + "'" for r in ren)
    return join(om, PointSet(ren, cb.data, _sorted=True))


def fibre_product_plus_count(sys, cand, u) -> int:
    """|Omega+(u)| without materializing it."""
    base = sys.boundary(u)
    cb = cand.boundary(u)
    fib = fibre_sizes(sys, u)
    idx = index_in(base, cb.columns(base.coords))
    return int(fib[idx[idx >= 0]].sum())


# -- doublings --------------------------------------------------------------

class Doubled:
    """Octahedral configurations: copies of the boundary data of ``top``.

    Every subset v that owns coordinates (its vertex and sort variables for a
    singleton, its cover variables otherwise) gets one copy per pattern
    kappa in 2^(v minus ``single``). A configuration assigns each copy a value
    so that for every pattern iota on ``top`` the assembled tuple lies in
    Omega(top)^-.
    """

    def __init__(self, sys, top, single=()):
        self.sys = sys
        self.top = tuple(sorted(top))
        self.single = frozenset(single)
        self.base = sys.boundary(self.top)
        owner = sys.spec.owner()
        self.owning = []
        for v in proper_subsets(self.top) + ([self.top] if len(self.top) == 1 else []):
            own = [c for c in self.base.coords if owner[c] == v]
            if own:
                self.owning.append((v, tuple(own)))
        # domain of each owning subset, and each base row's index into it
        self.domains, self.row_dom = [], []
        for v, own in self.owning:
            cols = self.base.columns(own)
            dom = PointSet(own, cols)
            self.domains.append(dom)
            self.row_dom.append(index_in(dom, cols))
        self.free = tuple(i for i in self.top if i not in self.single)
        self.patterns = list(itertools.product((0, 1), repeat=len(self.free)))

    def label(self, j, iota) -> tuple:
        v = self.owning[j][0]
        return (v, tuple(b for i, b in zip(self.free, iota) if i in v))

    def labels(self) -> list:
        out = []
        for j in range(len(self.owning)):
            seen = []
            for iota in self.patterns:
                lab = self.label(j, iota)
                if lab not in seen:
                    seen.append(lab)
            out.extend(seen)
        return out

    @property
    def coords(self) -> tuple:
        names = []
        labs = self.labels()
        vx = [(lab, c) for lab in labs for c in self._own(lab[0]) if c.startswith("x") and c[1:].isdigit()]
        cov = [(lab, c) for lab in labs for c in self._own(lab[0]) if not (c.startswith("x") and c[1:].isdigit())]
        vx.sort(key=lambda t: (int(t[1][1:]), t[0][1]))
        for lab, c in vx + cov:
            bits = "".join(map(str, lab[1]))
            names.append(f"{c}_{bits}" if bits else c)
        return tuple(names)

    def _own(self, v):
        for w, own in self.owning:
            if w == v:
                return own
        return ()

    # naive iteration -----------------------------------------------------
    def assignments(self):
        """Yield dicts label -> base-row-independent domain index."""
        labs_of = [[self.label(j, iota) for j in range(len(self.owning))] for iota in self.patterns]
        nrows = len(self.base)
        rows_dom = np.stack(self.row_dom, axis=1) if self.owning else np.zeros((nrows, 0), np.int64)
        indexes = []
        assigned = set()
        for labs in labs_of:
            bound = [j for j, lab in enumerate(labs) if lab in assigned]
            idx = {}
            for r in range(nrows):
                idx.setdefault(tuple(rows_dom[r, bound]), []).append(r)
            indexes.append((bound, idx))
            assigned.update(labs)

        def rec(k, env, rows):
            if k == len(self.patterns):
                yield env, rows
                return
            bound, idx = indexes[k]
            labs = labs_of[k]
            key = tuple(env[labs[j]] for j in bound)
            for r in idx.get(key, ()):
                new = dict(env)
                for j, lab in enumerate(labs):
                    new[lab] = int(rows_dom[r, j])
                yield from rec(k + 1, new, rows + (r,))

        yield from rec(0, {}, ())

    def __iter__(self):
        labs = self.labels()
        order = self.coords
        for env, _ in self.assignments():
            vals = {}
            for lab in labs:
                j = [w for w, _ in self.owning].index(lab[0])
                dom = self.domains[j]
                bits = "".join(map(str, lab[1]))
                for c, x in zip(dom.coords, dom.data[env[lab]]):
                    vals[f"{c}_{bits}" if bits else c] = int(x)
            yield tuple(vals[c] for c in order)

    def naive_sum(self, weights) -> object:
        """Sum over configurations of the product over patterns of weights[row]."""
        total = 0
        for _, rows in self.assignments():
            prod = 1
            for r in rows:
                prod *= weights[r]
                if not prod:
                    break
            total += prod
        return total

    # contraction ----------------------------------------------------------
    def tensor(self, weights, guard=10**7) -> np.ndarray:
        dims = [len(d) for d in self.domains]
        size = int(np.prod(dims)) if dims else 1
        if size > guard:
            raise GuardError(f"contraction table of {size} entries exceeds guard {guard}")
        t = np.zeros(dims, dtype=object) if dims else np.zeros((), dtype=object)
        for r in range(len(self.base)):
            t[tuple(int(d[r]) for d in self.row_dom)] = weights[r]
        return t

    def contracted_sum(self, weights, order=None, guard=10**7):
        """Variable elimination over copy labels, one vertex at a time."""
        t = self.tensor(weights, guard)
        labs = self.labels()
        letters = {lab: chr(ord("a") + k) if k < 26 else chr(ord("A") + k - 26) for k, lab in enumerate(labs)}
        if len(labs) > 52:
            raise GuardError("too many copy labels to contract")
        factors = []
        for iota in self.patterns:
            sub = "".join(letters[self.label(j, iota)] for j in range(len(self.owning)))
            factors.append((sub, t))
        order = order or self.elimination_order()
        for i in order:
            for lab in [lab for lab in labs if min(lab[0], key=order.index) == i]:
                ch = letters[lab]
                hit = [f for f in factors if ch in f[0]]
                rest = [f for f in factors if ch not in f[0]]
                keep = "".join(sorted(set("".join(s for s, _ in hit)) - {ch}))
                expr = ",".join(s for s, _ in hit) + "->" + keep
                arr = np.einsum(expr, *[a for _, a in hit], dtype=object)
                if not keep:
                    arr = np.asarray(arr, dtype=object)
                if arr.size > guard:
                    raise GuardError(f"intermediate table of {arr.size} entries exceeds guard {guard}")
                factors = rest + [(keep, arr)]
        total = 1
        for s, a in factors:
            total *= a.item() if hasattr(a, "item") else a
        return total

    def elimination_order(self) -> list:
        """Vertices by (number of incident cover blocks, index)."""
        spec = self.sys.spec
        inc = {i: sum(1 for b in spec.blocks if len(b.subset) > 1 and i in b.subset and set(b.subset) < set(self.top))
               for i in self.top}
        return sorted(self.top, key=lambda i: (inc[i], i))

    def count(self) -> int:
        return int(self.contracted_sum([1] * len(self.base)))

    def materialize(self, guard=None) -> PointSet:
        n = self.count()
        check_guard(n if guard is None else (n if n <= guard else guard + 1), "doubling")
        return PointSet(self.coords, np.array(list(self), dtype=np.int64).reshape(-1, len(self.coords)))


def doubling(sys, u) -> Doubled:
    """D(Omega restricted to P(u)^-), iterated lazily."""
    return Doubled(sys, u)


def doubling_outside(sys, u) -> Doubled:
    """Doubling of the boundary of V with the coordinates of u kept single."""
    return Doubled(sys, sys.spec.vertices, single=tuple(u))
