"""Frobenius specialization and exact enumeration of every Omega(u).

sigma^k(v)^e becomes v^(e*q^k). Points live in F_{q^m}. Each cover block is
solved per base point in its declared triangular order. When the resolving
equation has the shape h(w) = g(known), the values of h over the whole field
are tabulated once and every base point becomes a table lookup; otherwise
the univariate polynomial is rebuilt per distinct coefficient pattern and
scanned.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .gf import FieldCtx, FieldError, GuardError, is_prime, make_field, prime_power
from .lang import CoverBlock, DiffPolynomial, SystemSpec, resolution_plan, subset_key, vertex_var, fmt_subset, rebind_char
from .points import PointSet, check_guard, join


class SpecializationError(ValueError):
    pass


@dataclass(frozen=True)
class SpecPoly:
    """Ordinary sparse polynomial over F_p: terms ((var, exponent), ...) -> coeff in [0, p)."""

    p: int
    terms: tuple

    def variables(self) -> set:
        return {v for m, _ in self.terms for v, _ in m}

    def __str__(self):
        if not self.terms:
            return "0"
        out = []
        for mono, c in self.terms:
            f = "*".join(v if e == 1 else f"{v}^{e}" for v, e in mono)
            out.append(f"{c}*{f}" if f and c != 1 else (f or str(c)))
        return " + ".join(out)


def check_q(p: int, q: int) -> int:
    pk = prime_power(q)
    if pk is None or pk[0] != p:
        raise FieldError(f"q={q} is not a power of the characteristic {p}")
    return pk[1]


@lru_cache(maxsize=4096)
def specialize_poly(poly: DiffPolynomial, q: int) -> SpecPoly:
    check_q(poly.p, q)
    acc = {}
    for mono, c in poly.terms:
        exps = {}
        for v, k, e in mono:
            exps[v] = exps.get(v, 0) + e * q**k
        key = tuple(sorted(exps.items()))
        acc[key] = (acc.get(key, 0) + c) % poly.p
    terms = tuple(sorted((m, c) for m, c in acc.items() if c))
    return SpecPoly(poly.p, terms)


def field_for(p: int, q: int, m: int) -> FieldCtx:
    k = check_q(p, q)
    if m < 1:
        raise ValueError("degree bound m must be at least 1")
    return make_field(p, k * m)


# -- vectorized evaluation -------------------------------------------------

def eval_terms(ctx: FieldCtx, terms, cols: dict, nrows: int) -> np.ndarray:
    out = np.zeros(nrows, dtype=np.int64)
    order = ctx.order - 1
    for mono, c in terms:
        cc = ctx.embed(c)
        if not mono:
            out = ctx.vadd(out, np.int64(cc))
            continue
        lg = np.full(nrows, int(ctx.vlog(cc)), dtype=np.int64)
        zero = np.zeros(nrows, dtype=bool)
        for v, e in mono:
            col = cols[v]
            zero |= col == 0
            er = e % order
            if er:
                lg = (lg + ctx.vlog(col) * er) % order
        val = np.where(zero, 0, ctx.vexp(lg))
        out = ctx.vadd(out, val)
    return out


def eval_poly(ctx: FieldCtx, sp: SpecPoly, cols: dict, nrows: int) -> np.ndarray:
    return eval_terms(ctx, sp.terms, cols, nrows)


_TABLES: dict = {}


def _root_table(ctx: FieldCtx, var: str, h_terms: tuple):
    """Group field elements by the value of h; values in each group ascend."""
    key = (ctx.p, ctx.n, var, h_terms)
    hit = _TABLES.get(key)
    if hit is not None:
        return hit
    xs = ctx.all_elements()
    hv = eval_terms(ctx, h_terms, {var: xs}, len(xs))
    order = np.argsort(hv, kind="stable")
    offsets = np.searchsorted(hv[order], np.arange(ctx.order + 1))
    if len(_TABLES) > 256:
        _TABLES.clear()
    _TABLES[key] = (offsets, order)
    return offsets, order


def _expand(cols: dict, counts: np.ndarray):
    idx = np.repeat(np.arange(len(counts)), counts)
    return {k: v[idx] for k, v in cols.items()}, idx


def _solve_var(ctx, var, sp: SpecPoly, cols: dict, nrows: int, base_coords):
    """Return (new_cols, nrows) after adjoining every root of sp in var."""
    w_terms = [(m, c) for m, c in sp.terms if any(v == var for v, _ in m)]
    rest = [(m, c) for m, c in sp.terms if not any(v == var for v, _ in m)]
    separable = all(len(m) == 1 for m, _ in w_terms)
    if separable:
        offsets, order = _root_table(ctx, var, tuple(w_terms))
        target = ctx.vneg(eval_terms(ctx, rest, cols, nrows))
        lo = offsets[target]
        counts = offsets[target + 1] - lo
        total = int(counts.sum())
        check_guard(total)
        new, idx = _expand(cols, counts)
        pos = np.repeat(lo, counts) + (np.arange(total) - np.repeat(np.cumsum(counts) - counts, counts))
        new[var] = order[pos]
        return new, total
    # coefficients of the univariate polynomial, one column per exponent of var
    groups = {}
    for m, c in w_terms:
        e = dict(m)[var]
        other = tuple((v, x) for v, x in m if v != var)
        groups.setdefault(e, []).append((other, c))
    exps = sorted(groups)
    mat = np.stack([eval_terms(ctx, groups[e], cols, nrows) for e in exps]
                   + [eval_terms(ctx, rest, cols, nrows)], axis=1) if nrows else np.zeros((0, len(exps) + 1), np.int64)
    uniq, inv = np.unique(mat, axis=0, return_inverse=True) if nrows else (mat, np.zeros(0, np.int64))
    inv = inv.reshape(-1)
    xs = ctx.all_elements()
    roots_of = []
    for r, row in enumerate(uniq):
        if not row[:-1].any():
            if row[-1] == 0:
                bad = int(np.argmax(inv == r))
                point = {c: int(cols[c][bad]) for c in base_coords}
                raise SpecializationError(
                    f"resolving equation for {var} vanishes identically at base point {point}")
            roots_of.append(np.zeros(0, np.int64))
            continue
        acc = np.full(len(xs), row[-1], dtype=np.int64)
        for e, coef in zip(exps, row[:-1]):
            if coef:
                acc = ctx.vadd(acc, ctx.vmul(np.int64(coef), ctx.vpow(xs, e)))
        roots_of.append(xs[acc == 0])
    counts = np.array([len(roots_of[i]) for i in inv], dtype=np.int64) if nrows else np.zeros(0, np.int64)
    total = int(counts.sum())
    check_guard(total)
    new, _ = _expand(cols, counts)
    new[var] = np.concatenate([roots_of[i] for i in inv]) if total else np.zeros(0, np.int64)
    return new, total


def solve_block(ctx: FieldCtx, q: int, base: PointSet, block: CoverBlock, known: set,
                eqs=None, workers: int = 1) -> PointSet:
    """All completions of base points by the block's cover variables."""
    eqs = block.eqs if eqs is None else eqs
    sub = CoverBlock(block.subset, block.vars, tuple(eqs))
    plan, bad = resolution_plan(sub, known)
    if bad is not None:
        raise SpecializationError(f"block {fmt_subset(block.subset)} is not triangular at {bad}")
    used = {j for _, j in plan}
    specs = [specialize_poly(e, q) for e in eqs]
    coords = base.coords + tuple(block.vars)

    def run(chunk: np.ndarray) -> np.ndarray:
        cols = {c: chunk[:, i] for i, c in enumerate(base.coords)}
        n = len(chunk)
        for var, j in plan:
            cols, n = _solve_var(ctx, var, specs[j], cols, n, base.coords)
        keep = np.ones(n, dtype=bool)
        for j, sp in enumerate(specs):
            if j not in used and n:
                keep &= eval_poly(ctx, sp, cols, n) == 0
        if not coords:
            return np.zeros((int(keep.any()) if n else 0, 0), np.int64)
        arr = np.stack([cols[c] for c in coords], axis=1) if n else np.zeros((0, len(coords)), np.int64)
        return arr[keep]

    data = base.data
    if workers > 1 and len(data) > 1:
        chunks = np.array_split(data, workers)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, chunks))
        arr = np.concatenate(parts) if parts else np.zeros((0, len(coords)), np.int64)
    else:
        arr = run(data)
    if not coords:
        return PointSet.unit() if len(arr) else PointSet.empty(())
    return PointSet(coords, arr)


# -- the specialized system -------------------------------------------------

def layout(spec: SystemSpec, u, proper: bool = False) -> tuple:
    """Vertex coordinates of u, then cover coordinates of each v <= u by subset."""
    u = tuple(sorted(u))
    out = [vertex_var(i) for i in u]
    for b in spec.blocks:
        if set(b.subset) <= set(u) and not (proper and b.subset == u):
            out.extend(b.vars)
    return tuple(out)


def _vertex_only(spec, i):
    b = spec.block((i,))
    xi = vertex_var(i)
    eqs = b.eqs if b else ()
    return [e for e in eqs if e.variables() <= {xi}], [e for e in eqs if not e.variables() <= {xi}]


def sort_base(spec: SystemSpec, i: int, q: int, m: int) -> PointSet:
    """Values of x_i satisfying the sort equations that mention only x_i."""
    ctx = field_for(spec.p, q, m)
    xi = vertex_var(i)
    vonly, _ = _vertex_only(spec, i)
    resolver = [e for e in vonly if xi in e.variables()]
    if resolver:
        sp = specialize_poly(resolver[0], q)
        offsets, order = _root_table(ctx, xi, sp.terms)
        cand = order[offsets[0]:offsets[1]]
        rest = [e for e in vonly if e is not resolver[0]]
    else:
        cand = ctx.all_elements()
        rest = vonly
    keep = np.ones(len(cand), dtype=bool)
    for e in rest:
        keep &= eval_poly(ctx, specialize_poly(e, q), {xi: cand}, len(cand)) == 0
    return PointSet((xi,), cand[keep].reshape(-1, 1))


def enumerate_sort(spec: SystemSpec, i: int, q: int, m: int = 1, workers: int = 1) -> PointSet:
    ctx = field_for(spec.p, q, m)
    base = sort_base(spec, i, q, m)
    b = spec.block((i,)) or CoverBlock((i,))
    _, others = _vertex_only(spec, i)
    return solve_block(ctx, q, base, b, {vertex_var(i)}, eqs=others, workers=workers)


def enumerate_block(spec: SystemSpec, u, q: int, m: int, base: PointSet, workers: int = 1) -> PointSet:
    u = tuple(sorted(u))
    if len(u) == 1:
        return enumerate_sort(spec, u[0], q, m, workers)
    ctx = field_for(spec.p, q, m)
    b = spec.block(u)
    if b is None:
        return base
    known = set(base.coords)
    return solve_block(ctx, q, base, b, known, workers=workers)


class SpecializedSystem:
    """All Omega(u) of a spec at (q, m); lazily extended to any u <= V."""

    def __init__(self, spec: SystemSpec, q: int, m: int = 1, workers: int = 1):
        self.spec = spec
        self.q = q
        self.m = m
        self.workers = workers
        self.ctx = field_for(spec.p, q, m)
        self._omega: dict = {(): PointSet.unit()}
        self._minus: dict = {}
        self._cache: dict = {}

    @property
    def vertices(self):
        return self.spec.vertices

    def layout(self, u, proper=False):
        return layout(self.spec, u, proper)

    def omega(self, u) -> PointSet:
        u = tuple(sorted(u))
        hit = self._omega.get(u)
        if hit is not None:
            return hit
        if len(u) == 1:
            ps = enumerate_sort(self.spec, u[0], self.q, self.m, self.workers)
        else:
            base = self.boundary(u)
            ps = enumerate_block(self.spec, u, self.q, self.m, base, self.workers)
        ps = ps.reorder(self.layout(u)) if ps.coords != self.layout(u) else ps
        self._omega[u] = ps
        return ps

    def boundary(self, u) -> PointSet:
        """Omega(u)^-: the fibre product of Omega(v), v a proper subset of u.

        For a singleton carrying auxiliary sort variables this is the base
        line of x_i cut out by the equations in x_i alone, so that the sort
        is read as a cover of that line.
        """
        u = tuple(sorted(u))
        hit = self._minus.get(u)
        if hit is not None:
            return hit
        if not u:
            ps = PointSet.unit()
        elif len(u) == 1:
            ps = sort_base(self.spec, u[0], self.q, self.m)
        else:
            ps = None
            for j in u:
                part = self.omega(tuple(x for x in u if x != j))
                ps = part if ps is None else join(ps, part)
            ps = ps.reorder(self.layout(u, proper=True))
        self._minus[u] = ps
        return ps

    def counts(self) -> dict:
        return {fmt_subset(u): len(self.omega(u)) for u in self.spec.closure()}

    def total_points(self) -> int:
        return sum(len(ps) for ps in self._omega.values())


def enumerate_system(spec: SystemSpec, q: int, m: int = 1, workers: int = 1) -> SpecializedSystem:
    """Enumerate sorts, then blocks by increasing |u|, over the support's closure."""
    sys = SpecializedSystem(spec, q, m, workers)
    total = 0
    for u in spec.closure():
        total += len(sys.omega(u))
        check_guard(total, "specialized system")
    return sys


def at_q(spec: SystemSpec, q: int, m: int = 1, workers: int = 1) -> SpecializedSystem:
    """Specialize at q, re-reading the system in the characteristic of q when it differs."""
    pk = prime_power(q)
    if pk is not None and pk[0] != spec.p:
        spec = rebind_char(spec, pk[0])
    return SpecializedSystem(spec, q, m, workers)
