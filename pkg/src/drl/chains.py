"""Chains, random chains, and the section and regularity decompositions."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .lang import fmt_subset, subset_key
from .lattice import fibre_signature_classes, index_in, proper_subsets
from .points import PointSet, member_mask

SURROGATE = "surrogate-verified"


@dataclass
class Chain:
    """W(v) for subsets v; each set carries its own coordinate names."""

    sets: dict

    def __getitem__(self, v):
        return self.sets[tuple(sorted(v))]

    def subsets(self):
        return sorted(self.sets, key=subset_key)


@dataclass(frozen=True)
class Violation:
    u: tuple
    v: tuple
    point: tuple
    kind: str

    def __str__(self):
        return f"{self.kind}: W({fmt_subset(self.u)}) point {self.point} vs W({fmt_subset(self.v)})"


def _carrier(sys, v, ps: PointSet, top=False) -> PointSet:
    """Omega(v) for lower sets; at the top, Omega(v)^- unless W carries cover coordinates."""
    if top and ps.coords == sys.layout(v, proper=True):
        return sys.boundary(v)
    if ps.coords == sys.layout(v):
        return sys.omega(v)
    return sys.boundary(v)


def _first_missing(ps: PointSet, mask) -> tuple:
    bad = np.flatnonzero(~mask)
    return tuple(int(x) for x in ps.data[bad[0]])


def validate_chain(sys, W: Chain, I=None) -> list:
    """Chain axioms, plus the I-chain axiom when a complex I is given."""
    out = []
    subs = W.subsets()
    top = max(subs, key=len)
    for v in subs:
        ps = W[v]
        carrier = _carrier(sys, v, ps, v == top)
        if ps.coords != carrier.coords:
            out.append(Violation(v, v, (), "bad-layout"))
            continue
        m = member_mask(ps, carrier)
        if len(ps) and not m.all():
            out.append(Violation(v, v, _first_missing(ps, m), "not-in-carrier"))
    for w in subs:
        for v in subs:
            if set(v) < set(w) and set(W[v].coords) <= set(W[w].coords):
                m = member_mask(W[w], W[v])
                if len(W[w]) and not m.all():
                    out.append(Violation(w, v, _first_missing(W[w], m), "projection"))
    if I is not None:
        I = {tuple(sorted(x)) for x in I}
        for w in subs:
            if w in I or len(w) < 2:
                continue
            carrier = _carrier(sys, w, W[w], w == top)
            mask = np.ones(len(carrier), dtype=bool)
            for v in subs:
                if set(v) < set(w) and set(W[v].coords) <= set(carrier.coords):
                    mask &= member_mask(carrier, W[v])
            expect = carrier.select(mask)
            if expect != W[w]:
                extra = [p for p in W[w] if p not in expect]
                lack = [p for p in expect if p not in W[w]]
                pt = (extra or lack)[0]
                out.append(Violation(w, w, pt, "not-fibre-product"))
    return out


def _as_fraction(density) -> Fraction:
    d = Fraction(density)
    if not (0 < d <= 1):
        raise ValueError("density must lie in (0, 1]")
    return d


def close_chain(sys, u, masks: dict) -> Chain:
    """Restore the chain axiom downward and put the fibre product at u."""
    u = tuple(sorted(u))
    sets = {(): PointSet.unit() if masks.get((), True) else PointSet.empty(())}
    for v in proper_subsets(u):
        ps = sys.omega(v)
        keep = np.asarray(masks.get(v, np.ones(len(ps), bool)), dtype=bool).copy()
        for w in proper_subsets(v, nonempty=False):
            if len(w) == len(v) - 1:
                keep &= member_mask(ps, sets[w])
        sets[v] = ps.select(keep)
    top = sys.boundary(u)
    keep = np.ones(len(top), dtype=bool)
    for v in proper_subsets(u, nonempty=False):
        if len(v) == len(u) - 1:
            keep &= member_mask(top, sets[v])
    sets[u] = top.select(keep)
    return Chain(sets)


def random_chain(sys, u, density=Fraction(1, 2), seed: int = 0) -> Chain:
    """Seeded P(u)^- chain: keep each point with the given density, close
    downward, and take the fibre product at u. The empty set's point is
    always kept so that the chain is not trivially empty."""
    d = _as_fraction(density)
    rng = np.random.default_rng(seed)
    masks = {}
    for v in proper_subsets(u):
        n = len(sys.omega(v))
        masks[v] = rng.integers(0, d.denominator, size=n) < d.numerator
    return close_chain(sys, u, masks)


def all_chains(sys, u, max_bits: int = 20):
    """Every P(u)^- chain (fibre product at u), including the empty one."""
    subs = proper_subsets(u)
    sizes = [len(sys.omega(v)) for v in subs]
    if sum(sizes) > max_bits:
        raise ValueError(f"{sum(sizes)} points is too many for exhaustive chains")
    seen = set()
    for bits in itertools.product(*[range(1 << n) for n in sizes]):
        masks = {v: np.array([(b >> k) & 1 for k in range(n)], dtype=bool)
                 for v, b, n in zip(subs, bits, sizes)}
        ch = close_chain(sys, u, masks)
        key = tuple(tuple(map(tuple, ch[v].data.tolist())) for v in subs)
        if key in seen:
            continue
        seen.add(key)
        yield ch
    yield close_chain(sys, u, {(): False, **{v: np.zeros(n, bool) for v, n in zip(subs, sizes)}})


# -- decompositions -----------------------------------------------------------

@dataclass
class Piece:
    points: PointSet
    witness: PointSet | None
    chain: tuple     # indices of the lower pieces, one per proper nonempty subset
    klass: tuple     # fibre signature of the base points
    section: int     # k of the k-th element section
    lam: Fraction


@dataclass
class ChainDecomposition:
    pieces: dict                      # subset -> list of Piece
    properties: dict = field(default_factory=dict)
    kind: str = ""

    def count(self) -> int:
        return sum(len(v) for v in self.pieces.values())

    def counts(self) -> dict:
        return {fmt_subset(u): len(ps) for u, ps in sorted(self.pieces.items(), key=lambda t: subset_key(t[0]))}

    def chain_of(self, u, k) -> Chain:
        """The P(u) chain ending in the k-th piece at u."""
        u = tuple(sorted(u))
        piece = self.pieces[u][k]
        sets = {(): PointSet.unit(), u: piece.points}
        for v, j in zip(self._lower(u), piece.chain):
            sets[v] = self.pieces[v][j].points
        return Chain(sets)

    def _lower(self, u):
        return [v for v in proper_subsets(u) if v in self.pieces]


def _unit_piece() -> Piece:
    return Piece(PointSet.unit(), PointSet.unit(), (), (), 0, Fraction(1))


def _piece_index(pieces, carrier: PointSet) -> np.ndarray:
    """For each row of carrier, the index of the piece containing it (-1 if none)."""
    out = np.full(len(carrier), -1, dtype=np.int64)
    for j, pc in enumerate(pieces):
        out[member_mask(carrier, pc.points)] = j
    return out


def _chain_keys(pieces, u, base: PointSet):
    lower = [v for v in proper_subsets(u) if v in pieces]
    cols = [_piece_index(pieces[v], base) if all(c in base.coords for c in pieces[v][0].points.coords)
            else np.zeros(len(base), np.int64) for v in lower if pieces[v]]
    if not cols:
        return np.zeros((len(base), 0), dtype=np.int64)
    return np.stack(cols, axis=1)


def _sections(om: PointSet, base: PointSet, base_class: np.ndarray, base_chain: np.ndarray):
    """Split om into k-th element sections over base, grouped by (chain, class).

    Returns a dict (chain, class id, k) -> row indices of om.
    """
    bidx = index_in(base, om.columns(base.coords))
    # rows of om are sorted, so fibres are contiguous and already canonical
    k = np.zeros(len(om), dtype=np.int64)
    if len(om):
        starts = np.r_[True, bidx[1:] != bidx[:-1]]
        grp = np.cumsum(starts) - 1
        first = np.flatnonzero(starts)
        k = np.arange(len(om)) - first[grp]
    groups = {}
    for r in range(len(om)):
        b = bidx[r]
        key = (tuple(base_chain[b].tolist()), int(base_class[b]), int(k[r]))
        groups.setdefault(key, []).append(r)
    return groups


def _class_ids(sys, u, base: PointSet):
    classes = fibre_signature_classes(sys, u)
    ids = np.full(len(base), -1, dtype=np.int64)
    for j, c in enumerate(classes):
        ids[member_mask(base, c.points)] = j
    return ids, classes


def _lift(om_ref: PointSet, base_coords, target: PointSet) -> np.ndarray:
    """For each row of target, the first row of om_ref restricting to it (-1 if none)."""
    proj = om_ref.columns(base_coords)
    idx = index_in(target, proj)
    out = np.full(len(target), -1, dtype=np.int64)
    for r in range(len(idx) - 1, -1, -1):
        if idx[r] >= 0:
            out[idx[r]] = r
    return out


def _pi_injective(ps: PointSet, base_coords) -> bool:
    proj = ps.columns(base_coords)
    return len(np.unique(proj, axis=0)) == len(ps) if len(ps) else True


def _split_injective(ps: PointSet, base_coords) -> list:
    """k-th element split of ps by its image under pi, so each part is injective."""
    proj = ps.columns(base_coords)
    keys = np.unique(proj, axis=0, return_inverse=True)[1].reshape(-1)
    seen = {}
    rank = np.zeros(len(ps), dtype=np.int64)
    for r, kk in enumerate(keys.tolist()):
        rank[r] = seen.get(kk, 0)
        seen[kk] = rank[r] + 1
    return [ps.select(rank == j) for j in range(int(rank.max()) + 1)] if len(ps) else [ps]


def build_section_decomposition(sys_ref, sys_base, I=None) -> ChainDecomposition:
    """I-chain decomposition of the refinement with pi injective on every piece."""
    spec = sys_ref.spec
    I = sorted({tuple(sorted(x)) for x in (I or spec.closure()) if x}, key=subset_key)
    pieces = {(): [_unit_piece()]}
    injective = True
    for u in I:
        om = sys_ref.omega(u)
        base_coords = sys_base.layout(u)
        if len(u) == 1:
            # sections of pi over Omega(u), grouped by fibre size
            proj = om.columns(base_coords)
            keys = np.unique(proj, axis=0, return_inverse=True)[1].reshape(-1) if len(om) else np.zeros(0, int)
            sizes = np.bincount(keys) if len(om) else np.zeros(0, int)
            chain = np.zeros((len(om), 0), np.int64)
            k = np.zeros(len(om), dtype=np.int64)
            seen = {}
            for r, kk in enumerate(keys.tolist()):
                k[r] = seen.get(kk, 0)
                seen[kk] = k[r] + 1
            groups = {}
            for r in range(len(om)):
                groups.setdefault(((), int(sizes[keys[r]]), int(k[r])), []).append(r)
        else:
            base = sys_ref.boundary(u)
            chain = _chain_keys(pieces, u, base)
            cls, _ = _class_ids(sys_ref, u, base)
            groups = _sections(om, base, cls, chain)
        out = []
        total = len(om)
        for key in sorted(groups):
            ps = om.select(np.isin(np.arange(len(om)), groups[key]))
            parts = [ps] if _pi_injective(ps, base_coords) else _split_injective(ps, base_coords)
            injective &= len(parts) == 1
            for part in parts:
                out.append(Piece(part, None, key[0], (key[1],), key[2], Fraction(len(part), total or 1)))
        pieces[u] = out
    props = {"pi_injective": all(_pi_injective(p.points, sys_base.layout(u)) for u, ps in pieces.items() for p in ps),
             "split_for_injectivity": not injective}
    props["partition"] = _partition_ok(sys_ref, pieces, use_omega=True)
    return ChainDecomposition(pieces, props, "sections")


def _partition_ok(sys, pieces, use_omega=True) -> bool:
    for u, ps in pieces.items():
        carrier = sys.omega(u) if use_omega else sys.boundary(u)
        total = sum(len(p.points) for p in ps)
        if total != len(carrier):
            return False
        idx = np.zeros(len(carrier), dtype=np.int64)
        for p in ps:
            idx += member_mask(carrier, p.points)
        if len(carrier) and not (idx == 1).all():
            return False
    return True


def _images_equal_or_disjoint(sys, u, pieces) -> bool:
    base = sys.boundary(u)
    imgs = [set(map(tuple, p.points.columns(base.coords).tolist())) for p in pieces]
    for a, b in itertools.combinations(imgs, 2):
        if a & b and a != b:
            return False
    return True


def _enforce_equal_or_disjoint(sys, u, pieces) -> list:
    """Split pieces until their rho_u images are pairwise equal or disjoint."""
    base_coords = sys.boundary(u).coords
    changed = True
    while changed:
        changed = False
        imgs = [set(map(tuple, p.points.columns(base_coords).tolist())) for p in pieces]
        for i, j in itertools.combinations(range(len(pieces)), 2):
            a, b = imgs[i], imgs[j]
            if a & b and a != b:
                new = []
                for t, p in enumerate(pieces):
                    if t in (i, j):
                        other = b if t == i else a
                        proj = p.points.columns(base_coords)
                        inside = np.array([tuple(r) in other for r in proj.tolist()], dtype=bool)
                        for m in (inside, ~inside):
                            if m.any():
                                sub = p.points.select(m)
                                new.append(Piece(sub, None, p.chain, p.klass, p.section,
                                                 Fraction(len(sub), len(sys.omega(u)))))
                    else:
                        new.append(p)
                pieces = new
                changed = True
                break
    return pieces


def build_regular_decomposition(sys_base, sys_ref) -> ChainDecomposition:
    """Decomposition of the base system with section witnesses in the refinement.

    Fibre-signature classes stand in for irreducible components; pieces at u
    are k-th element sections of rho_u over each (lower chain, class) group,
    followed by a pass that forces rho_u images to be equal or disjoint.
    """
    if (sys_base.q, sys_base.m) != (sys_ref.q, sys_ref.m):
        raise ValueError("systems specialized at different (q, m)")
    spec = sys_base.spec
    subsets = [u for u in spec.closure() if u]
    pieces = {(): [_unit_piece()]}
    bijective = True
    enforced = False
    for u in subsets:
        om = sys_base.omega(u)
        om_ref = sys_ref.omega(u)
        base_coords = om.coords
        if any(c not in om_ref.coords for c in base_coords):
            raise ValueError(f"refinement lacks base coordinates at {fmt_subset(u)}")
        if len(u) == 1:
            # classes of Omega(u) by the number of lifts to the refinement
            idx = index_in(om, om_ref.columns(base_coords))
            nlift = np.bincount(idx[idx >= 0], minlength=len(om)) if len(om) else np.zeros(0, int)
            groups = {}
            for r in range(len(om)):
                groups.setdefault(((), (int(nlift[r]),), 0), []).append(r)
        else:
            base = sys_base.boundary(u)
            chain = _chain_keys(pieces, u, base)
            cls, classes = _class_ids(sys_base, u, base)
            raw = _sections(om, base, cls, chain)
            groups = {(c, classes[k].key, s): rows for (c, k, s), rows in raw.items()}
        out = []
        lift = _lift(om_ref, base_coords, om)
        for key in sorted(groups):
            mask = np.zeros(len(om), dtype=bool)
            mask[groups[key]] = True
            ps = om.select(mask)
            rows = lift[mask]
            if (rows >= 0).all():
                wit = PointSet(om_ref.coords, om_ref.data[rows])
                bijective &= len(wit) == len(ps) and wit.project(base_coords) == ps
            else:
                wit = None
            out.append(Piece(ps, wit, key[0], key[1], key[2], Fraction(len(ps), len(om) or 1)))
        if len(u) > 1 and not _images_equal_or_disjoint(sys_base, u, out):
            out = _enforce_equal_or_disjoint(sys_base, u, out)
            enforced = True
        pieces[u] = out
    lam = {}
    for u, ps in pieces.items():
        if not ps:
            continue
        live = [p for p in ps if p.witness is not None] or ps
        biggest = max(live, key=lambda p: (len(p.points), p.klass))
        generic = [p.lam for p in live if p.klass == biggest.klass]
        lam[fmt_subset(u)] = {"min": min(p.lam for p in ps), "generic": min(generic)}
    props = {
        "(1) lambda": lam,
        "(2) sections bijective": bijective and all(
            p.witness is None or len(p.witness) == len(p.points) for ps in pieces.values() for p in ps),
        "(2) witnessed pieces": sum(p.witness is not None for ps in pieces.values() for p in ps),
        "(2) unwitnessed pieces": sum(p.witness is None for ps in pieces.values() for p in ps),
        "(3) witnesses form chains": SURROGATE,
        "(4) component images": SURROGATE,
        "(5) images equal or disjoint": all(_images_equal_or_disjoint(sys_base, u, ps)
                                            for u, ps in pieces.items() if len(u) > 1),
        "(5) enforcement splits": enforced,
        "partition": _partition_ok(sys_base, pieces),
    }
    return ChainDecomposition(pieces, props, "regular")


def decomposition_chains_valid(sys, dec: ChainDecomposition) -> bool:
    for u, ps in dec.pieces.items():
        for k in range(len(ps)):
            if validate_chain(sys, dec.chain_of(u, k)):
                return False
    return True


def decomposition_to_json(dec) -> dict:
    def enc(v):
        if isinstance(v, Fraction):
            return f"{v.numerator}/{v.denominator}"
        if isinstance(v, dict):
            return {k: enc(x) for k, x in v.items()}
        return v

    pieces = {}
    for u in sorted(dec.pieces, key=lambda t: (len(t), t)):
        pieces[fmt_subset(u)] = [{
            "coords": list(p.points.coords),
            "points": p.points.data.tolist(),
            "witness": None if p.witness is None else {"coords": list(p.witness.coords),
                                                       "points": p.witness.data.tolist()},
            "lambda": f"{p.lam.numerator}/{p.lam.denominator}",
            "class": list(p.klass),
            "chain": list(p.chain),
            "section": p.section,
        } for p in dec.pieces[u]]
    return {"kind": dec.kind, "pieces": pieces, "properties": enc(dec.properties)}
