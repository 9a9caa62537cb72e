"""Quantitative audits on specialized systems.

Counts and ratios are exact (ints and Fractions); floats only appear when a
report is rendered.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .gf import GuardError
from .lang import fmt_subset, rebind_refinement, subset_key
from .lattice import (Doubled, apply_refinement, fibre_product_over, fibre_product_plus_count,
                      fibre_signature_classes, fibre_sizes, largest_class, proper_subsets, rho_image)
from .points import PointSet, member_mask
from .specializer import SpecializedSystem, at_q

# multiplicative constants in front of the q-power bounds
CONSTANTS = {
    "independence": Fraction(2),
    "stationarity": Fraction(4),
    "quasirandom": Fraction(1),
    "uniformity": Fraction(1),
    "fubini": Fraction(1),
    "residual": Fraction(1),
    "fibres": Fraction(1),
}
SLOPE_TOL = 0.25
NAIVE_GUARD = 10**6


def frac_str(x: Fraction) -> str:
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


@dataclass(frozen=True)
class Bound:
    """c * q^e, compared exactly."""

    c: Fraction
    e: Fraction

    def __str__(self):
        c = "" if self.c == 1 else f"{frac_str(self.c) if self.c.denominator != 1 else self.c.numerator}*"
        return f"{c}q^({frac_str(self.e) if self.e.denominator != 1 else self.e.numerator})"

    def value(self, q: int) -> float:
        return float(self.c) * q ** float(self.e)

    def holds(self, dev: Fraction, q: int) -> bool:
        dev = Fraction(dev)
        if dev < 0:
            raise ValueError("deviation must be nonnegative")
        n, d = self.e.numerator, self.e.denominator
        if n >= 0:
            return dev**d <= self.c**d * Fraction(q) ** n
        return dev**d * Fraction(q) ** (-n) <= self.c**d


def exceeds_power(dev: Fraction, q: int, c, e) -> bool:
    return not Bound(Fraction(c), Fraction(e)).holds(dev, q)


@dataclass
class CheckReport:
    kind: str
    u: tuple
    q: int
    m: int
    lhs: Fraction
    rhs: Fraction
    bound: Bound | None = None
    counts: dict = field(default_factory=dict)
    J: tuple | None = None
    extra: dict = field(default_factory=dict)
    passed: bool | None = None

    def __post_init__(self):
        self.lhs = Fraction(self.lhs)
        self.rhs = Fraction(self.rhs)
        if self.passed is None and self.bound is not None:
            self.passed = self.bound.holds(self.deviation, self.q)

    @property
    def deviation(self) -> Fraction:
        return abs(self.lhs - self.rhs)

    def to_dict(self) -> dict:
        d = {
            "kind": self.kind,
            "u": list(self.u),
            "counts": {str(k): (frac_str(v) if isinstance(v, Fraction) else v) for k, v in self.counts.items()},
            "lhs": frac_str(self.lhs),
            "rhs": frac_str(self.rhs),
            "deviation": frac_str(self.deviation),
            "deviation_float": float(self.deviation),
            "bound": str(self.bound) if self.bound else None,
            "bound_float": self.bound.value(self.q) if self.bound else None,
            "pass": True if self.passed is None else bool(self.passed),
        }
        if self.J is not None:
            d["J"] = [list(v) for v in self.J]
        if self.extra:
            d["extra"] = self.extra
        return d

    def summary(self) -> str:
        flag = "n/a" if self.passed is None else ("ok" if self.passed else "FAIL")
        b = f" bound {self.bound}={self.bound.value(self.q):.4g}" if self.bound else ""
        return f"{self.kind} u={fmt_subset(self.u)} q={self.q} m={self.m} dev={float(self.deviation):.4g}{b} {flag}"


@dataclass
class RationalEstimate:
    value: Fraction
    qs: list
    ratios: list
    residuals: list
    intercept: Fraction
    slope: float | None = None
    d: int | None = None
    residual_ok: bool = True

    @property
    def consistent(self) -> bool:
        return self.slope is None or self.d is None or abs(self.slope - self.d) <= SLOPE_TOL


# -- fitting ------------------------------------------------------------------

def _ls_intercept(xs, ys) -> tuple:
    """Exact least squares y = a + b x; returns (a, b)."""
    n = len(xs)
    sx, sy = sum(xs), sum(ys)
    sxx = sum(x * x for x in xs)
    sxy = sum(x * y for x, y in zip(xs, ys))
    den = n * sxx - sx * sx
    if den == 0:
        return Fraction(sy, n), Fraction(0)
    b = Fraction(n * sxy - sx * sy) / den
    a = (sy - b * sx) / n
    return Fraction(a), b


def simplest_within(x: Fraction, tol: Fraction, max_den: int) -> Fraction:
    """Smallest-denominator fraction within tol of x (bounded denominator)."""
    for den in range(1, max_den + 1):
        num = round(x * den)
        if abs(Fraction(num, den) - x) <= tol:
            return Fraction(num, den)
    return x.limit_denominator(max_den)


def loglog_slope(xs, ys) -> float | None:
    pts = [(math.log(x), math.log(float(y))) for x, y in zip(xs, ys) if y > 0]
    if len(pts) < 2:
        return None
    mx = sum(p[0] for p in pts) / len(pts)
    my = sum(p[1] for p in pts) / len(pts)
    sxx = sum((p[0] - mx) ** 2 for p in pts)
    if sxx == 0:
        return None
    return sum((p[0] - mx) * (p[1] - my) for p in pts) / sxx


def fit_ratios(qs, ratios, max_den: int = 64) -> tuple:
    """Limit of ratios as q grows: intercept in 1/q, snapped to a simple fraction."""
    xs = [Fraction(1, q) for q in qs]
    a, b = _ls_intercept(xs, ratios)
    fit_res = max((abs(r - (a + b * x)) for x, r in zip(xs, ratios)), default=Fraction(0))
    value = simplest_within(a, fit_res + Fraction(1, 2 * max_den * max_den), max_den)
    return value, a


def count_fit(counts, d: int, max_den: int = 64, c=None) -> RationalEstimate:
    """mu with N ~ mu q^d from samples (q, N)."""
    counts = sorted(counts)
    qs = [q for q, _ in counts]
    if len(qs) < 3 or len(set(qs)) != len(qs):
        raise ValueError("count_fit needs at least 3 samples with distinct q")
    ratios = [Fraction(n, q**d) for q, n in counts]
    value, a = fit_ratios(qs, ratios, max_den)
    res = [abs(r - value) for r in ratios]
    c = CONSTANTS["residual"] if c is None else Fraction(c)
    ok = all(Bound(c, Fraction(-1, 2)).holds(r, q) for r, q in zip(res, qs))
    slope = loglog_slope(qs, [n for _, n in counts])
    return RationalEstimate(value, qs, ratios, res, a, slope, d, ok)


def nu_estimate(systems, u, max_den: int = 64) -> RationalEstimate:
    """|rho_u Omega(u)| / |Omega(u)^-| across a q-sweep, reconstructed as a fraction."""
    u = tuple(sorted(u))
    qs, ratios = [], []
    for sys in sorted(systems, key=lambda s: s.q):
        carrier = sys.boundary(u)
        if len(carrier) == 0:
            raise ValueError(f"empty carrier at q={sys.q}")
        qs.append(sys.q)
        ratios.append(Fraction(len(rho_image(sys, u)), len(carrier)))
    if len(qs) == 1:
        return RationalEstimate(ratios[0].limit_denominator(max_den), qs, ratios, [Fraction(0)], ratios[0])
    value, a = fit_ratios(qs, ratios, max_den)
    res = [abs(r - value) for r in ratios]
    return RationalEstimate(value, qs, ratios, res, a, loglog_slope(qs, ratios), 0,
                            all(Bound(CONSTANTS["residual"], Fraction(-1, 2)).holds(r, q) for r, q in zip(res, qs)))


def decay_exponent(qs, devs) -> float:
    """Log-log slope of deviation against q; -inf when every deviation is 0."""
    if all(d == 0 for d in devs):
        return float("-inf")
    s = loglog_slope(qs, devs)
    return float("nan") if s is None else s


# -- measure checks -----------------------------------------------------------

def _dimension(sys, u) -> int:
    n = len(sys.omega(u))
    return round(math.log(n) / math.log(sys.q)) if n > 1 else 0


def fubini_check(sys, u, v, dim=None) -> list:
    """Fibre-sum identity and the modal-fibre comparison for Omega(u) -> Omega(v)."""
    u, v = tuple(sorted(u)), tuple(sorted(v))
    if not set(v) <= set(u):
        raise ValueError("v must be a subset of u")
    om_u, om_v = sys.omega(u), sys.omega(v)
    fib = np.zeros(len(om_v), dtype=np.int64)
    if len(om_u) and len(om_v):
        idx = member_index(om_v, om_u)
        fib = np.bincount(idx[idx >= 0], minlength=len(om_v))
    hist = _histogram(fib)
    modal = max(hist, key=lambda s: (hist[s], s)) if hist else 0
    counts = {"|Omega(u)|": len(om_u), "|Omega(v)|": len(om_v), "modal_fibre": modal}
    ident = CheckReport("fubini-sum", u, sys.q, sys.m, len(om_u), int(fib.sum()), counts=dict(counts),
                        passed=len(om_u) == int(fib.sum()), extra={"v": list(v)})
    dim = _dimension(sys, u) if dim is None else dim
    gen = CheckReport("fubini-modal", u, sys.q, sys.m, len(om_u), modal * len(om_v),
                      Bound(CONSTANTS["fubini"], Fraction(2 * dim - 1, 2)), counts=counts,
                      extra={"v": list(v), "histogram": {str(k): c for k, c in sorted(hist.items())}})
    return [ident, gen]


def member_index(target: PointSet, ps: PointSet) -> np.ndarray:
    from .lattice import index_in
    return index_in(target, ps.columns(target.coords))


def _histogram(sizes) -> dict:
    vals, cnt = np.unique(np.asarray(sizes, dtype=np.int64), return_counts=True)
    return {int(a): int(b) for a, b in zip(vals, cnt)}


def fibre_histogram(sys, u) -> CheckReport:
    """rho_u fibre sizes over Omega(u)^-, with the non-modal share vs c/q."""
    u = tuple(sorted(u))
    hist = _histogram(fibre_sizes(sys, u))
    total = sum(hist.values())
    modal = max(hist, key=lambda s: (hist[s], s)) if hist else 0
    off = Fraction(total - hist.get(modal, 0), total or 1)
    return CheckReport("fibres", u, sys.q, sys.m, off, 0, Bound(CONSTANTS["fibres"], Fraction(-1)),
                       counts={str(k): c for k, c in sorted(hist.items())}, extra={"modal": modal})


# -- independence -------------------------------------------------------------

def _check_antichain(spec, J) -> tuple:
    J = tuple(sorted({tuple(sorted(u)) for u in J}, key=subset_key))
    if not J:
        raise ValueError("J is empty")
    for a in J:
        if len(a) < 2:
            raise ValueError(f"{fmt_subset(a)} has fewer than 2 vertices")
        for b in J:
            if a != b and set(a) <= set(b):
                raise ValueError(f"J is not an antichain: {fmt_subset(a)} <= {fmt_subset(b)}")
    if set().union(*map(set, J)) != set(spec.vertices):
        raise ValueError("the union of J is not V")
    return J


def boundary_family(J) -> list:
    """Maximal members of the boundary complex of J."""
    fam = {v for u in J for v in proper_subsets(u)}
    return sorted((v for v in fam if not any(set(v) < set(w) for w in fam)), key=subset_key)


def omega0(sys, J, u=None) -> PointSet:
    """Omega restricted to the boundary of J, evaluated at u (default V)."""
    fam = boundary_family(J)
    if u is not None:
        u = set(u)
        fam = sorted({tuple(sorted(set(v) & u)) for v in fam if set(v) & u}, key=subset_key)
        fam = [v for v in fam if not any(set(v) < set(w) for w in fam)]
    key = ("omega0", tuple(J), None if u is None else tuple(sorted(u)))
    hit = sys._cache.get(key)
    if hit is None:
        hit = fibre_product_over(sys, fam)
        sys._cache[key] = hit
    return hit


def independence_check(sys, J) -> CheckReport:
    J = _check_antichain(sys.spec, J)
    om0 = omega0(sys, J)
    keep = np.ones(len(om0), dtype=bool)
    rhs = Fraction(1)
    counts = {"|Omega_0(V)|": len(om0)}
    for u in J:
        img = rho_image(sys, u)
        keep &= member_mask(om0, img)
        rhs *= Fraction(len(img), len(sys.boundary(u)))
        counts[f"|phi{fmt_subset(u)}|"] = len(img)
        counts[f"|Omega_0{fmt_subset(u)}|"] = len(sys.boundary(u))
    hit = int(keep.sum())
    counts["|hits|"] = hit
    V = tuple(sorted(sys.spec.vertices))
    return CheckReport("independence", V, sys.q, sys.m, Fraction(hit, len(om0) or 1), rhs,
                       Bound(CONSTANTS["independence"], Fraction(-1, 2)), counts, J=J)


def generic_points(sys, J, u) -> PointSet:
    """Points of Omega_0(u) over the largest fibre-signature class (when u has one)."""
    u = tuple(sorted(u))
    pts = omega0(sys, J, u) if u != tuple(sorted(sys.spec.vertices)) else omega0(sys, J)
    if u in sys.spec.closure() and len(u) >= 1 and all(c in pts.coords for c in sys.boundary(u).coords):
        classes = fibre_signature_classes(sys, u)
        live = [c for c in classes if c.fibre_size > 0] or classes
        big = largest_class(live)
        pts = pts.select(member_mask(pts, big.points))
    return pts


def stationarity_check(sys, J, u, samples: int = 5, seed: int = 0) -> list:
    J = _check_antichain(sys.spec, J)
    u = tuple(sorted(u))
    if not u:
        raise ValueError("u must be nonempty")
    if samples < 1:
        raise ValueError("samples must be at least 1")
    gen = generic_points(sys, J, u)
    if len(gen) == 0:
        raise ValueError(f"no generic points at {fmt_subset(u)}")
    rng = np.random.default_rng(seed)
    pick = np.sort(rng.choice(len(gen), size=min(samples, len(gen)), replace=False))
    om0 = omega0(sys, J)
    images = {v: rho_image(sys, v) for v in J}
    inside = np.ones(len(om0), dtype=bool)
    for v in J:
        inside &= member_mask(om0, images[v])
    out = []
    for k in pick.tolist():
        a = PointSet(gen.coords, gen.data[k:k + 1], _sorted=True)
        fib = member_mask(om0, a)
        nf = int(fib.sum())
        lhs = Fraction(int((fib & inside).sum()), nf) if nf else Fraction(0)
        rhs = Fraction(1)
        for v in J:
            base = sys.boundary(v)
            shared = [c for c in a.coords if c in base.coords]
            sel = member_mask(base, a.project(shared)) if shared else np.ones(len(base), bool)
            ns = int(sel.sum())
            rhs *= Fraction(int((sel & member_mask(base, images[v])).sum()), ns) if ns else Fraction(0)
        out.append(CheckReport("stationarity", u, sys.q, sys.m, lhs, rhs,
                               Bound(CONSTANTS["stationarity"], Fraction(-1, 2)),
                               {"|fibre|": nf}, J=J, extra={"a": [int(x) for x in a.data[0]]}))
    return out


# -- octahedral sums ----------------------------------------------------------

def _as_weights(base: PointSet, f) -> list:
    if callable(f):
        return [Fraction(f(row)) for row in base.tuples()]
    if isinstance(f, dict):
        return [Fraction(f.get(row, 0)) for row in base.tuples()]
    w = [Fraction(x) for x in f]
    if len(w) != len(base):
        raise ValueError("weights must align with the rows of Omega(u)^-")
    return w


def octahedral_sum(sys, u, f, mode: str = "contracted", guard: int = NAIVE_GUARD, order=None) -> Fraction:
    """Sum over the doubling of the product of f over all copy patterns.

    f is a callable on base rows, a dict keyed by base rows, or a sequence
    aligned with the rows of Omega(u)^-.
    """
    d = Doubled(sys, u)
    w = _as_weights(d.base, f)
    den = math.lcm(*[x.denominator for x in w]) if w else 1
    ints = [int(x * den) for x in w]
    scale = Fraction(1, den ** len(d.patterns))
    if mode not in ("naive", "contracted", "both"):
        raise ValueError(f"unknown mode {mode}")
    res = None
    if mode in ("contracted", "both"):
        res = Fraction(int(d.contracted_sum(ints, order=order))) * scale
    if mode in ("naive", "both"):
        size = d.count()
        if size > guard:
            raise GuardError(f"doubling has {size} points, above the naive guard {guard}")
        naive = Fraction(int(d.naive_sum(ints))) * scale
        if res is not None and naive != res:
            raise AssertionError(f"naive {naive} and contracted {res} sums differ")
        res = naive
    return res


def balanced_indicator(sys, u) -> list:
    base = sys.boundary(u)
    ind = member_mask(base, rho_image(sys, u))
    dens = Fraction(int(ind.sum()), len(base) or 1)
    return [Fraction(int(b)) - dens for b in ind]


def quasirandom_report(sys, u, mode: str = "contracted") -> CheckReport:
    u = tuple(sorted(u))
    base = sys.boundary(u)
    f = balanced_indicator(sys, u)
    oct_ = octahedral_sum(sys, u, f, mode)
    norm = oct_ / (len(base) ** 2) if len(base) else Fraction(0)
    return CheckReport("quasirandom", u, sys.q, sys.m, norm, 0, Bound(CONSTANTS["quasirandom"], Fraction(-1, 2)),
                       {"|Omega(u)^-|": len(base), "|phi|": len(rho_image(sys, u)), "oct": oct_})


# -- edge uniformity ----------------------------------------------------------

def _uniformity(kind, sys, u, Wu: PointSet) -> CheckReport:
    base = sys.boundary(u)
    phi = rho_image(sys, u)
    Wu = Wu.reorder(base.coords) if Wu.coords != base.coords else Wu
    hits = int(member_mask(Wu, phi).sum())
    counts = {"|phi|": len(phi), "|W(u)|": len(Wu), "|phi & W(u)|": hits, "|Omega(u)^-|": len(base)}
    bound = Bound(CONSTANTS["uniformity"], Fraction(-1, 2 ** (len(u) + 1)))
    if len(phi) == 0:
        r = CheckReport(kind, u, sys.q, sys.m, 0, 0, bound, counts, extra={"note": "not-applicable: empty phi"})
        r.passed = None
        return r
    return CheckReport(kind, u, sys.q, sys.m, Fraction(hits, len(phi)), Fraction(len(Wu), len(base)), bound, counts)


def edge_uniformity_dev(sys, u, W) -> CheckReport:
    u = tuple(sorted(u))
    return _uniformity("uniformity", sys, u, W[u])


def etale_edge_uniformity_dev(sys_base, sys_ref, u, W) -> CheckReport:
    """Edge uniformity of the base against the image of a refinement chain."""
    u = tuple(sorted(u))
    base = sys_base.boundary(u)
    return _uniformity("etale-uniformity", sys_base, u, W[u].project(base.coords))


def vertex_multiplicity(sys, u) -> int:
    """Largest number of boundary points over one tuple of vertex coordinates."""
    base = sys.boundary(u)
    vx = [c for c in base.coords if c[0] == "x" and c[1:].isdigit()]
    if len(vx) == len(base.coords) or not len(base):
        return 1
    _, cnt = np.unique(base.columns(vx), axis=0, return_counts=True)
    return int(cnt.max())


def gowers_inequality_check(sys, u, W, oct_value=None) -> CheckReport:
    """Delta^(2^n) <= C |Omega(u)^-|^(2^n - 2) oct, exactly."""
    u = tuple(sorted(u))
    base = sys.boundary(u)
    phi = rho_image(sys, u)
    Wu = W[u]
    Wu = Wu.reorder(base.coords) if Wu.coords != base.coords else Wu
    dens = Fraction(len(phi), len(base) or 1)
    hits = int(member_mask(Wu, phi).sum())
    delta = abs(hits - dens * len(Wu))
    oct_ = octahedral_sum(sys, u, balanced_indicator(sys, u)) if oct_value is None else Fraction(oct_value)
    n = 2 ** len(u)
    C = vertex_multiplicity(sys, u) ** n
    lhs = delta**n
    rhs = C * Fraction(len(base)) ** (n - 2) * oct_
    return CheckReport("gowers", u, sys.q, sys.m, lhs, rhs, None,
                       {"|W(u)|": len(Wu), "|phi & W(u)|": hits, "|Omega(u)^-|": len(base), "C": C,
                        "oct": oct_, "Delta": delta},
                       passed=lhs <= rhs)


# -- regularity probe ---------------------------------------------------------

@dataclass
class ProbeResult:
    u: tuple
    qs: list
    base_counts: dict
    base_exponent: float
    candidates: list      # dicts: name, counts, exponent, drop, dominant, status
    verdict: str

    def reports(self, m: int, q: int | None = None) -> list:
        out = []
        q = max(self.qs) if q is None else q
        for c in self.candidates:
            if c["exponent"] is None:
                continue
            lhs = Fraction(c["exponent"]).limit_denominator(10**6)
            rhs = Fraction(self.base_exponent).limit_denominator(10**6)
            out.append(CheckReport("probe", self.u, q, m, lhs, rhs, None,
                                   {str(k): v for k, v in c["counts"].items()},
                                   extra={"candidate": c["name"], "status": c["status"], "verdict": self.verdict,
                                          "dominant": c["dominant"]},
                                   passed=c["status"] != "IRREGULAR"))
        return out


def regularity_probe(spec_base, candidates, u, q_list, m: int = 1, names=None) -> ProbeResult:
    """Compare the growth of Omega+(u) under each candidate refinement with |Omega(u)|."""
    u = tuple(sorted(u))
    qs = sorted(q_list)
    base_sys = {q: at_q(spec_base, q, m) for q in qs}
    base_counts = {q: len(base_sys[q].omega(u)) for q in qs}
    base_exp = loglog_slope(qs, [base_counts[q] for q in qs])
    results = []
    for k, ref in enumerate(candidates):
        name = names[k] if names else f"candidate{k}"
        cand_sys = {}
        for q in qs:
            bs = base_sys[q]
            r = rebind_refinement(ref, bs.spec.p) if bs.spec.p != spec_base.p else ref
            cand_sys[q] = SpecializedSystem(apply_refinement(bs.spec, r), q, m)
        dominant = True
        for v in proper_subsets(u):
            a = loglog_slope(qs, [len(base_sys[q].omega(v)) for q in qs]) or 0.0
            b = loglog_slope(qs, [len(cand_sys[q].omega(v)) for q in qs])
            if b is None or b < a - SLOPE_TOL:
                dominant = False
        if not dominant:
            results.append({"name": name, "counts": {}, "exponent": None, "drop": None,
                            "dominant": False, "status": "EXCLUDED"})
            continue
        counts = {q: fibre_product_plus_count(base_sys[q], cand_sys[q], u) for q in qs}
        exp = loglog_slope(qs, [counts[q] for q in qs])
        exp = float("-inf") if exp is None else exp
        drop = base_exp - exp
        status = "IRREGULAR" if drop >= 0.5 else ("CONSISTENT" if abs(drop) <= SLOPE_TOL else "INCONCLUSIVE")
        results.append({"name": name, "counts": counts, "exponent": exp, "drop": drop,
                        "dominant": True, "status": status})
    live = [r for r in results if r["dominant"]]
    if any(r["status"] == "IRREGULAR" for r in live):
        bad = [r["name"] for r in live if r["status"] == "IRREGULAR"]
        verdict = f"IRREGULAR({', '.join(bad)})"
    elif live and all(r["status"] == "CONSISTENT" for r in live):
        verdict = "REGULAR-CONSISTENT"
    else:
        verdict = "INCONCLUSIVE"
    return ProbeResult(u, qs, base_counts, base_exp, results, verdict)
