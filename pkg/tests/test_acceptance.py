"""Acceptance suite: one PASS/FAIL line per criterion, at the stated tolerances.

Run with ``pytest tests/test_acceptance.py -v`` (lines appear in the
terminal summary) or ``python tests/test_acceptance.py``.
"""

import json
import time
from fractions import Fraction

import pytest

from conftest import ACCEPTANCE_LINES, CORPUS, load, load_refined
from oracle import brute_omega, random_bipartite, search_space
from drl import cli
from drl.chains import all_chains, build_regular_decomposition, decomposition_chains_valid, random_chain
from drl.gf import is_prime
from drl.lattice import Doubled, generate_radical_twists, twist_constant
from drl.specializer import at_q
from drl import stats
from drl.stats import Bound

PRIMES = [p for p in range(3, 200) if is_prime(p)]
CORPUS_SPECS = ["cartesian2", "cubic_cover", "cubic_example", "diag3", "dynamics", "fixed_cube1", "fixed_cube2",
                "fixed_cube3", "fixed_cube4", "tower", "sqrt_cover", "squares3", "twisted_sort"]
REFINED_SPECS = ["tower", "cubic_example"]


def report(n, title, ok, detail, elapsed, limit=None):
    timing = f"{elapsed:.1f}s" + (f" < {limit}s" if limit else "")
    if limit is not None and elapsed >= limit:
        ok = False
        timing = f"{elapsed:.1f}s exceeds {limit}s"
    line = f"[{'PASS' if ok else 'FAIL'}] {n:>2}. {title}: {detail} ({timing})"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def _corpus_instances():
    out = [(name, load(name), None, 1) for name in CORPUS_SPECS]
    out += [(name + "+refine", load_refined(name), None, 1) for name in REFINED_SPECS]
    out.append(("dynamics@m4", load("dynamics"), None, 4))
    return out


def test_c01_enumeration_matches_oracle():
    t = time.time()
    checked, bad = 0, []
    for name, spec, _, m in _corpus_instances():
        q = spec.p
        if search_space(spec, q, m) > 10**6:
            continue
        sysq = at_q(spec, q, m)
        for u in spec.closure():
            if not u:
                continue
            coords, pts = brute_omega(spec, u, q, m)
            got = sysq.omega(u)
            checked += 1
            if got.coords != coords or set(got.tuples()) != pts:
                bad.append(f"{name}{u}")
    ok = report(1, "triangular enumerator equals brute-force filter", not bad,
                f"{checked} sets over {len(_corpus_instances())} instances, mismatches {bad or 'none'}",
                time.time() - t, 30)
    assert ok


def test_c02_tower_count(tower):
    t = time.time()
    qs = [5] + [p for p in PRIMES if p >= 7]
    bad = [q for q in qs if len(at_q(tower, q).omega((0, 1))) != q * q]
    ok = report(2, "|Omega(V)| = q^2 on the two-cover example", not bad,
                f"q in {{5,...,199}} ({len(qs)} primes), failures {bad or 'none'}", time.time() - t, 10)
    assert ok


def test_c03_exact_independence_overlapping_squares():
    t = time.time()
    spec = load("squares3")
    qs = [p for p in PRIMES if p <= 101]
    devs = {q: stats.independence_check(at_q(spec, q), [(0, 1), (1, 2)]).deviation for q in qs}
    bad = [q for q, d in devs.items() if d != 0]
    ok = report(3, "independence deviation exactly 0 on overlapping squares", not bad,
                f"{len(qs)} odd primes up to 101, nonzero at {bad or 'none'}", time.time() - t, 20)
    assert ok


def test_c04_independence_and_stationarity_decay(tower_refined):
    t = time.time()
    qs = [p for p in PRIMES if p >= 7]
    ind, sta, bad = [], [], []
    for q in qs:
        s = at_q(tower_refined, q)
        r = stats.independence_check(s, [(0, 1)])
        rs = stats.stationarity_check(s, [(0, 1)], (0,), samples=5, seed=0)
        ind.append(r.deviation)
        sta.append(max(x.deviation for x in rs))
        if not r.passed or not all(x.passed for x in rs):
            bad.append(q)
    e_ind = stats.decay_exponent(qs, ind)
    e_sta = stats.decay_exponent(qs, sta)
    ok = not bad and e_ind <= -0.4 and e_sta <= -0.4
    ok = report(4, "refined example: independence <= 2q^-1/2, stationarity <= 4q^-1/2, decay <= -0.4", ok,
                f"max dev {float(max(ind)):.3g}/{float(max(sta)):.3g}, exponents {e_ind}/{e_sta} "
                f"(-inf: identically 0), bound failures {bad or 'none'}", time.time() - t, 60)
    assert ok


def test_c05_quasirandomness_dichotomy(tower, tower_refined):
    t = time.time()
    rows, ok = [], True
    for q in (7, 11, 13):
        un = stats.quasirandom_report(at_q(tower, q), (0, 1)).lhs
        re = stats.quasirandom_report(at_q(tower_refined, q), (0, 1)).lhs
        ok &= un >= Fraction(1, 100) and Bound(Fraction(1), Fraction(-1, 2)).holds(re, q)
        rows.append(f"q={q}: {float(un):.4f} vs {float(re):.4f}")
    ok = report(5, "normalized oct: unrefined >= 0.01, refined <= q^-1/2", ok, "; ".join(rows),
                time.time() - t, 60)
    assert ok


def test_c06_gowers_inequality():
    t = time.time()
    qs = [3, 5, 7, 11, 13]
    systems, octs = {}, {}
    fails = 0
    for k in range(1000):
        q = qs[k % len(qs)]
        key = (k // len(qs) % 40, q)
        if key not in systems:
            s = at_q(random_bipartite(key[0], q), q)
            systems[key] = s
            octs[key] = stats.octahedral_sum(s, (0, 1), stats.balanced_indicator(s, (0, 1)))
        s = systems[key]
        dens = Fraction((k % 3) + 1, 4)
        r = stats.gowers_inequality_check(s, (0, 1), random_chain(s, (0, 1), dens, seed=k), octs[key])
        fails += not r.passed or r.counts["C"] != 1
    exhaustive = 0
    for seed in range(12):
        s = at_q(random_bipartite(seed, 3), 3)
        o = stats.octahedral_sum(s, (0, 1), stats.balanced_indicator(s, (0, 1)))
        for W in all_chains(s, (0, 1)):
            exhaustive += 1
            fails += not stats.gowers_inequality_check(s, (0, 1), W, o).passed
    ok = report(6, "Delta^4 <= oct |Omega(V)^-|^2", fails == 0,
                f"1000 random chains on {len(systems)} systems q<=13, {exhaustive} exhaustive chains at q=3, "
                f"failures {fails}", time.time() - t, 120)
    assert ok


def test_c07_edge_uniformity(tower_refined):
    t = time.time()
    rows, ok = [], True
    for q in (49, 121, 169):
        s = at_q(tower_refined, q)
        devs = [stats.edge_uniformity_dev(s, (0, 1), random_chain(s, (0, 1), Fraction(1, 2), seed=k))
                for k in range(100)]
        worst = max(devs, key=lambda r: r.deviation)
        ok &= all(r.passed for r in devs)
        rows.append(f"q={q}: max {float(worst.deviation):.4f} <= {worst.bound.value(q):.4f}")
    ok = report(7, "edge uniformity within q^-1/8 over 100 chains", ok, "; ".join(rows), time.time() - t, 60)
    assert ok


def test_c08_regularity_probe(tower, tower_refined):
    t = time.time()
    qs = [7, 11, 13]
    sign = [r for r in generate_radical_twists(tower, "z") if twist_constant(r) == tower.p - 1]
    res = stats.regularity_probe(tower, sign, (0, 1), qs, m=2, names=["z sign twist"])
    drop = res.candidates[0]["drop"]
    twists = [r for b in tower_refined.blocks if len(b.subset) >= 2
              for w in b.vars for r in generate_radical_twists(tower_refined, w)]
    res2 = stats.regularity_probe(tower_refined, twists, (0, 1), qs, m=2)
    ok = drop >= 0.8 and res.verdict.startswith("IRREGULAR") and res2.verdict == "REGULAR-CONSISTENT"
    ok = report(8, "sign twist drops the exponent; refined twists consistent", ok,
                f"drop {drop:.3f} -> {res.verdict}; refined: {len(twists)} twists -> {res2.verdict}",
                time.time() - t, 60)
    assert ok


def test_c09_regular_decomposition(tower, tower_refined):
    t = time.time()
    counts, ok = [], True
    for q in (7, 11, 13):
        b, r = at_q(tower, q), at_q(tower_refined, q)
        d = build_regular_decomposition(b, r)
        pr = d.properties
        ok &= bool(pr["(2) sections bijective"] and pr["(5) images equal or disjoint"] and pr["partition"]
                   and decomposition_chains_valid(b, d))
        counts.append(d.counts())
    ok &= all(c == counts[0] for c in counts)
    ok = report(9, "regular decomposition: q-stable, bijective sections, equal-or-disjoint images", ok,
                f"piece counts {counts[0]} at q=7,11,13", time.time() - t, 30)
    assert ok


def test_c10_measure_fits():
    t = time.time()
    mus = []
    for n in range(1, 5):
        spec = load(f"fixed_cube{n}")
        V = tuple(range(n))
        est = stats.count_fit([(q, len(at_q(spec, q).omega(V))) for q in (7, 11, 13)], n, max_den=64)
        mus.append((est.value, max(est.residuals)))
    nu2 = stats.nu_estimate([at_q(load("sqrt_cover"), q) for q in (7, 11, 13)], (1,), max_den=64).value
    nu3 = stats.nu_estimate([at_q(load("cubic_cover"), q) for q in (7, 13, 19)], (1,), max_den=64).value
    ok = all(mu == 1 and r == 0 for mu, r in mus) and nu2 == Fraction(1, 2) and nu3 == Fraction(1, 3)
    ok = report(10, "mu = 1 on fixed cubes, nu = 1/2 and 1/3 on radical covers", ok,
                f"mu {[str(m) for m, _ in mus]}, nu {nu2}, {nu3}", time.time() - t, 20)
    assert ok


DETERMINISM_RUNS = [
    ["enumerate", "tower.dvs", "--q-list", "7,11,13"],
    ["independence", "squares3.dvs", "--q-list", "7,11,13"],
    ["stationarity", "tower.dvs", "--refine", "tower_refine.dvs", "--J", "0,1", "--u", "0",
     "--q-list", "7,11"],
    ["quasirandom", "tower.dvs", "--q-list", "7,11"],
    ["uniformity", "tower.dvs", "--refine", "tower_refine.dvs", "--q-list", "7,11", "--chains", "5"],
    ["gowers", "diag3.dvs", "--q-list", "3,5,7", "--chains", "5"],
    ["decompose", "tower.dvs", "--refine", "tower_refine.dvs", "--q-list", "7,11"],
    ["probe", "tower.dvs", "--q-list", "7,11,13", "--m", "2"],
    ["measure", "fixed_cube2.dvs", "--q-list", "7,11,13"],
    ["nu", "sqrt_cover.dvs", "--u", "1", "--q-list", "7,11,13", "--merge"],
]


def test_c11_determinism(tmp_path, capsys):
    t = time.time()
    differ = []
    for k, argv in enumerate(DETERMINISM_RUNS):
        argv = [argv[0]] + [str(CORPUS / a) if a.endswith(".dvs") else a for a in argv[1:]]
        outs = []
        for tag, workers in (("a", 1), ("b", 1), ("c", 8)):
            path = tmp_path / f"{k}{tag}.json"
            code = cli.main(argv + ["--workers", str(workers), "-o", str(path)])
            assert code == 0
            outs.append(path.read_bytes())
            json.loads(outs[-1].splitlines()[0])
        if len(set(outs)) != 1:
            differ.append(argv[0])
    capsys.readouterr()
    ok = report(11, "JSON byte-identical across runs and workers 1 vs 8", not differ,
                f"{len(DETERMINISM_RUNS)} commands, differing {differ or 'none'}", time.time() - t)
    assert ok


def test_c12_octahedral_exactness():
    t = time.time()
    checked, bad = 0, []
    for name, spec, _, m in _corpus_instances():
        s = at_q(spec, spec.p, m)
        for u in spec.closure():
            if not u:
                continue
            d = Doubled(s, u)
            if d.count() > 10**6:
                continue
            f = stats.balanced_indicator(s, u)
            g = [Fraction((7 * k) % 5 - 2, 3) for k in range(len(f))]
            for w in (f, g):
                checked += 1
                try:
                    stats.octahedral_sum(s, u, w, mode="both")
                except AssertionError:
                    bad.append(f"{name}{u}")
    diag = at_q(load("diag3"), 3)
    val = stats.octahedral_sum(diag, (0, 1), lambda r: (1 if r[0] == r[1] else 0) - Fraction(1, 3), "both")
    ok = not bad and val == 2
    ok = report(12, "naive and contracted octahedral sums agree; F_3 diagonal = 2", ok,
                f"{checked} sums, disagreements {bad or 'none'}, diagonal {val}", time.time() - t)
    assert ok


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
