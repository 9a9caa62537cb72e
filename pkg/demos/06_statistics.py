"""Measures, quasirandomness checks and the regularity probe.

Point counts at several q are turned into a rational measure by fitting the
ratio N(q)/q^d as a line in 1/q.  The remaining checks compare two exact
rationals and test the difference against an explicit c*q^e bound.
"""
from fractions import Fraction

from _common import load, load_refinement

from drl import apply_refinement, at_q
from drl.chains import random_chain
from drl.lang import RefinementSpec
from drl.lattice import generate_radical_twists
from drl import stats

qs = (7, 11, 13)
sq = [at_q(load("sqrt_cover"), q) for q in qs]
est = stats.nu_estimate(sq, (1,))
print("square-root cover: ratios", [str(r) for r in est.ratios], "-> nu =", est.value)

tower = load("tower")
refined = apply_refinement(tower, load_refinement("tower", 7))

print(stats.independence_check(at_q(load("squares3"), 7), [(0, 1), (1, 2)]).summary())
for q in qs:
    r = at_q(refined, q)
    print(stats.independence_check(r, [(0, 1)]).summary())
    print(stats.quasirandom_report(r, (0, 1)).summary())

r7 = at_q(refined, 7)
for seed in range(3):
    W = random_chain(r7, (0, 1), Fraction(1, 2), seed)
    print(stats.edge_uniformity_dev(r7, (0, 1), W).summary())

# try every radical twist of the cover variables as a candidate refinement
cands = generate_radical_twists(tower, "z") + generate_radical_twists(tower, "t")
names = [c.targets[0].vars[0] for c in cands]
res = stats.regularity_probe(tower, cands, (0, 1), list(qs), m=2, names=names)
for c in res.candidates:
    print(f"  {c['name']:6s} counts {c['counts']} status {c['status']}")
print("verdict:", res.verdict)

ident = stats.regularity_probe(refined, [RefinementSpec()], (0, 1), list(qs))
print("refined example, identity candidate:", ident.verdict)
