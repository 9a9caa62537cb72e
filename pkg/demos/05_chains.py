"""Chains and decompositions.

A chain picks a subset W(v) of every block below u so that each W(v) lies
over the fibre product of the smaller W's.  Random chains are the test sets
for uniformity; decompositions cut a refined system into pieces that each
look like a section of the base system.
"""
from fractions import Fraction

import numpy as np

from _common import load, load_refinement

from drl import apply_refinement, at_q
from drl.chains import (all_chains, build_regular_decomposition, build_section_decomposition, random_chain,
                        validate_chain)

tower = load("tower")
refined = apply_refinement(tower, load_refinement("tower", 7))
base, ref = at_q(tower, 7), at_q(refined, 7)

W = random_chain(ref, (0, 1), Fraction(1, 2), seed=42)
print("chain sizes:", {v: len(ps) for v, ps in W.sets.items()})
print("violations:", validate_chain(ref, W))

# knock one point out of the top set and the fibre-product axiom breaks
W.sets[(0, 1)] = W[(0, 1)].select(np.arange(len(W[(0, 1)])) > 0)
print("after tampering:", [v.kind for v in validate_chain(ref, W, I=[(0,), (1,)])][:1])

print("chains on the F_3 diagonal:", sum(1 for _ in all_chains(at_q(load("diag3"), 3), (0, 1))))

sec = build_section_decomposition(ref, base)
print("section pieces:", sec.counts(), "pi injective:", sec.properties["pi_injective"])

dec = build_regular_decomposition(base, ref)
print("regular pieces:", dec.counts())
for key, val in dec.properties.items():
    if isinstance(val, dict):
        val = {k: f"min {v['min']}, generic {v['generic']}" for k, v in val.items()}
    print(f"  {key}: {val}")
