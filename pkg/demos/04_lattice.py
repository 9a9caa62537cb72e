"""Boundaries, fibres, refinements and doubling.

The boundary of u is the fibre product of the blocks strictly below it.  The
map from a block down to its boundary has fibres whose sizes tell how far the
block is from being uniformly spread; moving a variable into a lower block
(a refinement) can even those fibres out.
"""
from fractions import Fraction

import numpy as np

from _common import load, load_refinement

from drl import apply_refinement, at_q, print_system
from drl.lattice import Doubled, fibre_signature_classes, fibre_sizes, rho_image
from drl.stats import balanced_indicator, octahedral_sum

tower = load("tower")
s = at_q(tower, 7)
print("boundary of {0,1}:", len(s.boundary((0, 1))), "points, image of the cover:", len(rho_image(s, (0, 1))))

sizes, mult = np.unique(fibre_sizes(s, (0, 1)), return_counts=True)
print("fibre size histogram:", dict(zip(sizes.tolist(), mult.tolist())))
for c in fibre_signature_classes(s, (0, 1)):
    print("  signature", c.key, "->", len(c.points), "boundary points")

refined = apply_refinement(tower, load_refinement("tower", 7))
print()
print(print_system(refined))
r = at_q(refined, 7)
print("refined boundary:", len(r.boundary((0, 1))), "points")

# the octahedral (box) sum of the balanced cover indicator over the doubled boundary
for name, sys in (("unrefined", s), ("refined", r)):
    d = Doubled(sys, (0, 1))
    val = octahedral_sum(sys, (0, 1), balanced_indicator(sys, (0, 1)), "both")
    print(f"{name}: doubled boundary has {d.count()} points, octahedral sum {val} = {float(val):.3f}")

diag = at_q(load("diag3"), 3)
f = lambda row: (1 if row[0] == row[1] else 0) - Fraction(1, 3)
print("diagonal of F_3 x F_3, box sum:", octahedral_sum(diag, (0, 1), f, "naive"))
