"""Counting points of a system over F_q and its extensions.

``at_q`` specializes the symbolic system at a prime power q and enumerates
each block lazily, sort by sort and then along the subset lattice.
"""
from _common import load

from drl import at_q

tower = load("tower")
for q in (5, 7, 11, 13):
    sys = at_q(tower, q)
    print(f"q={q:3d}", sys.counts())

top = at_q(tower, 7).omega((0, 1))
print("coordinates:", top.coords)
print("first rows:", top.tuples()[:5])

# a sort defined by s(x) = x^2 only has points in the right extensions
dyn = load("dynamics")
for m in (1, 2, 3, 4):
    print(f"dynamics sort over F_(7^{m}):", len(at_q(dyn, 7, m).omega((0,))), "points")
