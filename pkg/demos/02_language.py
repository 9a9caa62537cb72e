"""Writing, checking and printing difference-polynomial systems.

A ``.dvs`` file names a characteristic, a vertex set, one ``sort`` block per
vertex and ``cover`` blocks over larger subsets.  ``s(x)`` is the difference
operator, which becomes x -> x^q once a field size q is chosen.
"""
from drl import DvsError, parse_system, print_system
from drl.lang import parse_poly

text = """\
system demo
char 5
vertices 0 1
sort 0: eqs s(x0) - x0
sort 1: eqs s(x1) - x1
cover {0,1}: vars w; eqs w^2 - (x0 + x1), s(w) - w
"""
spec = parse_system(text)
print("parsed", spec.name, "over char", spec.p, "with blocks", [b.subset for b in spec.blocks])
print(print_system(spec))

# coefficients are reduced to symmetric residues mod p
print(parse_poly("(x0 + 3)^2 - 4*s^2(x0)", 5))

# mistakes come back as located diagnostics
try:
    parse_system(text.replace("x0 + x1", "x0 + x2"))
except DvsError as e:
    for d in e.diagnostics:
        print("diagnostic:", d)
