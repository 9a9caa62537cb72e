"""Finite fields F_{p^n}.

Elements are stored as integers whose base-p digits are the polynomial
coefficients, constant term first in significance.  Scalar arithmetic goes
through FieldElement; whole arrays use the log/antilog tables on FieldCtx.
"""
import numpy as np

from drl import FieldElement, make_field
from drl.gf import frobenius, poly_roots

F49 = make_field(7, 2)
print("F_49 modulus coefficients:", F49.modulus)

a = FieldElement(F49, F49.from_vec([3, 1]))
b = FieldElement(F49, F49.from_vec([0, 5]))
print("a =", a, " b =", b)
print("a*b =", a * b, " a/b =", a * b.inverse(), " a^48 =", a ** 48)

# Frobenius x -> x^7 fixes exactly the prime subfield
elems = [FieldElement(F49, int(c)) for c in F49.all_elements()]
fixed = [x for x in elems if frobenius(x, F49, 7) == x]
print("elements fixed by Frobenius:", len(fixed))

# vectorised: every element squared at once, then the count of squares
sq = np.unique(F49.vpow(F49.all_elements(), 2))
print("distinct squares in F_49:", len(sq))

# roots of x^2 - 3, coefficients listed from degree 0 up
print("roots of x^2 - 3 in F_49:", poly_roots([-3, 0, 1], F49))
print("roots of x^2 - 3 in F_7: ", poly_roots([-3, 0, 1], make_field(7, 1)))
