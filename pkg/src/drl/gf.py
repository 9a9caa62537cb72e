"""Finite fields F_{p^n} with table-driven vectorized arithmetic.

Elements are encoded as integers. The coefficient vector (c_0, ..., c_{n-1})
of an element, constant term first, is read as a base-p number with c_0 the
most significant digit. Integer order is then the lexicographic order on
coefficient vectors, which is the canonical element order used everywhere
downstream (sorting point sets, picking k-th sections).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

MAX_CHAR = 1 << 20
MAX_ORDER = 1 << 40
SCAN_GUARD = 1 << 22


class FieldError(ValueError):
    pass


class GuardError(RuntimeError):
    """A size guard was exceeded."""


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


def prime_power(q: int) -> tuple[int, int] | None:
    """Return (p, k) with q = p^k, or None."""
    if q < 2:
        return None
    p = 2
    while p * p <= q and q % p:
        p += 1
    if q % p:
        p = q
    k, r = 0, q
    while r % p == 0:
        r //= p
        k += 1
    return (p, k) if r == 1 else None


def _factor(n: int) -> list[int]:
    out, f = [], 2
    while f * f <= n:
        if n % f == 0:
            out.append(f)
            while n % f == 0:
                n //= f
        f += 1
    if n > 1:
        out.append(n)
    return out


# -- dense polynomials over F_p, coefficient lists low degree first --------

def _trim(a):
    while a and a[-1] == 0:
        a.pop()
    return a


def _pmod(a, m, p):
    a = list(a)
    dm = len(m) - 1
    inv = pow(m[-1], -1, p)
    for i in range(len(a) - 1, dm - 1, -1):
        c = a[i] * inv % p
        if c:
            for j in range(dm + 1):
                a[i - dm + j] = (a[i - dm + j] - c * m[j]) % p
    return _trim(a[:dm] if len(a) > dm else a)


def _pmulmod(a, b, m, p):
    if not a or not b:
        return []
    r = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                r[i + j] = (r[i + j] + x * y) % p
    return _pmod(r, m, p)


def _ppowmod(a, e, m, p):
    result, base = [1], _pmod(a, m, p)
    while e:
        if e & 1:
            result = _pmulmod(result, base, m, p)
        base = _pmulmod(base, base, m, p)
        e >>= 1
    return result


def _pgcd(a, b, p):
    a, b = _trim(list(a)), _trim(list(b))
    while b:
        a, b = b, _pmod(a, b, p)
    return a


def _irreducible(f, p) -> bool:
    n = len(f) - 1
    x = [0, 1]
    xp = x
    for _ in range(n // 2):
        xp = _ppowmod(xp, p, f, p)
        diff = list(xp) + [0] * (2 - len(xp))
        diff[1] = (diff[1] - 1) % p
        g = _pgcd(f, _trim(diff), p)
        if len(g) > 1:
            return False
    return True


@lru_cache(maxsize=None)
def canonical_modulus(p: int, n: int) -> tuple[int, ...]:
    """Smallest monic irreducible of degree n, comparing (c_0, ..., c_{n-1})."""
    for low in itertools.product(range(p), repeat=n):
        f = list(low) + [1]
        if n == 1 or (f[0] != 0 and _irreducible(f, p)):
            return tuple(f)
    raise FieldError(f"no irreducible of degree {n} over F_{p}")  # unreachable


@dataclass(frozen=True, eq=False)
class FieldCtx:
    p: int
    n: int
    modulus: tuple[int, ...]
    _tables: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def order(self) -> int:
        return self.p ** self.n

    @property
    def weights(self) -> np.ndarray:
        return np.array([self.p ** (self.n - 1 - j) for j in range(self.n)], dtype=np.int64)

    # -- encoding ---------------------------------------------------------
    def to_vec(self, code: int) -> tuple[int, ...]:
        out = []
        for j in range(self.n):
            out.append((code // self.p ** (self.n - 1 - j)) % self.p)
        return tuple(out)

    def from_vec(self, vec) -> int:
        vec = list(vec)
        vec = vec + [0] * (self.n - len(vec))
        return sum((c % self.p) * self.p ** (self.n - 1 - j) for j, c in enumerate(vec))

    def embed(self, c: int) -> int:
        """Code of the prime-field constant c."""
        return (c % self.p) * self.p ** (self.n - 1)

    def element(self, value) -> "FieldElement":
        if isinstance(value, FieldElement):
            return value
        return FieldElement(self, self.embed(int(value)))

    # -- scalar arithmetic on codes (no tables, any size) -----------------
    def add(self, a: int, b: int) -> int:
        return self.from_vec(x + y for x, y in zip(self.to_vec(a), self.to_vec(b)))

    def neg(self, a: int) -> int:
        return self.from_vec(-x for x in self.to_vec(a))

    def mul(self, a: int, b: int) -> int:
        r = _pmulmod(_trim(list(self.to_vec(a))), _trim(list(self.to_vec(b))), self.modulus, self.p)
        return self.from_vec(r)

    def pow(self, a: int, e: int) -> int:
        if e == 0:
            return self.embed(1)
        r = _ppowmod(_trim(list(self.to_vec(a))), e, self.modulus, self.p)
        return self.from_vec(r)

    # -- vectorized arithmetic on code arrays -----------------------------
    def _require_tables(self):
        if "exp" in self._tables:
            return self._tables
        q = self.order
        if q > SCAN_GUARD:
            raise GuardError(f"field of order {q} exceeds the table guard {SCAN_GUARD}")
        p, n = self.p, self.n
        g = self._primitive()
        w = self.weights
        if n == 1:
            exp = np.empty(q - 1, dtype=np.int64)
            acc = 1
            for i in range(q - 1):
                exp[i] = acc
                acc = acc * g % p
        else:
            # powers of g in chunks: multiply a block of powers by g^B via the
            # matrix of multiplication-by-constant on coefficient vectors
            block = min(q - 1, 1024)
            exp = np.empty(q - 1, dtype=np.int64)
            acc = self.embed(1)
            for i in range(block):
                exp[i] = acc
                acc = self.mul(acc, g)
            step = self._mul_matrix(acc)
            start = block
            while start < q - 1:
                src = exp[start - block:start]
                digits = (src[:, None] // w[None, :]) % p
                nxt = ((digits @ step) % p) @ w
                take = min(block, q - 1 - start)
                exp[start:start + take] = nxt[:take]
                start += take
        log = np.full(q, -1, dtype=np.int64)
        log[exp] = np.arange(q - 1, dtype=np.int64)
        self._tables["exp"] = exp
        self._tables["log"] = log
        return self._tables

    def _mul_matrix(self, h: int) -> np.ndarray:
        rows = []
        hv = _trim(list(self.to_vec(h)))
        for j in range(self.n):
            xj = [0] * j + [1]
            r = _pmulmod(_pmod(xj, self.modulus, self.p), hv, self.modulus, self.p)
            rows.append(list(r) + [0] * (self.n - len(r)))
        return np.array(rows, dtype=np.int64)

    def _primitive(self) -> int:
        q = self.order
        if q == 2:
            return self.embed(1)
        primes = _factor(q - 1)
        one = self.embed(1)
        for code in range(1, q):
            if all(self.pow(code, (q - 1) // r) != one for r in primes):
                return code
        raise FieldError("no primitive element")  # unreachable

    def all_elements(self) -> np.ndarray:
        if self.order > SCAN_GUARD:
            raise GuardError(f"scan of {self.order} elements exceeds guard {SCAN_GUARD}")
        return np.arange(self.order, dtype=np.int64)

    def vadd(self, a, b):
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        if self.n == 1:
            return (a + b) % self.p
        out = np.zeros(np.broadcast(a, b).shape, dtype=np.int64)
        for wj in self.weights:
            out += ((a // wj + b // wj) % self.p) * wj
        return out

    def vneg(self, a):
        a = np.asarray(a, dtype=np.int64)
        if self.n == 1:
            return (-a) % self.p
        out = np.zeros(a.shape, dtype=np.int64)
        for wj in self.weights:
            out += ((-(a // wj)) % self.p) * wj
        return out

    def vmul(self, a, b):
        t = self._require_tables()
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        la, lb = t["log"][a], t["log"][b]
        r = t["exp"][(la + lb) % (self.order - 1)]
        return np.where((a == 0) | (b == 0), 0, r)

    def vpow(self, a, e: int):
        a = np.asarray(a, dtype=np.int64)
        if e == 0:
            return np.full(a.shape, self.embed(1), dtype=np.int64)
        t = self._require_tables()
        er = e % (self.order - 1)
        r = t["exp"][(t["log"][a] * er) % (self.order - 1)]
        return np.where(a == 0, 0, r)

    def vlog(self, a):
        return self._require_tables()["log"][np.asarray(a, dtype=np.int64)]

    def vexp(self, k):
        return self._require_tables()["exp"][np.asarray(k, dtype=np.int64) % (self.order - 1)]


@lru_cache(maxsize=None)
def make_field(p: int, n: int) -> FieldCtx:
    """Return the context for F_{p^n} with its canonical modulus."""
    if not isinstance(p, int) or not is_prime(p):
        raise FieldError(f"characteristic {p!r} is not prime")
    if p > MAX_CHAR:
        raise GuardError(f"characteristic {p} exceeds guard {MAX_CHAR}")
    if n < 1:
        raise FieldError("extension degree must be positive")
    if p ** n > MAX_ORDER:
        raise GuardError(f"field order {p}^{n} exceeds guard 2^40")
    return FieldCtx(p, n, canonical_modulus(p, n))


@dataclass(frozen=True)
class FieldElement:
    ctx: FieldCtx
    code: int

    @property
    def coeffs(self) -> tuple[int, ...]:
        return self.ctx.to_vec(self.code)

    def _other(self, other) -> int:
        if isinstance(other, FieldElement):
            return other.code
        return self.ctx.embed(int(other))

    def __add__(self, other):
        return FieldElement(self.ctx, self.ctx.add(self.code, self._other(other)))

    __radd__ = __add__

    def __sub__(self, other):
        return FieldElement(self.ctx, self.ctx.add(self.code, self.ctx.neg(self._other(other))))

    def __mul__(self, other):
        return FieldElement(self.ctx, self.ctx.mul(self.code, self._other(other)))

    __rmul__ = __mul__

    def __pow__(self, e: int):
        if e < 0:
            if self.code == 0:
                raise ZeroDivisionError("zero has no inverse")
            e = e % (self.ctx.order - 1)
        return FieldElement(self.ctx, self.ctx.pow(self.code, e))

    def inverse(self) -> "FieldElement":
        return self ** -1

    def __eq__(self, other):
        if isinstance(other, FieldElement):
            return self.ctx is other.ctx and self.code == other.code
        if isinstance(other, int):
            return self.code == self.ctx.embed(other) and 0 <= other < self.ctx.p
        return NotImplemented

    def __hash__(self):
        return hash((self.ctx.p, self.ctx.n, self.code))

    def __lt__(self, other):
        return self.code < other.code

    def __int__(self):
        if self.ctx.n == 1:
            return self.code
        raise TypeError("only prime-field elements convert to int")

    def __repr__(self):
        if self.ctx.n == 1:
            return f"GF({self.ctx.p})({self.code})"
        return f"GF({self.ctx.p}^{self.ctx.n}){list(self.coeffs)}"


def frobenius(a, ctx: FieldCtx, q: int) -> FieldElement:
    """a -> a^q, where q must be a power of the characteristic."""
    pk = prime_power(q)
    if pk is None or pk[0] != ctx.p:
        raise FieldError(f"q={q} is not a power of the characteristic {ctx.p}")
    a = ctx.element(a)
    return FieldElement(ctx, ctx.pow(a.code, q))


def poly_roots(poly, ctx: FieldCtx) -> list[FieldElement]:
    """Roots in ctx of a univariate polynomial, ascending canonical order.

    ``poly`` lists coefficients from degree 0 upward; ints are prime-field
    constants, FieldElements are taken as is.
    """
    coeffs = [ctx.element(c).code for c in poly]
    while coeffs and coeffs[-1] == 0:
        coeffs.pop()
    if not coeffs:
        raise FieldError("zero polynomial has every element as a root")
    xs = ctx.all_elements()
    acc = np.zeros(xs.shape, dtype=np.int64)
    for c in reversed(coeffs):
        acc = ctx.vadd(ctx.vmul(acc, xs), np.int64(c))
    return [FieldElement(ctx, int(x)) for x in xs[acc == 0]]
