"""The `.dvs` language: difference polynomials, cover blocks, systems.

A system file looks like::

    system tower
    char 7
    vertices 0 1
    sort 0: eqs s(x0) - x0
    sort 1: eqs s(x1) - x1
    cover {0,1}: vars z t; eqs z^2 - x1, s(z) - z, t^2 - (x0 + z), s(t) - t

Refinement files hold `refine {...}: vars ...; eqs ...` lines instead of
sort/cover lines. Coefficients are kept as symmetric residues mod p, so a
system can be rebound to another characteristic without changing small
coefficients such as -1.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace

from .gf import is_prime

VERTEX_VAR = re.compile(r"x(\d+)$")
RESERVED = {"s", "system", "char", "vertices", "sort", "cover", "refine", "vars", "eqs"}
MAX_EXPAND = 64

Subset = tuple  # sorted tuple of vertex ids


def subset_key(u):
    return (len(u), tuple(u))


def fmt_subset(u) -> str:
    return "{" + ",".join(str(i) for i in u) + "}"


def vertex_var(i: int) -> str:
    return f"x{i}"


# -- diagnostics ------------------------------------------------------------

@dataclass(frozen=True)
class Diagnostic:
    code: str
    message: str
    line: int = 0
    col: int = 0

    def __str__(self):
        where = f"{self.line}:{self.col}: " if self.line else ""
        return f"{where}{self.code}: {self.message}"


class DvsError(ValueError):
    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("\n".join(str(d) for d in self.diagnostics))


# -- polynomials ------------------------------------------------------------

def _sym(c: int, p: int) -> int:
    c %= p
    return c - p if c > p // 2 else c


def _mono_mul(a, b):
    acc = {}
    for v, k, e in a + b:
        acc[(v, k)] = acc.get((v, k), 0) + e
    return tuple(sorted((v, k, e) for (v, k), e in acc.items()))


def _term_key(mono):
    deg = sum(e for _, _, e in mono)
    top = max((k for _, k, _ in mono), default=0)
    return (-deg, -top, mono)


@dataclass(frozen=True)
class DiffPolynomial:
    """Sparse polynomial in variables and their sigma-shifts.

    ``terms`` is a tuple of (monomial, coefficient); a monomial is a sorted
    tuple of (variable, shift, exponent).
    """

    p: int
    terms: tuple

    @classmethod
    def from_dict(cls, p: int, d: dict) -> "DiffPolynomial":
        items = []
        for mono, c in d.items():
            c = _sym(c, p)
            if c:
                items.append((mono, c))
        items.sort(key=lambda t: _term_key(t[0]))
        return cls(p, tuple(items))

    @classmethod
    def const(cls, p: int, c: int) -> "DiffPolynomial":
        return cls.from_dict(p, {(): c})

    @classmethod
    def var(cls, p: int, name: str, shift: int = 0) -> "DiffPolynomial":
        return cls.from_dict(p, {((name, shift, 1),): 1})

    def as_dict(self) -> dict:
        return dict(self.terms)

    def __add__(self, other):
        d = self.as_dict()
        for m, c in other.terms:
            d[m] = d.get(m, 0) + c
        return DiffPolynomial.from_dict(self.p, d)

    def __neg__(self):
        return DiffPolynomial.from_dict(self.p, {m: -c for m, c in self.terms})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        d = {}
        for m1, c1 in self.terms:
            for m2, c2 in other.terms:
                m = _mono_mul(m1, m2)
                d[m] = d.get(m, 0) + c1 * c2
        return DiffPolynomial.from_dict(self.p, d)

    def power(self, e: int):
        if len(self.terms) == 1:
            (mono, c), = self.terms
            return DiffPolynomial.from_dict(
                self.p, {tuple((v, k, x * e) for v, k, x in mono): pow(c, e, self.p)})
        if e > MAX_EXPAND:
            raise ValueError(f"refusing to expand a compound power of degree {e}")
        out = DiffPolynomial.const(self.p, 1)
        for _ in range(e):
            out = out * self
        return out

    def variables(self) -> set:
        return {v for m, _ in self.terms for v, _, _ in m}

    def rename(self, old: str, new: str) -> "DiffPolynomial":
        d = {}
        for m, c in self.terms:
            m2 = tuple(sorted((new if v == old else v, k, e) for v, k, e in m))
            d[m2] = d.get(m2, 0) + c
        return DiffPolynomial.from_dict(self.p, d)

    def rebind(self, p: int) -> "DiffPolynomial":
        return DiffPolynomial.from_dict(p, dict(self.terms))

    def is_zero(self) -> bool:
        return not self.terms

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for i, (mono, c) in enumerate(self.terms):
            mag = abs(c)
            factors = []
            for v, k, e in mono:
                f = v if k == 0 else (f"s({v})" if k == 1 else f"s^{k}({v})")
                factors.append(f if e == 1 else f"{f}^{e}")
            if not factors:
                body = str(mag)
            elif mag == 1:
                body = "*".join(factors)
            else:
                body = "*".join([str(mag)] + factors)
            if i == 0:
                parts.append(("-" if c < 0 else "") + body)
            else:
                parts.append(("- " if c < 0 else "+ ") + body)
        return " ".join(parts)


# -- system data ------------------------------------------------------------

@dataclass(frozen=True)
class CoverBlock:
    subset: tuple
    vars: tuple = ()
    eqs: tuple = ()

    @property
    def is_sort(self) -> bool:
        return len(self.subset) == 1


@dataclass(frozen=True)
class SystemSpec:
    name: str
    p: int
    vertices: tuple
    blocks: tuple  # CoverBlocks in canonical subset order

    def block(self, u) -> CoverBlock | None:
        u = tuple(sorted(u))
        for b in self.blocks:
            if b.subset == u:
                return b
        return None

    @property
    def support(self) -> list:
        return [b.subset for b in self.blocks]

    def closure(self) -> list:
        """Downward closure of the support, canonical order, including the empty set."""
        from itertools import combinations
        seen = {()}
        for u in self.support:
            for r in range(1, len(u) + 1):
                seen.update(combinations(u, r))
        return sorted(seen, key=subset_key)

    def owner(self) -> dict:
        """Map from variable name to the subset that introduces it."""
        own = {vertex_var(i): (i,) for i in self.vertices}
        for b in self.blocks:
            for v in b.vars:
                own[v] = b.subset
        return own

    def cover_vars(self, u) -> tuple:
        b = self.block(u)
        return b.vars if b else ()


@dataclass(frozen=True)
class RefinementSpec:
    """Extra variables and equations per target subset."""

    targets: tuple = ()  # tuple of CoverBlock


# -- lexer ------------------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(?P<int>\d+)|(?P<id>[A-Za-z_][A-Za-z0-9_']*)|(?P<op>[-+*^(),;:{}]))")


@dataclass
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _lex(line: str, lineno: int) -> list:
    out, pos = [], 0
    n = len(line)
    while pos < n:
        if line[pos].isspace():
            pos += 1
            continue
        m = _TOKEN.match(line, pos)
        if not m or m.end() == pos:
            raise DvsError([Diagnostic("LEX_ERROR", f"unexpected character {line[pos]!r}", lineno, pos + 1)])
        kind = m.lastgroup
        start = m.start(kind)
        out.append(_Tok(kind, m.group(kind), lineno, start + 1))
        pos = m.end()
    out.append(_Tok("eol", "", lineno, n + 1))
    return out


class _Parser:
    def __init__(self, toks, p):
        self.toks = toks
        self.i = 0
        self.p = p
        self.refs = []  # (name, tok) for scope checks

    @property
    def tok(self):
        return self.toks[self.i]

    def err(self, msg, tok=None):
        tok = tok or self.tok
        return DvsError([Diagnostic("SYNTAX_ERROR", msg, tok.line, tok.col)])

    def take(self, kind=None, text=None):
        t = self.tok
        if (kind and t.kind != kind) or (text is not None and t.text != text):
            want = text or kind
            raise self.err(f"expected {want!r}, found {t.text or 'end of line'!r}")
        self.i += 1
        return t

    def at(self, text):
        return self.tok.text == text and self.tok.kind in ("op", "id")

    def integer(self):
        return int(self.take("int").text)

    # POLY grammar
    def expr(self):
        neg = False
        if self.at("-"):
            self.take()
            neg = True
        acc = self.term()
        if neg:
            acc = -acc
        while self.at("+") or self.at("-"):
            op = self.take().text
            t = self.term()
            acc = acc + t if op == "+" else acc - t
        return acc

    def term(self):
        acc = self.unary()
        while self.at("*"):
            self.take()
            acc = acc * self.unary()
        return acc

    def unary(self):
        if self.at("-"):
            self.take()
            return -self.unary()
        base = self.atom()
        if self.at("^"):
            self.take()
            base = base.power(self.integer())
        return base

    def atom(self):
        t = self.tok
        if t.kind == "int":
            return DiffPolynomial.const(self.p, self.integer())
        if t.kind == "op" and t.text == "(":
            self.take()
            e = self.expr()
            self.take("op", ")")
            return e
        if t.kind == "id" and t.text == "s":
            self.take()
            shift = 1
            if self.at("^"):
                self.take()
                shift = self.integer()
            self.take("op", "(")
            v = self.take("id")
            if v.text in RESERVED:
                raise self.err(f"sigma applies to variables only, found {v.text!r}", v)
            self.take("op", ")")
            self.refs.append((v.text, v))
            return DiffPolynomial.var(self.p, v.text, shift)
        if t.kind == "id" and t.text not in RESERVED:
            self.take()
            self.refs.append((t.text, t))
            return DiffPolynomial.var(self.p, t.text)
        raise self.err(f"unexpected {t.text or 'end of line'!r} in polynomial")

    def subset(self):
        self.take("op", "{")
        items = []
        if not self.at("}"):
            items.append(self.integer())
            while self.at(","):
                self.take()
                items.append(self.integer())
        self.take("op", "}")
        return items

    def clause(self):
        """`[vars a b;] [eqs P, P]` after the colon."""
        names, eqs, eq_refs = [], [], []
        seen_vars = seen_eqs = False
        while self.tok.kind != "eol":
            kw = self.take("id")
            if kw.text == "vars" and not seen_vars and not seen_eqs:
                seen_vars = True
                while self.tok.kind == "id":
                    names.append(self.take("id"))
            elif kw.text == "eqs" and not seen_eqs:
                seen_eqs = True
                if self.tok.kind != "eol" and not self.at(";"):
                    while True:
                        start = len(self.refs)
                        eqs.append(self.expr())
                        eq_refs.append(self.refs[start:])
                        if not self.at(","):
                            break
                        self.take()
            else:
                raise self.err(f"unexpected keyword {kw.text!r}", kw)
            if self.at(";"):
                self.take()
            elif self.tok.kind != "eol":
                raise self.err(f"expected ';' or end of line, found {self.tok.text!r}")
        return names, eqs, eq_refs


@dataclass
class _Raw:
    subset: tuple
    names: list
    eqs: list
    eq_refs: list
    tok: _Tok


def _strip(line):
    return line.split("#", 1)[0].rstrip()


def _parse_lines(text: str, refinement: bool, p_hint: int | None = None):
    name, p, vertices, raws = None, p_hint, None, []
    header_tok = {}
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = _strip(raw_line)
        if not line.strip():
            continue
        head = line.split(None, 1)
        kw = head[0]
        col = line.index(kw) + 1
        if kw == "system":
            if len(head) < 2:
                raise DvsError([Diagnostic("SYNTAX_ERROR", "system needs a name", lineno, col)])
            name = head[1].strip()
            continue
        toks = _lex(line, lineno)
        ps = _Parser(toks, p or 2)
        ps.take("id")
        if kw == "char":
            tok = ps.tok
            val = ps.integer()
            ps.take("eol")
            if not is_prime(val):
                raise DvsError([Diagnostic("BAD_CHAR", f"characteristic {val} is not prime", tok.line, tok.col)])
            if p_hint is not None and refinement and val != p_hint:
                raise DvsError([Diagnostic("BAD_CHAR", f"refinement characteristic {val} differs from {p_hint}", tok.line, tok.col)])
            p = val
            header_tok["char"] = tok
        elif kw == "vertices" and not refinement:
            vs = []
            while ps.tok.kind == "int":
                vs.append(ps.integer())
            ps.take("eol")
            if len(set(vs)) != len(vs):
                raise DvsError([Diagnostic("SYNTAX_ERROR", "repeated vertex", lineno, col)])
            vertices = tuple(sorted(vs))
        elif kw in ("sort", "cover") and not refinement or kw == "refine" and refinement:
            if p is None:
                raise DvsError([Diagnostic("MISSING_HEADER", "char must precede blocks", lineno, col)])
            ps.p = p
            start_tok = ps.tok
            if kw == "sort":
                u = [ps.integer()]
            else:
                u = ps.subset()
            ps.take("op", ":")
            names, eqs, eq_refs = ps.clause()
            if len(set(u)) != len(u):
                raise DvsError([Diagnostic("SYNTAX_ERROR", "repeated vertex in subset", start_tok.line, start_tok.col)])
            if kw == "cover" and len(u) < 2:
                raise DvsError([Diagnostic("SYNTAX_ERROR", "cover blocks need at least two vertices; use sort", start_tok.line, start_tok.col)])
            raws.append(_Raw(tuple(sorted(u)), names, eqs, eq_refs, start_tok))
        else:
            raise DvsError([Diagnostic("SYNTAX_ERROR", f"unknown directive {kw!r}", lineno, col)])
    return name, p, vertices, raws


def _check_blocks(p, vertices, raws, owner_extra=None, allow_missing_singletons=False):
    """Semantic checks shared by system and refinement parsing."""
    diags = []
    owner = {vertex_var(i): (i,) for i in vertices}
    if owner_extra:
        owner.update(owner_extra)
    seen = {}
    for r in raws:
        for i in r.subset:
            if i not in vertices:
                diags.append(Diagnostic("UNKNOWN_VERTEX", f"vertex {i} is not declared", r.tok.line, r.tok.col))
        if r.subset in seen:
            diags.append(Diagnostic("DUPLICATE_BLOCK", f"second block for {fmt_subset(r.subset)}", r.tok.line, r.tok.col))
        seen[r.subset] = r
        for t in r.names:
            if t.text in RESERVED or VERTEX_VAR.match(t.text):
                diags.append(Diagnostic("BAD_NAME", f"{t.text!r} cannot name a cover variable", t.line, t.col))
            elif t.text in owner:
                diags.append(Diagnostic("DUPLICATE_VARIABLE", f"variable {t.text} declared twice", t.line, t.col))
            else:
                owner[t.text] = r.subset
    if diags:
        return diags, owner
    for r in raws:
        uset = set(r.subset)
        for refs in r.eq_refs:
            for name, tok in refs:
                m = VERTEX_VAR.match(name)
                if m:
                    if int(m.group(1)) not in uset:
                        diags.append(Diagnostic(
                            "SCOPE_VIOLATION",
                            f"variable {name} is outside block {fmt_subset(r.subset)}", tok.line, tok.col))
                elif name not in owner:
                    diags.append(Diagnostic("UNKNOWN_VARIABLE", f"unknown variable {name}", tok.line, tok.col))
                elif not set(owner[name]) <= uset:
                    diags.append(Diagnostic(
                        "SCOPE_VIOLATION",
                        f"variable {name} belongs to {fmt_subset(owner[name])}, outside block {fmt_subset(r.subset)}",
                        tok.line, tok.col))
    if not allow_missing_singletons:
        have = {r.subset for r in raws}
        needed = set(vertices) | {i for r in raws for i in r.subset}
        for i in sorted(needed):
            if (i,) not in have:
                diags.append(Diagnostic("MISSING_SINGLETON", f"vertex {i} has no sort block"))
    return diags, owner


def resolution_plan(block: CoverBlock, known: set) -> tuple[list, str | None]:
    """Pick, for each cover variable in declared order, the first equation
    that is univariate in it given ``known`` and the earlier variables.

    Returns (plan, failed_var); plan is a list of (var, equation index).
    """
    known = set(known)
    plan = []
    for v in block.vars:
        for j, eq in enumerate(block.eqs):
            vs = eq.variables()
            if v in vs and vs <= known | {v}:
                plan.append((v, j))
                break
        else:
            return plan, v
        known.add(v)
    return plan, None


def block_known_vars(spec: SystemSpec, block: CoverBlock, owner=None) -> set:
    owner = owner or spec.owner()
    uset = set(block.subset)
    return {v for v, w in owner.items() if set(w) <= uset and v not in block.vars}


def _triangular_diags(spec: SystemSpec, pos=None) -> list:
    diags = []
    owner = spec.owner()
    for b in spec.blocks:
        _, bad = resolution_plan(b, block_known_vars(spec, b, owner))
        if bad is not None:
            line, col = (pos or {}).get(b.subset, (0, 0))
            diags.append(Diagnostic(
                "NON_TRIANGULAR",
                f"cover variable {bad} at {fmt_subset(b.subset)} has no equation univariate in it", line, col))
    return diags


def _build(name, p, vertices, raws) -> SystemSpec:
    blocks = [CoverBlock(r.subset, tuple(t.text for t in r.names), tuple(r.eqs)) for r in raws]
    blocks.sort(key=lambda b: subset_key(b.subset))
    return SystemSpec(name, p, vertices, tuple(blocks))


def parse_poly(text: str, p: int) -> DiffPolynomial:
    """A single polynomial expression in characteristic p."""
    parser = _Parser(_lex(text, 1), p)
    poly = parser.expr()
    if parser.tok.kind != "eol":
        raise parser.err(f"unexpected {parser.tok.text!r}")
    return poly


def parse_system(text: str) -> SystemSpec:
    """Parse and validate a system; raises DvsError with diagnostics."""
    name, p, vertices, raws = _parse_lines(text, refinement=False)
    missing = [k for k, v in (("system", name), ("char", p), ("vertices", vertices)) if v is None]
    if missing:
        raise DvsError([Diagnostic("MISSING_HEADER", f"missing {', '.join(missing)} line")])
    diags, _ = _check_blocks(p, vertices, raws)
    if diags:
        raise DvsError(diags)
    spec = _build(name, p, vertices, raws)
    diags = _triangular_diags(spec, {r.subset: (r.tok.line, r.tok.col) for r in raws})
    if diags:
        raise DvsError(diags)
    return spec


def parse_refinement(text: str, p: int | None = None) -> RefinementSpec:
    """Parse a refinement file. Scoping is checked when it is applied."""
    _, p2, _, raws = _parse_lines(text, refinement=True, p_hint=p)
    if p2 is None and raws:
        raise DvsError([Diagnostic("MISSING_HEADER", "refinement needs a char line or an explicit characteristic")])
    targets = []
    seen = set()
    for r in raws:
        if r.subset in seen:
            raise DvsError([Diagnostic("DUPLICATE_BLOCK", f"second refinement for {fmt_subset(r.subset)}", r.tok.line, r.tok.col)])
        seen.add(r.subset)
        targets.append(CoverBlock(r.subset, tuple(t.text for t in r.names), tuple(r.eqs)))
    targets.sort(key=lambda b: subset_key(b.subset))
    return RefinementSpec(tuple(targets))


def validate(spec: SystemSpec) -> list:
    """Syntactic invariants of a spec; empty list iff all hold."""
    diags = []
    owner = {vertex_var(i): (i,) for i in spec.vertices}
    seen = set()
    for b in spec.blocks:
        if b.subset in seen:
            diags.append(Diagnostic("DUPLICATE_BLOCK", f"second block for {fmt_subset(b.subset)}"))
        seen.add(b.subset)
        for i in b.subset:
            if i not in spec.vertices:
                diags.append(Diagnostic("UNKNOWN_VERTEX", f"vertex {i} is not declared"))
        for v in b.vars:
            if v in owner:
                diags.append(Diagnostic("DUPLICATE_VARIABLE", f"variable {v} declared twice"))
            owner[v] = b.subset
    needed = set(spec.vertices) | {i for b in spec.blocks for i in b.subset}
    for i in sorted(needed):
        if (i,) not in seen:
            diags.append(Diagnostic("MISSING_SINGLETON", f"vertex {i} has no sort block"))
    for b in spec.blocks:
        uset = set(b.subset)
        for eq in b.eqs:
            if eq.p != spec.p:
                diags.append(Diagnostic("BAD_CHAR", f"equation at {fmt_subset(b.subset)} uses characteristic {eq.p}"))
            for name in sorted(eq.variables()):
                m = VERTEX_VAR.match(name)
                if m:
                    if int(m.group(1)) not in uset:
                        diags.append(Diagnostic("SCOPE_VIOLATION", f"variable {name} is outside block {fmt_subset(b.subset)}"))
                elif name not in owner:
                    diags.append(Diagnostic("UNKNOWN_VARIABLE", f"unknown variable {name}"))
                elif not set(owner[name]) <= uset:
                    diags.append(Diagnostic("SCOPE_VIOLATION", f"variable {name} is outside block {fmt_subset(b.subset)}"))
    if not diags:
        diags = _triangular_diags(spec)
    return diags


def print_system(spec: SystemSpec) -> str:
    lines = [f"system {spec.name}", f"char {spec.p}", "vertices " + " ".join(str(i) for i in spec.vertices)]
    for b in spec.blocks:
        head = f"sort {b.subset[0]}" if b.is_sort else f"cover {fmt_subset(b.subset)}"
        parts = []
        if b.vars:
            parts.append("vars " + " ".join(b.vars))
        parts.append("eqs " + ", ".join(str(e) for e in b.eqs) if b.eqs else "eqs")
        lines.append(f"{head}: " + "; ".join(parts))
    return "\n".join(lines) + "\n"


def print_refinement(ref: RefinementSpec, p: int | None = None) -> str:
    lines = [f"char {p}"] if p else []
    for b in ref.targets:
        parts = []
        if b.vars:
            parts.append("vars " + " ".join(b.vars))
        parts.append("eqs " + ", ".join(str(e) for e in b.eqs) if b.eqs else "eqs")
        lines.append(f"refine {fmt_subset(b.subset)}: " + "; ".join(parts))
    return "\n".join(lines) + "\n"


def rebind_char(spec: SystemSpec, p: int) -> SystemSpec:
    """Same system read in characteristic p (coefficients are symmetric residues)."""
    if p == spec.p:
        return spec
    if not is_prime(p):
        raise ValueError(f"{p} is not prime")
    blocks = tuple(replace(b, eqs=tuple(e.rebind(p) for e in b.eqs)) for b in spec.blocks)
    return replace(spec, p=p, blocks=blocks)


def rebind_refinement(ref: RefinementSpec, p: int) -> RefinementSpec:
    return RefinementSpec(tuple(replace(b, eqs=tuple(e.rebind(p) for e in b.eqs)) for b in ref.targets))
