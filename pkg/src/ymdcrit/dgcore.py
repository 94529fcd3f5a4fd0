"""Differentials, dg-morphisms, homotopies and the generic verification primitives."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .symalg import (
    KIND_DEGREE,
    LOCALIZED,
    Element,
    Matrix,
    UniverseMismatch,
    WordSum,
    gen_name,
    invert_word,
    matmul_entries,
    transpose_word,
)

VERIFIED = "verified identity"
ASSUMED = "out-of-scope assumption recorded"


class ModelingError(ValueError):
    pass


class ClosureError(ModelingError):
    pass


# ---------------------------------------------------------------------------
# reports


@dataclass
class CheckRecord:
    check_id: str
    instance: str
    status: str  # "pass" | "fail" | "skipped-out-of-scope"
    counterexample: str | None = None
    scope: str = VERIFIED

    def as_dict(self):
        d = {"check_id": self.check_id, "instance": self.instance, "status": self.status, "scope": self.scope}
        if self.counterexample is not None:
            d["counterexample"] = self.counterexample
        return d


@dataclass
class Report:
    records: list = field(default_factory=list)

    def add(self, check_id, instance, ok, counterexample=None, scope=VERIFIED):
        self.records.append(CheckRecord(check_id, instance, "pass" if ok else "fail",
                                        None if ok else counterexample, scope))
        return ok

    def note(self, check_id, instance):
        self.records.append(CheckRecord(check_id, instance, "skipped-out-of-scope", None, ASSUMED))

    def extend(self, other):
        self.records.extend(other.records)
        return self

    @property
    def ok(self):
        return all(r.status != "fail" for r in self.records)

    def failures(self):
        return [r for r in self.records if r.status == "fail"]

    def __len__(self):
        return len(self.records)


def compare(report, check_id, instance, lhs, rhs):
    """Record entrywise equality of two elements or matrices."""
    if isinstance(lhs, Matrix):
        for (i, j), a in lhs.entries():
            b = rhs.rows[i][j]
            if a != b:
                return report.add(check_id, instance, False, f"entry [{i + 1},{j + 1}]: {(a - b).dump()}")
        return report.add(check_id, instance, True)
    ok = lhs == rhs
    return report.add(check_id, instance, ok, None if ok else (lhs - rhs).dump())


# ---------------------------------------------------------------------------
# algebras


def mv_degree(mv):
    return KIND_DEGREE[mv[3]]


class DGAlgebra:
    """Free graded-commutative algebra on matrix variables with a differential table.

    ``diff`` maps each matrix variable of nonzero degree to the matrix of
    differentials of its entries; degree-0 variables have zero differential.
    """

    def __init__(self, n, mvars, diff=None, name="", check=True):
        self.n = n
        self.name = name
        self.mvars = frozenset(mvars)
        self.diff = {}
        self.diff_expr = {}
        for mv, m in (diff or {}).items():
            if isinstance(m, WordSum):
                self.diff_expr[mv] = m
                m = m.expand()
            self.diff[mv] = m
        self._dcache = {}
        if check:
            self._validate()

    def _validate(self):
        for mv in self.mvars:
            if mv_degree(mv) > 0:
                raise ModelingError(f"positive degree generator {gen_name(mv)}")
            if mv_degree(mv) < 0 and mv not in self.diff:
                raise ModelingError(f"generator without differential entry: {gen_name(mv)}")
        for mv, m in self.diff.items():
            if mv not in self.mvars:
                raise ModelingError(f"differential given for unregistered {gen_name(mv)}")
            if mv_degree(mv) == 0 and not m.is_zero():
                raise ModelingError(f"degree-0 generator {gen_name(mv)} with nonzero differential")
            bad = m.mvars() - self.mvars
            if bad:
                raise ClosureError(f"d({gen_name(mv)}) uses unregistered {sorted(gen_name(b) for b in bad)}")
            for _, e in m.entries():
                ds = e.degrees()
                if ds and ds != {mv_degree(mv) + 1}:
                    raise ModelingError(f"d({gen_name(mv)}) has degrees {sorted(ds)}")

    def sorted_mvars(self):
        return sorted(self.mvars)

    def gens(self):
        n = self.n
        return [mv + (i, j) for mv in self.sorted_mvars() for i in range(1, n + 1) for j in range(1, n + 1)]

    def contains(self, x):
        return x.mvars() <= self.mvars

    def generator_matrix(self, mv):
        if mv not in self.mvars:
            raise UniverseMismatch(f"{gen_name(mv)} not in {self.name}")
        return Matrix.gen(mv, self.n)

    def d_gen(self, g):
        r = self._dcache.get(g)
        if r is None:
            mv = g[:4]
            if mv not in self.mvars:
                raise UniverseMismatch(f"{gen_name(g)} not in {self.name}")
            m = self.diff.get(mv)
            r = Element.zero(self.n) if m is None else m.rows[g[4] - 1][g[5] - 1]
            self._dcache[g] = r
        return r

    def d(self, x):
        return extend_differential(self, x)

    def d_matrix(self, m):
        return Matrix([[self.d(e) for e in r] for r in m.rows])

    def __repr__(self):
        return f"DGAlgebra({self.name}, {len(self.mvars)} matrix variables, n={self.n})"


def extend_differential(A, x):
    """Graded Leibniz extension of the generator table of A."""
    n = A.n
    out = Element.zero(n)
    acc = {}
    for mono, c in x.terms.items():
        comm, odd, dets = mono
        parts = []
        for idx, (g, e) in enumerate(comm):
            if KIND_DEGREE[g[3]] == 0:
                continue
            dg = A.d_gen(g)
            if not dg.terms:
                continue
            rest = comm[:idx] + (((g, e - 1),) if e > 1 else ()) + comm[idx + 1:]
            left = Element({(rest, (), dets): c * e}, n)
            parts.append(left * dg * Element({((), odd, ()): 1}, n))
        for i, o in enumerate(odd):
            dg = A.d_gen(o)
            if not dg.terms:
                continue
            left = Element({(comm, odd[:i], dets): c if i % 2 == 0 else -c}, n)
            parts.append(left * dg * Element({((), odd[i + 1:], ()): 1}, n))
        for p in parts:
            for m, v in p.terms.items():
                acc[m] = acc.get(m, 0) + v
    out.terms = {m: v for m, v in acc.items() if v}
    return out


class TensorProductAlgebra(DGAlgebra):
    def __init__(self, left, right, name=None):
        if left.n != right.n:
            raise UniverseMismatch("tensor factors must share n")
        clash = left.mvars & right.mvars
        if clash:
            raise UniverseMismatch(f"tensor factors share generators, e.g. {gen_name(min(clash))}")
        diff = dict(left.diff)
        diff.update(right.diff)
        super().__init__(left.n, left.mvars | right.mvars, diff,
                         name or f"({left.name} (x) {right.name})", check=False)
        self.diff_expr = {**left.diff_expr, **right.diff_expr}
        self.left = left
        self.right = right


def tensor(A, B, name=None):
    return TensorProductAlgebra(A, B, name)


def scalars(n):
    return DGAlgebra(n, (), {}, name="K")


# ---------------------------------------------------------------------------
# morphisms


class DGMorphism:
    """Algebra map given by images of generator matrices.

    Images of localized matrix variables must carry an invertibility
    certificate; the image of det(v)^-1 is read off that word.
    """

    def __init__(self, source, target, table, name="", check=True):
        self.source = source
        self.target = target
        self.name = name
        self.table = dict(table)
        self._gcache = {}
        self._tcache = {}
        self._ccache = {}
        if check:
            self._validate()

    @classmethod
    def from_rule(cls, source, target, rule, name="", check=True):
        return cls(source, target, {mv: rule(mv) for mv in source.mvars}, name, check)

    def _validate(self):
        missing = self.source.mvars - set(self.table)
        if missing:
            raise ModelingError(f"{self.name}: no image for {gen_name(min(missing))}")
        for mv in self.source.mvars:
            m = self.table[mv]
            if m.n != self.source.n:
                raise UniverseMismatch(f"{self.name}: wrong matrix size for {gen_name(mv)}")
            if mv[3] in LOCALIZED and m.word is None:
                raise ModelingError(f"{self.name}: image of {gen_name(mv)} lacks an invertibility certificate")
            bad = m.mvars() - self.target.mvars
            if bad:
                raise ClosureError(f"{self.name}: image of {gen_name(mv)} uses {sorted(gen_name(b) for b in bad)}")
            for _, e in m.entries():
                ds = e.degrees()
                if ds and ds != {mv_degree(mv)}:
                    raise ModelingError(f"{self.name}: image of {gen_name(mv)} has degrees {sorted(ds)}")

    def image_gen(self, g):
        r = self._gcache.get(g)
        if r is None:
            r = self.table[g[:4]].rows[g[4] - 1][g[5] - 1]
            self._gcache[g] = r
        return r

    def image_det_inverse(self, mv):
        r = self._tcache.get(mv)
        if r is None:
            word = self.table[mv].word
            if word is None:
                raise ModelingError(f"{self.name}: image of {gen_name(mv)} is not certified")
            r = Matrix.from_word(invert_word(word), self.source.n).det()
            self._tcache[mv] = r
        return r

    def _even_image(self, comm, dets):
        key = (comm, dets)
        r = self._ccache.get(key)
        if r is None:
            r = Element.scalar(1, self.source.n)
            for g, e in comm:
                img = self.image_gen(g)
                for _ in range(e):
                    r = r * img
            for mv, k in dets:
                img = self.image_det_inverse(mv)
                for _ in range(-k):
                    r = r * img
            self._ccache[key] = r
        return r

    def apply(self, x):
        n = self.source.n
        acc = {}
        for (comm, odd, dets), c in x.terms.items():
            r = self._even_image(comm, dets)
            for o in odd:
                if not r.terms:
                    break
                r = r * self.image_gen(o)
            for m, v in r.terms.items():
                acc[m] = acc.get(m, 0) + c * v
        return Element({m: v if type(v) is int else _n(v) for m, v in acc.items() if v}, n)

    def __call__(self, x):
        return self.apply(x)

    def map_word(self, word):
        out = []
        for mv, p, tr in word:
            w = self.table[mv].word
            if w is None:
                return None
            if p == -1:
                w = invert_word(w)
            if tr:
                w = transpose_word(w)
            out.extend(w)
        return tuple(out)

    def map_wordsum(self, ws):
        return ws.map(self.map_word, lambda m: Matrix([[self.apply(e) for e in r] for r in m.rows]))

    def apply_differential(self, mv):
        """Image of d(mv) in the target, through the structured form when available."""
        ws = self.source.diff_expr.get(mv)
        if ws is not None:
            mapped = self.map_wordsum(ws)
            if mapped is not None:
                return mapped.expand()
        return Matrix([[self.apply(e) for e in r] for r in self.source.diff[mv].rows])

    def apply_matrix(self, m):
        if m.word is not None:
            w = self.map_word(m.word)
            if w is not None:
                return Matrix.from_word(w, m.n)
        return Matrix([[self.apply(e) for e in r] for r in m.rows])

    def __repr__(self):
        return f"DGMorphism({self.name}: {self.source.name} -> {self.target.name})"


def _n(v):
    if isinstance(v, Fraction) and v.denominator == 1:
        return int(v)
    return v


def identity_morphism(A, target=None):
    return DGMorphism.from_rule(A, target or A, lambda mv: Matrix.gen(mv, A.n), name=f"id[{A.name}]", check=False)


def compose(outer, inner, name=None, check=False):
    """outer after inner (inner is applied first)."""
    if not inner.target.mvars <= outer.source.mvars:
        missing = inner.target.mvars - outer.source.mvars
        used = set()
        for m in inner.table.values():
            used |= m.mvars()
        if used & missing:
            raise UniverseMismatch(f"cannot compose {outer.name} after {inner.name}")
    table = {mv: outer.apply_matrix(m) for mv, m in inner.table.items()}
    return DGMorphism(inner.source, outer.target, table, name or f"{outer.name}.{inner.name}", check)


def tensor_morphism(maps, source, target, name="tensor"):
    table = {}
    for f in maps:
        table.update(f.table)
    return DGMorphism(source, target, table, name)


def morphisms_equal(f, g, report=None, check_id="morphism-equality", instance=None):
    report = report if report is not None else Report()
    for mv in sorted(f.source.mvars):
        a, b = f.table[mv], g.table[mv]
        compare(report, check_id, f"{instance or f.name}: {gen_name(mv)}", a, b)
    return report


def verify_d_squared(A, report=None, instance=None):
    report = report if report is not None else Report()
    for mv in A.sorted_mvars():
        if mv_degree(mv) == 0:
            report.add("d-squared", f"{instance or A.name}: {gen_name(mv)}", True)
            continue
        bad = None
        for _, e in A.diff[mv].entries():
            dd = A.d(e)
            if dd.terms:
                bad = dd.dump()
                break
        report.add("d-squared", f"{instance or A.name}: {gen_name(mv)}", bad is None, bad)
    return report


def verify_chain_map(f, report=None, instance=None):
    report = report if report is not None else Report()
    S, T_ = f.source, f.target
    for mv in S.sorted_mvars():
        img = f.table[mv]
        bad = None
        if mv_degree(mv) < 0:
            fd = f.apply_differential(mv)
            for (i, j), lhs in fd.entries():
                rhs = T_.d(img.rows[i][j])
                if lhs != rhs:
                    bad = f"entry [{i + 1},{j + 1}]: {(lhs - rhs).dump()}"
                    break
        else:
            for (i, j), e in img.entries():
                de = T_.d(e)
                if de.terms:
                    bad = f"entry [{i + 1},{j + 1}]: {de.dump()}"
                    break
        report.add("chain-map", f"{instance or f.name}: {gen_name(mv)}", bad is None, bad)
    return report


def verify_multiplicative(f, pairs, report=None, instance=None):
    report = report if report is not None else Report()
    for k, (a, b) in enumerate(pairs):
        compare(report, "multiplicative", f"{instance or f.name}: sample {k}", f.apply(a * b), f.apply(a) * f.apply(b))
    return report


# ---------------------------------------------------------------------------
# homotopies


class AlgebraHomotopy:
    """(f, g)-homotopy given on generators and extended by symmetrized
    (f, g)-derivation averaging.  Generators absent from the table map to 0."""

    def __init__(self, source, target, f, g, table, name="h"):
        if f.source is not source or g.source is not source:
            raise ModelingError("homotopy endpoints must share the source")
        if not (f.target.mvars <= target.mvars and g.target.mvars <= target.mvars):
            raise ModelingError("homotopy endpoints must land in the target")
        self.source, self.target, self.f, self.g, self.name = source, target, f, g, name
        self.table = dict(table)
        for mv, m in self.table.items():
            if mv not in source.mvars:
                raise ModelingError(f"{name}: {gen_name(mv)} not in source")
            if mv[3] in LOCALIZED and not m.is_zero():
                raise ModelingError(f"{name}: nonzero value on localized generator {gen_name(mv)} is not supported")
            for _, e in m.entries():
                ds = e.degrees()
                if ds and ds != {mv_degree(mv) - 1}:
                    raise ModelingError(f"{name}: value on {gen_name(mv)} has degrees {sorted(ds)}")
        self._fixed = {}

    def value(self, factor):
        kind, key = factor
        if kind == "t":
            return Element.zero(self.source.n)
        m = self.table.get(key[:4])
        return Element.zero(self.source.n) if m is None else m.rows[key[4] - 1][key[5] - 1]

    def f_image(self, factor):
        kind, key = factor
        return self.f.image_det_inverse(key) if kind == "t" else self.f.image_gen(key)

    def g_image(self, factor):
        kind, key = factor
        return self.g.image_det_inverse(key) if kind == "t" else self.g.image_gen(key)

    def is_fixed(self, factor):
        r = self._fixed.get(factor)
        if r is None:
            r = not self.value(factor).terms and self.f_image(factor) == self.g_image(factor)
            self._fixed[factor] = r
        return r

    def apply(self, x):
        return extend_homotopy(self, x)

    def __call__(self, x):
        return self.apply(x)


def factor_list(mono):
    """Factors of a monomial in canonical order: (("g", gen) | ("t", mvar), degree)."""
    comm, odd, dets = mono
    out = []
    for g, e in comm:
        out.extend([(("g", g), KIND_DEGREE[g[3]])] * e)
    out.extend((("g", g), -1) for g in odd)
    for mv, k in dets:
        out.extend([(("t", mv), 0)] * (-k))
    return out


def koszul_sign(degrees, order):
    """Sign of reordering factors with the given degrees into the given order."""
    inv = 0
    m = len(order)
    for a in range(m):
        if degrees[order[a]] & 1:
            for b in range(a + 1, m):
                if order[b] < order[a] and degrees[order[b]] & 1:
                    inv += 1
    return -1 if inv & 1 else 1


def _product(elems, n):
    r = Element.scalar(1, n)
    for e in elems:
        r = r * e
        if not r.terms:
            break
    return r


def symmetrized_homotopy(h, factors):
    """h on a product of the listed factors, by the subset form of the
    symmetrized (f, g)-derivation average."""
    n = h.source.n
    s = len(factors)
    degs = [d for _, d in factors]
    out = Element.zero(n)
    fimg = [h.f_image(fa) for fa, _ in factors]
    gimg = [h.g_image(fa) for fa, _ in factors]
    for j in range(s):
        hj = h.value(factors[j][0])
        if not hj.terms:
            continue
        others = [i for i in range(s) if i != j]
        for mask in range(1 << len(others)):
            S = [others[i] for i in range(len(others)) if mask >> i & 1]
            R = [others[i] for i in range(len(others)) if not mask >> i & 1]
            w = Fraction(math.factorial(len(S)) * math.factorial(len(R)), math.factorial(s))
            sign = koszul_sign(degs, S + [j] + R)
            if sum(degs[i] for i in S) & 1:
                sign = -sign
            term = _product([fimg[i] for i in S], n) * hj * _product([gimg[i] for i in R], n)
            out = out + term.scale(w * sign)
    return out


def extend_homotopy(h, x, fast=True):
    n = h.source.n
    out = Element.zero(n)
    for mono, c in x.terms.items():
        facs = factor_list(mono)
        if fast:
            active = [i for i, (fa, _) in enumerate(facs) if not h.is_fixed(fa)]
            if not active:
                continue
            fixed = [i for i in range(len(facs)) if i not in set(active)]
            degs = [d for _, d in facs]
            sign = koszul_sign(degs, fixed + active)
            if sum(degs[i] for i in fixed) & 1:
                sign = -sign
            pre = _product([h.f_image(facs[i][0]) for i in fixed], n)
            val = pre * symmetrized_homotopy(h, [facs[i] for i in active])
        else:
            sign = 1
            val = symmetrized_homotopy(h, facs)
        out = out + val.scale(c * sign)
    return out


def boundary_of_homotopy(h, x):
    """(d h + h d)(x)."""
    return h.target.d(h.apply(x)) + h.apply(h.source.d(x))


def verify_homotopy(h, elements, report=None, instance=None, check_id="homotopy"):
    """Check d h + h d = f - g on each element."""
    report = report if report is not None else Report()
    for label, x in elements:
        lhs = boundary_of_homotopy(h, x)
        rhs = h.f.apply(x) - h.g.apply(x)
        compare(report, check_id, f"{instance or h.name}: {label}", lhs, rhs)
    return report


def _letter_matrix(letter, n):
    return Matrix.from_word((letter,), n).uncertified()


def apply_structured(f, obj):
    """Image of a matrix under f computed factor by factor.

    Each letter of a certificate word (or each factor of a WordSum term) is
    mapped entrywise and the images are multiplied with explicit matrix
    products; no word cancellation is used.
    """
    n = f.source.n
    if isinstance(obj, WordSum):
        out = Matrix.zero(n)
        for coeff, left, mid, right in obj.terms:
            m = _apply_word_factored(f, left, n)
            if mid is not None:
                m = matmul_entries(m, Matrix([[f.apply(e) for e in r] for r in mid.rows]))
            m = matmul_entries(m, _apply_word_factored(f, right, n))
            out = out + m.scale(coeff)
        return out
    if obj.word is not None:
        return _apply_word_factored(f, obj.word, n)
    return Matrix([[f.apply(e) for e in r] for r in obj.rows])


def _apply_word_factored(f, word, n):
    m = Matrix.identity(n).uncertified()
    for letter in word:
        img = Matrix([[f.apply(e) for e in r] for r in _letter_matrix(letter, n).rows])
        m = matmul_entries(m, img)
    return m
