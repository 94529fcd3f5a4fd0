"""Exact graded-commutative polynomial kernel with matrix-indexed generators.

A generator is a 6-tuple ``(slot, x2, x1, kind, row, col)``; its matrix
variable is the 4-tuple prefix ``(slot, x2, x1, kind)``.  The slot tags the
tensor factor a generator lives in (0 for configuration algebras, 1, 2, ...
for copies of the gauge Hopf algebra), so tensor products are plain unions of
generator sets and the Koszul rule handles all signs.

Localization at ``det`` of every invertible matrix variable is encoded as a
negative exponent of the formal symbol ``det(v)``.  Monomials are kept
reduced modulo ``det(v) * det(v)^-1 = 1``: whenever a monomial contains all
diagonal entries of ``v`` together with ``det(v)^-1`` the diagonal product is
rewritten through the Leibniz expansion of ``det``.  With a lex order in which
the diagonal product leads, these rewrite rules form a Groebner basis, so the
reduced form is canonical and equality is syntactic.
"""
from __future__ import annotations

import itertools
from fractions import Fraction
from functools import lru_cache
from numbers import Rational

T1, T2, T, U, UG, E, XI1, XI2, XI = range(9)
KIND_NAMES = ("T1", "T2", "T", "U", "Ug", "E", "Xi1", "Xi2", "Xi")
KIND_DEGREE = (0, 0, 0, 0, 0, 0, -1, -1, -2)
LOCALIZED = frozenset((T1, T2, T, U, UG))
KIND_BY_NAME = {name: k for k, name in enumerate(KIND_NAMES)}


class UnknownGenerator(ValueError):
    pass


class UnsupportedInverse(ValueError):
    pass


class UniverseMismatch(ValueError):
    pass


def mvar(kind, x1, x2=0, slot=0):
    return (slot, x2, x1, kind)


def gen_degree(g):
    return KIND_DEGREE[g[3]]


def gen_name(g):
    slot, x2, x1, kind = g[:4]
    if kind == UG:
        s = f"Ug({x1})"
    else:
        s = f"{KIND_NAMES[kind]}({x1},{x2})"
    if slot:
        s += f"@{slot}"
    if len(g) > 4:
        s += f"[{g[4]},{g[5]}]"
    return s


def _norm(c):
    if type(c) is Fraction and c.denominator == 1:
        return int(c.numerator)
    return c


# ---------------------------------------------------------------------------
# monomials: (comm, odd, dets)
#   comm: sorted tuple of (gen, exp>0) for even generators (degree 0 and -2)
#   odd:  strictly increasing tuple of degree -1 generators
#   dets: sorted tuple of (mvar, k) with k < 0, meaning det(mvar)^k

ONE_MONO = ((), (), ())


def _merge_counts(a, b):
    if not a:
        return b
    if not b:
        return a
    acc = dict(a)
    for k, v in b:
        acc[k] = acc.get(k, 0) + v
    return tuple(sorted(acc.items()))


def _merge_odd(o1, o2):
    """Merge two sorted odd tuples; return (sign, merged) or None if a repeat occurs."""
    if not o1:
        return 1, o2
    if not o2:
        return 1, o1
    out = []
    i = j = 0
    inv = 0
    n1, n2 = len(o1), len(o2)
    while i < n1 and j < n2:
        a, b = o1[i], o2[j]
        if a < b:
            out.append(a)
            i += 1
        elif b < a:
            out.append(b)
            inv += n1 - i
            j += 1
        else:
            return None
    out.extend(o1[i:])
    out.extend(o2[j:])
    return (-1 if inv & 1 else 1), tuple(out)


def mono_mul(m1, m2):
    """Product of two monomials before det reduction: (sign, mono) or None."""
    r = _merge_odd(m1[1], m2[1])
    if r is None:
        return None
    sign, odd = r
    return sign, (_merge_counts(m1[0], m2[0]), odd, _merge_counts(m1[2], m2[2]))


@lru_cache(maxsize=None)
def _perms(n):
    """Non-identity permutations of range(n) with their signs."""
    out = []
    for p in itertools.permutations(range(n)):
        if p == tuple(range(n)):
            continue
        inv = sum(1 for i in range(n) for j in range(i + 1, n) if p[i] > p[j])
        out.append((p, -1 if inv & 1 else 1))
    return tuple(out)


def _find_reducible(mono, n):
    comm, _, dets = mono
    if not dets or not comm:
        return None
    present = {g: e for g, e in comm}
    for mv, k in dets:
        if all(mv + (i, i) in present for i in range(1, n + 1)):
            return mv, k
    return None


def _strip(counts, removals):
    acc = dict(counts)
    for key, v in removals:
        left = acc.get(key, 0) - v
        if left:
            acc[key] = left
        else:
            acc.pop(key, None)
    return tuple(sorted(acc.items()))


@lru_cache(maxsize=1 << 20)
def reduce_mono(mono, n):
    """Canonical form of a monomial as a tuple of (coeff, mono)."""
    hit = _find_reducible(mono, n)
    if hit is None:
        return ((1, mono),)
    mv, k = hit
    comm, odd, dets = mono
    diag = tuple((mv + (i, i), 1) for i in range(1, n + 1))
    rest = _strip(comm, diag)
    raised = _strip(dets, ((mv, -1),))  # det^k -> det^(k+1)
    acc = {}
    for c, m in reduce_mono((rest, odd, raised), n):
        acc[m] = acc.get(m, 0) + c
    for perm, sgn in _perms(n):
        extra = tuple(sorted((mv + (i + 1, perm[i] + 1), 1) for i in range(n)))
        m0 = (_merge_counts(rest, extra), odd, dets)
        for c, m in reduce_mono(m0, n):
            acc[m] = acc.get(m, 0) - sgn * c
    return tuple((c, m) for m, c in acc.items() if c)


def mono_degree(mono):
    deg = -len(mono[1])
    for g, e in mono[0]:
        if g[3] == XI:
            deg -= 2 * e
    return deg


def mono_mvars(mono):
    out = {g[:4] for g, _ in mono[0]}
    out.update(g[:4] for g in mono[1])
    out.update(mv for mv, _ in mono[2])
    return out


def mono_key(mono):
    return mono


def mono_str(mono):
    comm, odd, dets = mono
    parts = []
    for g, e in comm:
        parts.append(gen_name(g) + (f"^{e}" if e != 1 else ""))
    parts.extend(gen_name(g) for g in odd)
    for mv, k in dets:
        parts.append(f"det({gen_name(mv)})^{k}")
    return "*".join(parts) if parts else "1"


def _coeff_str(c):
    c = Fraction(c)
    return f"{c.numerator}/{c.denominator}"


class Element:
    """Sparse exact element: dict monomial -> nonzero rational coefficient."""

    __slots__ = ("terms", "n")

    def __init__(self, terms=None, n=1):
        self.terms = terms if terms is not None else {}
        self.n = n

    # -- constructors
    @classmethod
    def scalar(cls, c, n):
        c = _norm(c)
        return cls({ONE_MONO: c} if c else {}, n)

    @classmethod
    def zero(cls, n):
        return cls({}, n)

    @classmethod
    def gen(cls, g, n):
        if len(g) != 6:
            raise UnknownGenerator(f"not a generator key: {g!r}")
        if not (1 <= g[4] <= n and 1 <= g[5] <= n):
            raise UnknownGenerator(f"index out of range for n={n}: {gen_name(g)}")
        deg = KIND_DEGREE[g[3]]
        mono = ((), (g,), ()) if deg == -1 else (((g, 1),), (), ())
        return cls({mono: 1}, n)

    @classmethod
    def det_inverse(cls, mv, n):
        if mv[3] not in LOCALIZED:
            raise UnsupportedInverse(f"{gen_name(mv)} is not localized")
        return cls({((), (), ((mv, -1),)): 1}, n)

    @classmethod
    def from_mono(cls, mono, coeff, n):
        acc = {}
        for c, m in reduce_mono(mono, n) if mono[2] else ((1, mono),):
            acc[m] = acc.get(m, 0) + c * coeff
        return cls({m: _norm(c) for m, c in acc.items() if c}, n)

    # -- arithmetic
    def _coerce(self, other):
        if isinstance(other, Element):
            if other.n != self.n:
                raise UniverseMismatch(f"matrix size mismatch: {self.n} vs {other.n}")
            return other
        if isinstance(other, (int, Rational)):
            return Element.scalar(other, self.n)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if not other.terms:
            return self
        acc = dict(self.terms)
        for m, c in other.terms.items():
            v = acc.get(m, 0) + c
            if v:
                acc[m] = _norm(v)
            else:
                acc.pop(m, None)
        return Element(acc, self.n)

    __radd__ = __add__

    def __neg__(self):
        return Element({m: -c for m, c in self.terms.items()}, self.n)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c):
        c = _norm(c)
        if not c:
            return Element({}, self.n)
        if c == 1:
            return self
        return Element({m: _norm(v * c) for m, v in self.terms.items()}, self.n)

    def __mul__(self, other):
        if isinstance(other, (int, Rational)) and not isinstance(other, bool):
            return self.scale(other)
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        n = self.n
        acc = {}
        get = acc.get
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                r = mono_mul(m1, m2)
                if r is None:
                    continue
                s, m = r
                c = c1 * c2 if s > 0 else -c1 * c2
                if m[2]:
                    for cc, mm in reduce_mono(m, n):
                        acc[mm] = get(mm, 0) + c * cc
                else:
                    acc[m] = get(m, 0) + c
        return Element({m: _norm(c) for m, c in acc.items() if c}, n)

    def __rmul__(self, other):
        if isinstance(other, (int, Rational)):
            return self.scale(other)
        return NotImplemented

    def __pow__(self, k):
        out = Element.scalar(1, self.n)
        for _ in range(k):
            out = out * self
        return out

    # -- queries
    def is_zero(self):
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def __eq__(self, other):
        if isinstance(other, (int, Rational)):
            other = Element.scalar(other, self.n)
        if not isinstance(other, Element):
            return NotImplemented
        return self.terms == other.terms

    __hash__ = None

    def degrees(self):
        return {mono_degree(m) for m in self.terms}

    def degree(self):
        """Degree of a homogeneous element (None for 0); ValueError if mixed."""
        ds = self.degrees()
        if not ds:
            return None
        if len(ds) > 1:
            raise ValueError(f"inhomogeneous element with degrees {sorted(ds)}")
        return ds.pop()

    def mvars(self):
        out = set()
        for m in self.terms:
            out |= mono_mvars(m)
        return out

    def sorted_terms(self):
        return sorted(self.terms.items(), key=lambda kv: kv[0])

    def dump(self):
        """Canonical text: monomials in the generator order, coefficients as p/q."""
        if not self.terms:
            return "0"
        return " + ".join(f"{_coeff_str(c)}*{mono_str(m)}" for m, c in self.sorted_terms())

    def __repr__(self):
        return f"Element({self.dump()})"


def elements_equal(a, b):
    """Equality in the localized algebra.

    Reduced forms are canonical, so the difference vanishes iff a == b.  The
    cross-multiplication test is used as a fallback confirmation when the
    difference is nonzero.
    """
    diff = a - b
    if diff.is_zero():
        return True
    return cleared_is_zero(diff)


def cleared_is_zero(x):
    """Multiply x by the minimal det powers that clear all inverses and test for 0
    in the plain polynomial ring (no reduction)."""
    need = {}
    for _, _, dets in x.terms:
        for mv, k in dets:
            need[mv] = min(need.get(mv, 0), k)
    poly = {}
    for (comm, odd, dets), c in x.terms.items():
        have = dict(dets)
        factors = [{(comm, odd): c}]
        for mv, k in need.items():
            power = have.get(mv, 0) - k
            if power:
                factors.append(_plain_det_power(mv, power, x.n))
        term = factors[0]
        for f in factors[1:]:
            term = _plain_mul(term, f)
        for m, v in term.items():
            poly[m] = poly.get(m, 0) + v
    return all(v == 0 for v in poly.values())


def _plain_mul(p, q):
    out = {}
    for (c1, o1), a in p.items():
        for (c2, o2), b in q.items():
            r = _merge_odd(o1, o2)
            if r is None:
                continue
            s, o = r
            key = (_merge_counts(c1, c2), o)
            out[key] = out.get(key, 0) + s * a * b
    return out


def _plain_det_power(mv, power, n):
    det = {}
    for p in itertools.permutations(range(n)):
        inv = sum(1 for i in range(n) for j in range(i + 1, n) if p[i] > p[j])
        comm = _merge_counts((), tuple(sorted((mv + (i + 1, p[i] + 1), 1) for i in range(n))))
        det[(comm, ())] = det.get((comm, ()), 0) + (-1 if inv & 1 else 1)
    out = {((), ()): 1}
    for _ in range(power):
        out = _plain_mul(out, det)
    return out


def normal_form(terms, n, universe=None):
    """Build an element from (sign, factors, scalar) triples.

    Each factor is a generator 6-tuple, or ``mvar + (0, 0)`` for ``det(mvar)^-1``.
    Factors are multiplied in the listed order, so Koszul signs of reordering
    are applied automatically.
    """
    out = Element.zero(n)
    for sign, factors, scalar in terms:
        acc = Element.scalar(sign * scalar, n)
        for f in factors:
            if universe is not None and f[:4] not in universe:
                raise UnknownGenerator(f"{gen_name(f[:4])} is not registered")
            if f[4] == 0 and f[5] == 0:
                acc = acc * Element.det_inverse(f[:4], n)
            else:
                acc = acc * Element.gen(f, n)
        out = out + acc
    return out


# ---------------------------------------------------------------------------
# matrices and invertibility certificates
#
# A certificate is a word: tuple of letters (mvar, power, transposed) with
# power in {+1, -1}; the matrix equals the ordered product of the letters.


def reduce_word(word):
    out = []
    for letter in word:
        if out and out[-1][0] == letter[0] and out[-1][2] == letter[2] and out[-1][1] == -letter[1]:
            out.pop()
        else:
            out.append(letter)
    return tuple(out)


def invert_word(word):
    return tuple((mv, -p, tr) for mv, p, tr in reversed(word))


def transpose_word(word):
    return tuple((mv, p, not tr) for mv, p, tr in reversed(word))


def _det_poly(entries, n):
    if n == 1:
        return entries[0][0]
    if n == 2:
        return entries[0][0] * entries[1][1] - entries[0][1] * entries[1][0]
    total = Element.zero(entries[0][0].n)
    for j in range(n):
        minor = [row[:j] + row[j + 1:] for row in entries[1:]]
        term = entries[0][j] * _det_poly(minor, n - 1)
        total = total + term if j % 2 == 0 else total - term
    return total


@lru_cache(maxsize=None)
def _letter_rows(letter, n):
    mv, power, tr = letter
    g = [[Element.gen(mv + (i, j), n) for j in range(1, n + 1)] for i in range(1, n + 1)]
    if power == 1:
        rows = g
    else:
        if mv[3] not in LOCALIZED:
            raise UnsupportedInverse(f"{gen_name(mv)} is not an invertible matrix variable")
        t = Element.det_inverse(mv, n)
        rows = [[None] * n for _ in range(n)]
        for i in range(n):
            for j in range(n):
                minor = [[g[r][c] for c in range(n) if c != i] for r in range(n) if r != j]
                cof = _det_poly(minor, n - 1) if n > 1 else Element.scalar(1, n)
                if (i + j) % 2:
                    cof = -cof
                rows[i][j] = cof * t
    if tr:
        rows = [[rows[j][i] for j in range(n)] for i in range(n)]
    return tuple(tuple(r) for r in rows)


def _mul_rows(a, b, n):
    out = []
    for i in range(n):
        row = []
        for j in range(n):
            acc = Element.zero(a[0][0].n)
            for k in range(n):
                if a[i][k].terms and b[k][j].terms:
                    acc = acc + a[i][k] * b[k][j]
            row.append(acc)
        out.append(tuple(row))
    return tuple(out)


@lru_cache(maxsize=1 << 16)
def _word_rows(word, n):
    if not word:
        return tuple(tuple(Element.scalar(int(i == j), n) for j in range(n)) for i in range(n))
    if len(word) == 1:
        return _letter_rows(word[0], n)
    return _mul_rows(_word_rows(word[:-1], n), _letter_rows(word[-1], n), n)


class Matrix:
    """n x n matrix of elements with an optional invertibility certificate."""

    __slots__ = ("rows", "word", "n")

    def __init__(self, rows, word=None):
        self.rows = tuple(tuple(r) for r in rows)
        self.n = len(self.rows)
        if any(len(r) != self.n for r in self.rows):
            raise ValueError("matrix must be square")
        self.word = word

    @classmethod
    def from_word(cls, word, n):
        word = reduce_word(tuple(word))
        return cls(_word_rows(word, n), word)

    @classmethod
    def gen(cls, mv, n):
        if mv[3] in LOCALIZED:
            return cls.from_word(((mv, 1, False),), n)
        return cls([[Element.gen(mv + (i, j), n) for j in range(1, n + 1)] for i in range(1, n + 1)])

    @classmethod
    def identity(cls, n):
        return cls.from_word((), n)

    @classmethod
    def zero(cls, n):
        return cls([[Element.zero(n)] * n for _ in range(n)])

    def __getitem__(self, ij):
        i, j = ij
        return self.rows[i][j]

    def entries(self):
        for i in range(self.n):
            for j in range(self.n):
                yield (i, j), self.rows[i][j]

    def _check(self, other):
        if not isinstance(other, Matrix):
            raise TypeError("expected Matrix")
        if other.n != self.n:
            raise ValueError(f"dimension mismatch: {self.n} vs {other.n}")

    def __matmul__(self, other):
        self._check(other)
        if self.word is not None and other.word is not None:
            return Matrix.from_word(self.word + other.word, self.n)
        return Matrix(_mul_rows(self.rows, other.rows, self.n))

    def __add__(self, other):
        self._check(other)
        return Matrix([[a + b for a, b in zip(r, s)] for r, s in zip(self.rows, other.rows)])

    def __sub__(self, other):
        self._check(other)
        return Matrix([[a - b for a, b in zip(r, s)] for r, s in zip(self.rows, other.rows)])

    def __neg__(self):
        return Matrix([[-a for a in r] for r in self.rows])

    def scale(self, c):
        if c == 1:
            return self
        return Matrix([[a.scale(c) for a in r] for r in self.rows])

    def uncertified(self):
        return Matrix(self.rows)

    def inverse(self):
        if self.word is None:
            raise UnsupportedInverse("cannot invert a matrix without an invertibility certificate")
        return Matrix.from_word(invert_word(self.word), self.n)

    def transpose(self):
        rows = [[self.rows[j][i] for j in range(self.n)] for i in range(self.n)]
        return Matrix(rows, None if self.word is None else transpose_word(self.word))

    def trace(self):
        return sum((self.rows[i][i] for i in range(self.n)), Element.zero(self.rows[0][0].n))

    def det(self):
        if self.word is not None:
            out = Element.scalar(1, self.n)
            for mv, p, _ in self.word:
                if p == 1:
                    out = out * _det_poly(_letter_rows((mv, 1, False), self.n), self.n)
                else:
                    out = out * Element.det_inverse(mv, self.n)
            return out
        return _det_poly(self.rows, self.n)

    def is_zero(self):
        return all(not e.terms for r in self.rows for e in r)

    def __eq__(self, other):
        if not isinstance(other, Matrix):
            return NotImplemented
        return self.n == other.n and all(a == b for r, s in zip(self.rows, other.rows) for a, b in zip(r, s))

    __hash__ = None

    def mvars(self):
        out = set()
        for r in self.rows:
            for e in r:
                out |= e.mvars()
        if self.word:
            out.update(mv for mv, _, _ in self.word)
        return out

    def dump(self):
        return "[" + "; ".join(", ".join(e.dump() for e in r) for r in self.rows) + "]"

    def __repr__(self):
        return f"Matrix({self.dump()})"


def matmul_entries(a, b):
    """Entrywise matrix product that ignores certificates (an independent route)."""
    a._check(b)
    return Matrix(_mul_rows(a.rows, b.rows, a.n))


def trace(m):
    return m.trace()


def determinant(m):
    return m.det()


def matrix_multiply(m, n):
    return m @ n


def matrix_inverse(m):
    return m.inverse()


def multiply(a, b):
    return a * b


class WordSum:
    """Structured matrix expression: sum of coeff * W(left) * mid * W(right).

    ``mid`` is a Matrix or None (then the term is a pure certified word).
    Keeping differentials in this shape lets morphisms act by word
    substitution before anything is expanded.
    """

    __slots__ = ("terms", "n")

    def __init__(self, terms, n):
        self.terms = tuple(terms)
        self.n = n

    def expand(self):
        n = self.n
        out = Matrix.zero(n)
        for coeff, left, mid, right in self.terms:
            if mid is None:
                m = Matrix.from_word(left + right, n)
            else:
                m = mid
                if left:
                    m = Matrix.from_word(left, n).uncertified() @ m
                if right:
                    m = m @ Matrix.from_word(right, n).uncertified()
            out = out + m.scale(coeff)
        return out

    def map(self, map_word, map_matrix):
        """Image under a substitution; None if some word has no certified image."""
        terms = []
        for coeff, left, mid, right in self.terms:
            left2, right2 = map_word(left), map_word(right)
            if left2 is None or right2 is None:
                return None
            mid2 = None if mid is None else map_matrix(mid)
            if mid2 is not None and mid2.is_zero():
                continue
            terms.append((coeff, reduce_word(left2), mid2, reduce_word(right2)))
        return WordSum(terms, self.n)
