"""Independent reference computations used to cross-check the package.

None of these reuse the package's normal-form or reduction code: elements are
evaluated through a homomorphism into a Grassmann algebra over the rationals,
signs are computed by literal adjacent swaps, homotopies by enumerating every
ordering, and ranks by sympy.
"""
from __future__ import annotations

import itertools
import math
import random
from fractions import Fraction

import sympy

from ymdcrit.symalg import KIND_DEGREE


# ---------------------------------------------------------------------------
# Grassmann algebra: dict sorted-index-tuple -> Fraction


def g_mul(a, b):
    out = {}
    for ka, va in a.items():
        for kb, vb in b.items():
            if set(ka) & set(kb):
                continue
            # sign of merging ka then kb into sorted order
            inv = sum(1 for i in ka for j in kb if i > j)
            key = tuple(sorted(ka + kb))
            out[key] = out.get(key, 0) + (-1) ** inv * va * vb
    return {k: v for k, v in out.items() if v}


def g_add(a, b, scale=1):
    out = dict(a)
    for k, v in b.items():
        out[k] = out.get(k, 0) + scale * v
    return {k: v for k, v in out.items() if v}


def det_fraction(rows):
    m = sympy.Matrix(rows)
    return Fraction(str(m.det()))


class Point:
    """Random evaluation point: even generators -> rationals, odd ones -> Grassmann units."""

    def __init__(self, seed=0):
        self.rng = random.Random(seed)
        self.values = {}
        self.odd_index = {}

    def even(self, g):
        v = self.values.get(g)
        if v is None:
            v = Fraction(self.rng.randint(-9, 9), self.rng.randint(1, 5))
            if g[4] == g[5]:
                v += 7  # keeps sampled determinants away from 0
            self.values[g] = v
        return v

    def odd(self, g):
        if g not in self.odd_index:
            self.odd_index[g] = len(self.odd_index)
        return {(self.odd_index[g],): Fraction(1)}

    def det(self, mv, n):
        return det_fraction([[self.even(mv + (i, j)) for j in range(1, n + 1)] for i in range(1, n + 1)])


def evaluate(x, point):
    """Image of an Element under the evaluation homomorphism."""
    n = x.n
    out = {}
    for (comm, odd, dets), c in x.terms.items():
        val = {(): Fraction(c)}
        scalar = Fraction(1)
        for g, e in comm:
            if KIND_DEGREE[g[3]] % 2:
                raise AssertionError("odd generator in the even part")
            scalar *= point.even(g) ** e
        for mv, k in dets:
            d = point.det(mv, n)
            assert d != 0, "evaluation point hit a zero determinant"
            scalar *= d ** k
        for g in odd:
            val = g_mul(val, point.odd(g))
        out = g_add(out, val, scalar)
    return out


def same_value(a, b, seeds=(0, 1, 2)):
    """a and b agree at several random evaluation points (shared across a and b)."""
    for s in seeds:
        p = Point(s)
        if evaluate(a, p) != evaluate(b, p):
            return False
    return True


# ---------------------------------------------------------------------------
# signs by explicit adjacent transpositions


def bubble_sign(keys, degrees):
    """Sign picked up by sorting ``keys`` with adjacent swaps, swapping two odd
    entries costing -1; returns 0 if an odd key repeats."""
    keys, degrees = list(keys), list(degrees)
    sign = 1
    for i in range(len(keys)):
        for j in range(len(keys) - 1 - i):
            if keys[j] > keys[j + 1]:
                if degrees[j] % 2 and degrees[j + 1] % 2:
                    sign = -sign
                keys[j], keys[j + 1] = keys[j + 1], keys[j]
                degrees[j], degrees[j + 1] = degrees[j + 1], degrees[j]
    for a, b, da in zip(keys, keys[1:], degrees):
        if a == b and da % 2:
            return 0
    return sign


# ---------------------------------------------------------------------------
# homotopy extension over all orderings


def full_permutation_homotopy(h, factors):
    """(1/m!) sum over orderings sigma and positions i of the signed
    f...f h g...g product; factors are (factor, degree) pairs."""
    from ymdcrit.symalg import Element

    n = h.source.n
    m = len(factors)
    out = Element.zero(n)
    for sigma in itertools.permutations(range(m)):
        # Koszul sign of moving factors into the order sigma
        inv = sum(1 for a in range(m) for b in range(a + 1, m)
                  if sigma[a] > sigma[b] and factors[sigma[a]][1] % 2 and factors[sigma[b]][1] % 2)
        base = -1 if inv % 2 else 1
        for i in range(m):
            sign = base * (-1 if sum(factors[sigma[k]][1] for k in range(i)) % 2 else 1)
            term = Element.scalar(sign, n)
            for k in range(m):
                fac = factors[sigma[k]][0]
                if k < i:
                    term = term * h.f_image(fac)
                elif k == i:
                    term = term * h.value(fac)
                else:
                    term = term * h.g_image(fac)
            out = out + term
    return out.scale(Fraction(1, math.factorial(m)))


# ---------------------------------------------------------------------------
# linear algebra


def sympy_rank(rows):
    """Rank of a list of sparse rows (dict column -> rational)."""
    if not rows:
        return 0
    cols = sorted({c for r in rows for c in r})
    if not cols:
        return 0
    idx = {c: i for i, c in enumerate(cols)}
    M = sympy.zeros(len(rows), len(cols))
    for i, r in enumerate(rows):
        for c, v in r.items():
            M[i, idx[c]] = sympy.Rational(Fraction(v).numerator, Fraction(v).denominator)
    return M.rank()
