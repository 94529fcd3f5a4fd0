"""Window-indexed model algebras: gauge Hopf algebras, dCrit algebras
(plain and axial-gauge), coactions, curvature, Wilson action and nerve levels."""
from __future__ import annotations

import random
from dataclasses import dataclass
from functools import lru_cache

from .dgcore import (
    DGAlgebra,
    DGMorphism,
    Report,
    compare,
    scalars,
    tensor,
    verify_chain_map,
    verify_multiplicative,
)
from .symalg import (
    T1, T2, T, U, UG, XI1, XI2, XI,
    Element,
    Matrix,
    WordSum,
    gen_name,
    invert_word,
    mvar,
)

E1 = (1, 0)
E2 = (0, 1)


def add(x, y):
    return (x[0] + y[0], x[1] + y[1])


def sub(x, y):
    return (x[0] - y[0], x[1] - y[1])


class WindowError(ValueError):
    pass


@dataclass(frozen=True, order=True)
class Window:
    a: int
    b: int
    c: int
    d: int

    def __post_init__(self):
        if self.b - self.a < 2 or self.d - self.c < 2:
            raise WindowError(f"window {self} needs both sides of length >= 2")

    @classmethod
    def parse(cls, text):
        try:
            a, b, c, d = (int(p) for p in str(text).split(","))
        except ValueError as exc:
            raise WindowError(f"window must be 'a,b,c,d', got {text!r}") from exc
        return cls(a, b, c, d)

    def __str__(self):
        return f"[{self.a},{self.b}]x[{self.c},{self.d}]"

    def spec(self):
        return f"{self.a},{self.b},{self.c},{self.d}"

    def contains(self, other):
        return self.a <= other.a and other.b <= self.b and self.c <= other.c and other.d <= self.d

    def disjoint(self, other):
        return self.b < other.a or other.b < self.a or self.d < other.c or other.d < self.c

    def sites(self):
        return [(x1, x2) for x2 in range(self.c, self.d + 1) for x1 in range(self.a, self.b + 1)]

    def transposed(self):
        return Window(self.c, self.d, self.a, self.b)

    def reflected(self):
        return Window(self.a, self.b, -self.d, -self.c)


def box_sites(box):
    lo1, hi1, lo2, hi2 = box
    return [(x1, x2) for x2 in range(lo2, hi2 + 1) for x1 in range(lo1, hi1 + 1)]


def support_boxes(V, axis=None):
    """Support boxes (x1 range, x2 range) per generator kind."""
    a, b, c, d = V.a, V.b, V.c, V.d
    boxes = {
        XI1: (a, b - 1, c + 1, d - 1),
        XI2: (a + 1, b - 1, c, d - 1),
        XI: (a + 1, b - 1, c + 1, d - 1),
    }
    if axis is None:
        boxes[T1] = (a, b - 1, c, d)
        boxes[T2] = (a, b, c, d - 1)
    elif axis == 2:
        boxes[T] = (a, b - 1, c, d)
    elif axis == 1:
        boxes[T] = (a, b, c, d - 1)
    else:
        raise ValueError(f"axis must be 1 or 2, got {axis}")
    return boxes


def gauge_indices(V, axis=None):
    if axis is None:
        return V.sites()
    if axis == 2:
        return list(range(V.a, V.b + 1))
    return list(range(V.c, V.d + 1))


def gauge_mv(axis, x, slot=1):
    """Matrix variable of the gauge transformation acting at site x."""
    if axis is None:
        return mvar(U, x[0], x[1], slot)
    return mvar(UG, x[0] if axis == 2 else x[1], 0, slot)


def gauge_mv_index(k, slot=1):
    return mvar(UG, k, 0, slot)


# ---------------------------------------------------------------------------
# gauge Hopf algebras


@dataclass(eq=False)
class HopfData:
    algebra: DGAlgebra
    delta: DGMorphism
    counit: DGMorphism
    antipode: DGMorphism
    slot: int
    window: Window
    axis: int | None


def _gauge_mvars(V, axis, slot):
    if axis is None:
        return [mvar(U, x1, x2, slot) for (x1, x2) in V.sites()]
    return [gauge_mv_index(k, slot) for k in gauge_indices(V, axis)]


def shift_slot(mv, slot):
    return (slot,) + mv[1:]


@lru_cache(maxsize=None)
def gauge_algebra(V, n, axis=None, slot=1):
    name = ("O(G)" if axis is None else f"O(Ggf{axis})") + f"[{V}]@{slot}"
    return DGAlgebra(n, _gauge_mvars(V, axis, slot), {}, name=name)


@lru_cache(maxsize=None)
def build_gauge_algebra(V, n, axis=None, slot=1):
    G = gauge_algebra(V, n, axis, slot)
    G2 = gauge_algebra(V, n, axis, slot + 1)
    GG = tensor(G, G2)
    delta = DGMorphism.from_rule(
        G, GG, lambda mv: Matrix.from_word(((mv, 1, False), (shift_slot(mv, slot + 1), 1, False)), n), name="Delta")
    counit = DGMorphism.from_rule(G, scalars(n), lambda mv: Matrix.identity(n), name="eps")
    antipode = DGMorphism.from_rule(G, G, lambda mv: Matrix.from_word(((mv, -1, False),), n), name="S")
    return HopfData(G, delta, counit, antipode, slot, V, axis)


def verify_hopf(hopf, report=None):
    """Hopf axioms on generators, evaluated entrywise (no word shortcuts)."""
    report = report if report is not None else Report()
    G, n, s = hopf.algebra, hopf.algebra.n, hopf.slot
    V, axis = hopf.window, hopf.axis
    G2 = gauge_algebra(V, n, axis, s + 1)
    G3 = gauge_algebra(V, n, axis, s + 2)
    G123 = tensor(tensor(G, G2), G3)
    GG = hopf.delta.target
    w = lambda *letters: Matrix.from_word(letters, n)
    # (Delta (x) id) and (id (x) Delta) on G (x) G2
    d_left = DGMorphism.from_rule(GG, G123, lambda mv: w((mv, 1, False), (shift_slot(mv, s + 1), 1, False))
                                  if mv[0] == s else w((shift_slot(mv, s + 2), 1, False),), name="Delta(x)id")
    d_right = DGMorphism.from_rule(GG, G123, lambda mv: w((mv, 1, False),) if mv[0] == s
                                   else w((mv, 1, False), (shift_slot(mv, s + 2), 1, False)), name="id(x)Delta")
    eps_left = DGMorphism.from_rule(GG, G, lambda mv: Matrix.identity(n) if mv[0] == s
                                    else w((shift_slot(mv, s), 1, False),), name="eps(x)id")
    eps_right = DGMorphism.from_rule(GG, G, lambda mv: w((mv, 1, False),) if mv[0] == s
                                     else Matrix.identity(n), name="id(x)eps")
    mult_s_left = DGMorphism.from_rule(GG, G, lambda mv: w((mv, -1, False),) if mv[0] == s
                                       else w((shift_slot(mv, s), 1, False),), name="m(S(x)id)")
    mult_s_right = DGMorphism.from_rule(GG, G, lambda mv: w((mv, 1, False),) if mv[0] == s
                                        else w((shift_slot(mv, s), -1, False),), name="m(id(x)S)")
    tag = f"{G.name} n={n}"
    for mv in G.sorted_mvars():
        dm = hopf.delta.table[mv]
        compare(report, "hopf-coassociativity", f"{tag}: {gen_name(mv)}",
                apply_entries(d_left, dm), apply_entries(d_right, dm))
        gm = Matrix.gen(mv, n)
        compare(report, "hopf-counit-left", f"{tag}: {gen_name(mv)}", apply_entries(eps_left, dm), gm)
        compare(report, "hopf-counit-right", f"{tag}: {gen_name(mv)}", apply_entries(eps_right, dm), gm)
        one = Matrix.identity(n)
        compare(report, "hopf-antipode-left", f"{tag}: {gen_name(mv)}", apply_entries(mult_s_left, dm), one)
        compare(report, "hopf-antipode-right", f"{tag}: {gen_name(mv)}", apply_entries(mult_s_right, dm), one)
        compare(report, "hopf-eps-S", f"{tag}: {gen_name(mv)}",
                apply_entries(hopf.counit, hopf.antipode.table[mv]), one)
    return report


def apply_entries(f, m):
    """Apply a morphism entry by entry, bypassing certificate words."""
    return Matrix([[f.apply(e) for e in r] for r in m.rows])


# ---------------------------------------------------------------------------
# dCrit models


@dataclass(eq=False)
class LatticeModel:
    n: int
    window: Window
    axis: int | None  # None: plain model; 1 or 2: the T_axis = 1 gauge
    algebra: DGAlgebra
    gauge: HopfData
    coaction: DGMorphism
    xbar: int
    coaction_exprs: dict | None = None

    @property
    def gauge_fixed(self):
        return self.axis is not None

    @property
    def label(self):
        kind = "plain" if self.axis is None else f"gf-axis{self.axis}"
        return f"{kind} {self.window} n={self.n}"

    def link_word(self, i, x):
        """Word of the parallel transport T_i(x) in this model."""
        if self.axis is None:
            return ((mvar(T1 if i == 1 else T2, x[0], x[1]), 1, False),)
        if self.axis == i:
            return ()
        return ((mvar(T, x[0], x[1]), 1, False),)

    def gauge_word(self, x, slot=1):
        return ((gauge_mv(self.axis, x, slot), 1, False),)

    def curvature_word(self, x):
        return curvature_word(self, x)

    def manifest(self):
        counts = {}
        for mv in self.algebra.mvars:
            name = gen_name(mv).split("(")[0]
            counts[name] = counts.get(name, 0) + 1
        boxes = {gen_name(mvar(k, 0)).split("(")[0]: list(v) for k, v in support_boxes(self.window, self.axis).items()}
        return {
            "n": self.n,
            "window": self.window.spec(),
            "axis": self.axis,
            "gauge_fixed": self.gauge_fixed,
            "reference_row": self.xbar,
            "generator_counts": dict(sorted(counts.items())),
            "support_boxes": dict(sorted(boxes.items())),
            "gauge_generators": len(self.gauge.algebra.mvars),
        }


def _plaquette_ok(model, x):
    V = model.window
    return V.a <= x[0] <= V.b - 1 and V.c <= x[1] <= V.d - 1


def curvature_word(model, x):
    if not _plaquette_ok(model, x):
        raise WindowError(f"plaquette {x} not inside {model.window}")
    return (invert_word(model.link_word(2, x)) + invert_word(model.link_word(1, add(x, E2)))
            + model.link_word(2, add(x, E1)) + model.link_word(1, x))


def curvature(model, x):
    return Matrix.from_word(curvature_word(model, x), model.n)


def _differentials(model):
    n = model.n
    V = model.window
    boxes = support_boxes(V, model.axis)
    gm = lambda kind, x: Matrix.gen(mvar(kind, *x), n)
    diff = {}
    for x in box_sites(boxes[XI1]):
        prev = sub(x, E2)
        L = model.link_word(2, prev)
        diff[mvar(XI1, *x)] = WordSum([(1, curvature_word(model, x), None, ()),
                                       (-1, L + curvature_word(model, prev) + invert_word(L), None, ())], n)
    for x in box_sites(boxes[XI2]):
        prev = sub(x, E1)
        L = model.link_word(1, prev)
        diff[mvar(XI2, *x)] = WordSum([(1, L + curvature_word(model, prev) + invert_word(L), None, ()),
                                       (-1, curvature_word(model, x), None, ())], n)
    for x in box_sites(boxes[XI]):
        p1, p2 = sub(x, E1), sub(x, E2)
        L1, L2 = model.link_word(1, p1), model.link_word(2, p2)
        diff[mvar(XI, *x)] = WordSum([(-1, (), gm(XI1, x), ()),
                                      (1, L1, gm(XI1, p1), invert_word(L1)),
                                      (-1, (), gm(XI2, x), ()),
                                      (1, L2, gm(XI2, p2), invert_word(L2))], n)
    return diff


def coaction_exprs(model, gauge_slot=1):
    """Structured coaction images: words for links, conjugation sums for the rest."""
    n = model.n
    out = {}
    for mv in model.algebra.mvars:
        x = (mv[2], mv[1])
        kind = mv[3]
        if kind in (T1, T2, T):
            i = 1 if kind == T1 or (kind == T and model.axis == 2) else 2
            step = E1 if i == 1 else E2
            word = (invert_word(model.gauge_word(add(x, step), gauge_slot)) + ((mv, 1, False),)
                    + model.gauge_word(x, gauge_slot))
            out[mv] = Matrix.from_word(word, n)
        else:
            g = model.gauge_word(x, gauge_slot)
            out[mv] = WordSum([(1, invert_word(g), Matrix.gen(mv, n), g)], n)
    return out


def _coaction_table(exprs):
    return {mv: e.expand() if isinstance(e, WordSum) else e for mv, e in exprs.items()}


@lru_cache(maxsize=None)
def _build_model(V, n, axis, xbar):
    if n < 1 or n > 3:
        raise ValueError(f"matrix size n must be in 1..3, got {n}")
    xbar = V.c if xbar is None else xbar
    boxes = support_boxes(V, axis)
    mvars = [mvar(kind, *x) for kind, box in sorted(boxes.items()) for x in box_sites(box)]
    name = ("O(Z)" if axis is None else f"O(Zgf{axis})") + f"[{V}]"
    shell = LatticeModel(n, V, axis, DGAlgebra(n, mvars, None, name=name, check=False), None, None, xbar)
    algebra = DGAlgebra(n, mvars, _differentials(shell), name=name)
    hopf = build_gauge_algebra(V, n, axis, 1)
    model = LatticeModel(n, V, axis, algebra, hopf, None, xbar)
    model.coaction_exprs = coaction_exprs(model)
    model.coaction = DGMorphism(algebra, tensor(algebra, hopf.algebra), _coaction_table(model.coaction_exprs),
                                name="rho")
    return model


def build_dcrit_algebra(V, n, xbar=None):
    return _build_model(V, n, None, xbar)


def build_dcrit_gf_algebra(V, n, axis=2, xbar=None):
    return _build_model(V, n, axis, xbar)


def build_model(V, n, axis=None, xbar=None):
    return _build_model(V, n, axis, xbar)


def wilson_action(model, sites):
    out = Element.zero(model.n)
    for x in sites:
        out = out + curvature(model, x).trace()
    return out


def plaquettes(V):
    return box_sites((V.a, V.b - 1, V.c, V.d - 1))


# ---------------------------------------------------------------------------
# Euler-Lagrange identification


def left_invariant_derivation(model, edge_mv, a, b):
    """Derivation D with D(T) = T * e_{ba} on the edge variable T and D = 0 on
    all other generators; D(det^-1) = -det^-2 D(det)."""
    n = model.n
    Tm = Matrix.gen(edge_mv, n)
    t = Element.det_inverse(edge_mv, n)
    dT = {}
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            dT[edge_mv + (i, j)] = Tm.rows[i - 1][b - 1] if j == a else Element.zero(n)
    # D(det T) via the Leibniz expansion
    dd = Element.zero(n)
    for r in range(n):
        rows = [list(row) for row in Tm.rows]
        rows[r] = [dT[edge_mv + (r + 1, j)] for j in range(1, n + 1)]
        dd = dd + Matrix(rows).uncertified().det()
    dt = -(t * t * dd)

    def D(x):
        out = Element.zero(n)
        for (comm, odd, dets), c in x.terms.items():
            for idx, (g, e) in enumerate(comm):
                if g in dT and dT[g].terms:
                    rest = comm[:idx] + (((g, e - 1),) if e > 1 else ()) + comm[idx + 1:]
                    out = out + Element({(rest, odd, dets): c * e}, n) * dT[g]
            for idx, (mv, k) in enumerate(dets):
                if mv == edge_mv:
                    rest = dets[:idx] + (((mv, k + 1),) if k < -1 else ()) + dets[idx + 1:]
                    out = out + Element.from_mono((comm, odd, rest), c * (-k), n) * dt
        return out

    return D


def el_residuals(model, x):
    """Explicit residual matrices for the two EL equations at x (plain model)."""
    n = model.n
    out = {}
    V = model.window
    b1 = support_boxes(V)[XI1]
    b2 = support_boxes(V)[XI2]
    if b1[0] <= x[0] <= b1[1] and b1[2] <= x[1] <= b1[3]:
        prev = sub(x, E2)
        T2m = Matrix.gen(mvar(T2, *prev), n)
        out[XI1] = (curvature(model, x).uncertified()
                    - _mm(_mm(T2m, curvature(model, prev)), T2m.inverse()))
    if b2[0] <= x[0] <= b2[1] and b2[2] <= x[1] <= b2[3]:
        prev = sub(x, E1)
        T1m = Matrix.gen(mvar(T1, *prev), n)
        out[XI2] = (_mm(_mm(T1m, curvature(model, prev)), T1m.inverse())
                    - curvature(model, x).uncertified())
    return out


def _mm(a, b):
    from .symalg import matmul_entries
    return matmul_entries(a, b)


def euler_lagrange_check(model, x, report=None):
    """Compare d(xi_i(x)) with the EL residuals and with the variation of the
    Wilson action over all plaquettes of the window."""
    if model.axis is not None:
        raise ValueError("the EL identification is stated for the plain model")
    report = report if report is not None else Report()
    n = model.n
    A = model.algebra
    action = None
    for kind, R in sorted(el_residuals(model, x).items()):
        mv = mvar(kind, *x)
        tag = f"{model.label}: {gen_name(mv)}"
        compare(report, "euler-lagrange-residual", tag, A.diff[mv], R)
        if action is None:
            action = wilson_action(model, plaquettes(model.window))
        edge = mvar(T1 if kind == XI1 else T2, *x)
        var = Matrix([[left_invariant_derivation(model, edge, a, b)(action) for b in range(1, n + 1)]
                      for a in range(1, n + 1)])
        compare(report, "euler-lagrange-variation", tag, A.diff[mv], var)
    return report


# ---------------------------------------------------------------------------
# coaction checks


def _level_algebra(model, k):
    A = model.algebra
    for s in range(1, k + 1):
        A = tensor(A, gauge_algebra(model.window, model.n, model.axis, s))
    return A


@lru_cache(maxsize=None)
def nerve_level(model, k):
    if k not in (0, 1, 2):
        raise ValueError("nerve levels above 2 are not supported")
    return _level_algebra(model, k)


def _gword(mv, p=1):
    return ((mv, p, False),)


@lru_cache(maxsize=None)
def face(model, k, i):
    """Pullback of the i-th face X_k -> X_{k-1}: O(X_{k-1}) -> O(X_k)."""
    n = model.n
    src, tgt = nerve_level(model, k - 1), nerve_level(model, k)
    rho = model.coaction

    def rule(mv):
        s = mv[0]
        if s == 0:
            if i == 0:
                return rho.table[mv]
            return Matrix.gen(mv, n)
        # gauge slot s (1..k-1)
        if i == 0:
            return Matrix.from_word(_gword(shift_slot(mv, s + 1)), n)
        if i == s:
            return Matrix.from_word(_gword(mv) + _gword(shift_slot(mv, s + 1)), n)
        if i < s:
            return Matrix.from_word(_gword(shift_slot(mv, s + 1)), n)
        return Matrix.gen(mv, n)

    return DGMorphism.from_rule(src, tgt, rule, name=f"d{i}*[{k}]")


@lru_cache(maxsize=None)
def degeneracy(model, k, i):
    """Pullback of the i-th degeneracy X_k -> X_{k+1}: O(X_{k+1}) -> O(X_k)."""
    n = model.n
    src, tgt = nerve_level(model, k + 1), nerve_level(model, k)

    def rule(mv):
        s = mv[0]
        if s == 0 or s <= i:
            return Matrix.gen(mv, n)
        if s == i + 1:
            return Matrix.identity(n)
        return Matrix.from_word(_gword(shift_slot(mv, s - 1)), n)

    return DGMorphism.from_rule(src, tgt, rule, name=f"s{i}*[{k}]")


def _pullback_path(maps, mv, n):
    """Image of a generator under a sequence of pullbacks applied in order."""
    m = maps[0].table[mv]
    for f in maps[1:]:
        m = apply_entries(f, m)
    return m


def verify_simplicial_identities(model, report=None):
    report = report if report is not None else Report()
    n = model.n
    tag = model.label
    X0, X1 = nerve_level(model, 0), nerve_level(model, 1)
    # faces X_2 -> X_0
    for i in range(2):
        for j in range(i + 1, 3):
            for mv in X0.sorted_mvars():
                lhs = _pullback_path([face(model, 1, i), face(model, 2, j)], mv, n)
                rhs = _pullback_path([face(model, 1, j - 1), face(model, 2, i)], mv, n)
                compare(report, "simplicial-faces", f"{tag}: d{i}d{j}=d{j - 1}d{i} on {gen_name(mv)}", lhs, rhs)
    # X_0 -> X_1 -> X_0
    for i in range(2):
        for mv in X0.sorted_mvars():
            compare(report, "simplicial-degeneracy", f"{tag}: d{i}s0=id on {gen_name(mv)}",
                    _pullback_path([face(model, 1, i), degeneracy(model, 0, 0)], mv, n), Matrix.gen(mv, n))
    # X_1 -> X_2 -> X_1
    for i in range(3):
        for j in range(2):
            for mv in X1.sorted_mvars():
                lhs = _pullback_path([face(model, 2, i), degeneracy(model, 1, j)], mv, n)
                if i < j:
                    rhs = _pullback_path([degeneracy(model, 0, j - 1), face(model, 1, i)], mv, n)
                    label = f"d{i}s{j}=s{j - 1}d{i}"
                elif i in (j, j + 1):
                    rhs = Matrix.gen(mv, n)
                    label = f"d{i}s{j}=id"
                else:
                    rhs = _pullback_path([degeneracy(model, 0, j), face(model, 1, i - 1)], mv, n)
                    label = f"d{i}s{j}=s{j}d{i - 1}"
                compare(report, "simplicial-degeneracy", f"{tag}: {label} on {gen_name(mv)}", lhs, rhs)
    # X_0 -> X_2
    for mv in nerve_level(model, 2).sorted_mvars():
        lhs = _pullback_path([degeneracy(model, 1, 0), degeneracy(model, 0, 0)], mv, n)
        rhs = _pullback_path([degeneracy(model, 1, 1), degeneracy(model, 0, 0)], mv, n)
        compare(report, "simplicial-degeneracy", f"{tag}: s0s0=s1s0 on {gen_name(mv)}", lhs, rhs)
    for k, i in ((1, 0), (1, 1), (2, 0), (2, 1), (2, 2)):
        verify_chain_map(face(model, k, i), report, instance=f"{tag}: d{i}*[{k}]")
    return report


def sample_pairs(gens, n, rng, count):
    out = []
    for _ in range(count):
        a = Element.gen(rng.choice(gens), n)
        b = Element.gen(rng.choice(gens), n)
        out.append((a, b))
    return out


def verify_coaction(model, report=None, seed=0, samples=10):
    report = report if report is not None else Report()
    n = model.n
    tag = model.label
    rho = model.coaction
    rho_id = face(model, 2, 0)  # (rho (x) id)
    id_delta = face(model, 2, 1)  # (id (x) Delta)
    counit = degeneracy(model, 0, 0)  # (id (x) eps)
    for mv in model.algebra.sorted_mvars():
        r = rho.table[mv]
        compare(report, "coaction-coassociativity", f"{tag}: {gen_name(mv)}",
                apply_entries(rho_id, r), apply_entries(id_delta, r))
        compare(report, "coaction-counit", f"{tag}: {gen_name(mv)}", apply_entries(counit, r), Matrix.gen(mv, n))
    verify_chain_map(rho, report, instance=f"{tag}: rho")
    rng = random.Random(seed)
    verify_multiplicative(rho, sample_pairs(model.algebra.gens(), n, rng, samples), report, instance=f"{tag}: rho")
    return report


def verify_gauge_invariance(model, report=None):
    report = report if report is not None else Report()
    for x in plaquettes(model.window):
        tr = curvature(model, x).trace()
        compare(report, "gauge-invariance", f"{model.label}: Tr E{x}", model.coaction.apply(tr), tr)
    return report
