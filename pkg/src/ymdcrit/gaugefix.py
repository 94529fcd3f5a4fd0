"""Axial-gauge comparison between the plain model and the T2 = 1 model."""
from __future__ import annotations

from dataclasses import dataclass

from .dgcore import DGMorphism, Report, apply_structured, compare, verify_chain_map
from .lattice import (
    E1,
    E2,
    HopfData,
    LatticeModel,
    Window,
    WindowError,
    add,
    apply_entries,
    build_dcrit_algebra,
    build_dcrit_gf_algebra,
    gauge_algebra,
    shift_slot,
)
from .symalg import T1, T2, T, U, UG, Matrix, WordSum, gen_name, invert_word, matmul_entries, mvar


def hat_T_word(model, x, xbar=None):
    """Word of the vertical transport from (x1, xbar) up (or down) to x."""
    V = model.window
    xbar = model.xbar if xbar is None else xbar
    x1, x2 = x
    if not (V.a <= x1 <= V.b and V.c <= x2 <= V.d and V.c <= xbar <= V.d):
        raise WindowError(f"transport to {x} from row {xbar} leaves {V}")
    if x2 >= xbar:
        return tuple((mvar(T2, x1, k), 1, False) for k in range(x2 - 1, xbar - 1, -1))
    return tuple((mvar(T2, x1, k), -1, False) for k in range(x2, xbar))


def hat_T(model, x, xbar=None):
    return Matrix.from_word(hat_T_word(model, x, xbar), model.n)


@dataclass(eq=False)
class GaugeFixPair:
    plain: LatticeModel
    gf: LatticeModel
    j_star: DGMorphism
    j_under: DGMorphism
    pi_star: DGMorphism
    pi_under: DGMorphism
    xbar: int
    pi_exprs: dict

    @property
    def label(self):
        return f"{self.plain.window} n={self.plain.n} xbar={self.xbar}"


def build_pair(V, n, xbar=None):
    xbar = V.c if xbar is None else xbar
    if not V.c <= xbar <= V.d:
        raise WindowError(f"reference row {xbar} outside [{V.c},{V.d}]")
    plain = build_dcrit_algebra(V, n, xbar)
    gf = build_dcrit_gf_algebra(V, n, 2, xbar)
    w = lambda word: Matrix.from_word(word, n)

    def j_rule(mv):
        kind = mv[3]
        if kind == T1:
            return w(((mvar(T, mv[2], mv[1]), 1, False),))
        if kind == T2:
            return Matrix.identity(n)
        return Matrix.gen(mv, n)

    j_star = DGMorphism.from_rule(plain.algebra, gf.algebra, j_rule, name="j*")

    pi_exprs = {}
    for mv in gf.algebra.mvars:
        x = (mv[2], mv[1])
        h = hat_T_word(plain, x, xbar)
        if mv[3] == T:
            pi_exprs[mv] = w(invert_word(hat_T_word(plain, add(x, E1), xbar)) + ((mvar(T1, *x), 1, False),) + h)
        else:
            pi_exprs[mv] = WordSum([(1, invert_word(h), Matrix.gen(mv, n), h)], n)
    pi_star = DGMorphism(gf.algebra, plain.algebra,
                         {mv: e.expand() if isinstance(e, WordSum) else e for mv, e in pi_exprs.items()}, name="pi*")
    G, Ggf = plain.gauge.algebra, gf.gauge.algebra
    j_under = DGMorphism.from_rule(G, Ggf, lambda mv: w(((mvar(UG, mv[2], 0, mv[0]), 1, False),)), name="j_*")
    pi_under = DGMorphism.from_rule(Ggf, G, lambda mv: w(((mvar(U, mv[2], xbar, mv[0]), 1, False),)), name="pi_*")
    return GaugeFixPair(plain, gf, j_star, j_under, pi_star, pi_under, xbar, pi_exprs)


def _hopf_pair_morphism(f, src_hopf, tgt_hopf, n):
    """f (x) f on the tensor squares of the gauge algebras."""
    s = src_hopf.slot
    src2 = src_hopf.delta.target
    tgt2 = tgt_hopf.delta.target

    def rule(mv):
        if mv[0] == s:
            return f.table[mv]
        img = f.table[shift_slot(mv, s)]
        return Matrix.from_word(tuple((shift_slot(m, s + 1), p, tr) for m, p, tr in img.word), n)

    return DGMorphism.from_rule(src2, tgt2, rule, name=f"{f.name}(x){f.name}")


def verify_hopf_morphism(f, src_hopf, tgt_hopf, report=None, instance=None):
    report = report if report is not None else Report()
    n = f.source.n
    ff = _hopf_pair_morphism(f, src_hopf, tgt_hopf, n)
    for mv in f.source.sorted_mvars():
        tag = f"{instance or f.name}: {gen_name(mv)}"
        compare(report, "hopf-morphism-delta", tag,
                apply_entries(tgt_hopf.delta, f.table[mv]), apply_entries(ff, src_hopf.delta.table[mv]))
        compare(report, "hopf-morphism-counit", tag,
                apply_entries(tgt_hopf.counit, f.table[mv]), src_hopf.counit.table[mv])
        compare(report, "hopf-morphism-antipode", tag,
                apply_entries(tgt_hopf.antipode, f.table[mv]), apply_entries(f, src_hopf.antipode.table[mv]))
    return report


def verify_hatT_transformation(pair, report=None):
    report = report if report is not None else Report()
    model, n, xbar = pair.plain, pair.plain.n, pair.xbar
    rho = model.coaction
    for x in model.window.sites():
        h = hat_T(model, x, xbar)
        lhs = apply_structured(rho, h)
        Ux = Matrix.gen(mvar(U, x[0], x[1], 1), n)
        Ubar = Matrix.gen(mvar(U, x[0], xbar, 1), n)
        rhs = matmul_entries(matmul_entries(Ux.inverse(), h), Ubar)
        compare(report, "hatT-transformation", f"{pair.label}: x={x}", lhs, rhs)
        if x[1] >= xbar and x[1] < model.window.d:
            up = hat_T(model, add(x, E2), xbar)
            compare(report, "hatT-concatenation", f"{pair.label}: x={x}", up,
                    matmul_entries(Matrix.gen(mvar(T2, *x), n), h))
    return report


def verify_pair_maps(pair, report=None):
    report = report if report is not None else Report()
    verify_chain_map(pair.j_star, report, instance=f"{pair.label}: j*")
    verify_chain_map(pair.pi_star, report, instance=f"{pair.label}: pi*")
    verify_hopf_morphism(pair.j_under, pair.plain.gauge, pair.gf.gauge, report, instance=f"{pair.label}: j_*")
    verify_hopf_morphism(pair.pi_under, pair.gf.gauge, pair.plain.gauge, report, instance=f"{pair.label}: pi_*")
    return report


def verify_equivariance(pair, report=None):
    report = report if report is not None else Report()
    plain, gf = pair.plain, pair.gf
    jj = DGMorphism(plain.coaction.target, gf.coaction.target, {**pair.j_star.table, **pair.j_under.table}, name="j*(x)j_*")
    pp = DGMorphism(gf.coaction.target, plain.coaction.target, {**pair.pi_star.table, **pair.pi_under.table},
                    name="pi*(x)pi_*")
    for mv in plain.algebra.sorted_mvars():
        compare(report, "equivariance-j", f"{pair.label}: {gen_name(mv)}",
                apply_structured(gf.coaction, pair.j_star.table[mv]), apply_structured(jj, plain.coaction_exprs[mv]))
    for mv in gf.algebra.sorted_mvars():
        compare(report, "equivariance-pi", f"{pair.label}: {gen_name(mv)}",
                apply_structured(plain.coaction, pair.pi_exprs[mv]), apply_structured(pp, gf.coaction_exprs[mv]))
    return report


def expected_round_trip(pair, mv):
    """Entry-level value of the composite plain -> gf -> plain on a generator."""
    model, n, xbar = pair.plain, pair.plain.n, pair.xbar
    x = (mv[2], mv[1])
    h = hat_T(model, x, xbar)
    g = Matrix.gen(mv, n).uncertified()
    if mv[3] == T1:
        left = hat_T(model, add(x, E1), xbar).inverse()
    elif mv[3] == T2:
        left = hat_T(model, add(x, E2), xbar).inverse()
    else:
        left = h.inverse()
    return matmul_entries(matmul_entries(left, g), h)


def eta_hat(pair):
    """O(Z) (x) O(G) -> O(Z): identity on O(Z), U(x) -> hatT(x)."""
    plain, n = pair.plain, pair.plain.n
    table = {mv: Matrix.gen(mv, n) for mv in plain.algebra.mvars}
    for mv in plain.gauge.algebra.mvars:
        table[mv] = hat_T(plain, (mv[2], mv[1]), pair.xbar)
    return DGMorphism(plain.coaction.target, plain.algebra, table, name="eta^*")


def verify_quasi_inverse(pair, report=None):
    report = report if report is not None else Report()
    plain, gf, n, xbar = pair.plain, pair.gf, pair.plain.n, pair.xbar
    tag = pair.label
    # (i) the gauge-fixed side is a retract
    for mv in gf.algebra.sorted_mvars():
        compare(report, "pi-after-j-identity", f"{tag}: {gen_name(mv)}",
                apply_structured(pair.j_star, pair.pi_exprs[mv]), Matrix.gen(mv, n))
    for mv in gf.gauge.algebra.sorted_mvars():
        compare(report, "pi-after-j-identity-gauge", f"{tag}: {gen_name(mv)}",
                apply_entries(pair.j_under, pair.pi_under.table[mv]), Matrix.gen(mv, n))
    # (ii) composite table on the plain side
    for mv in plain.algebra.sorted_mvars():
        lhs = apply_entries(pair.pi_star, pair.j_star.table[mv])
        compare(report, "j-after-pi-table", f"{tag}: {gen_name(mv)}", lhs, expected_round_trip(pair, mv))
        if mv[3] == T2:
            compare(report, "j-after-pi-table", f"{tag}: {gen_name(mv)} is 1", lhs, Matrix.identity(n))
    # (iii) triangles for eta
    eta = eta_hat(pair)
    for mv in plain.algebra.sorted_mvars():
        compare(report, "eta-projection-triangle", f"{tag}: {gen_name(mv)}",
                apply_entries(eta, Matrix.gen(mv, n)), Matrix.gen(mv, n))
        compare(report, "eta-action-triangle", f"{tag}: {gen_name(mv)}",
                apply_structured(eta, plain.coaction_exprs[mv]), apply_entries(pair.pi_star, pair.j_star.table[mv]))
    # (iv) naturality square, evaluated with explicit matrix products
    for mv in plain.gauge.algebra.sorted_mvars():
        x = (mv[2], mv[1])
        h = hat_T(plain, x, xbar)
        Ubar = Matrix.gen(mvar(U, x[0], xbar, 1), n)
        upper = matmul_entries(h, Ubar)
        lower = matmul_entries(Matrix.gen(mv, n), apply_structured(plain.coaction, h))
        compare(report, "eta-naturality", f"{tag}: {gen_name(mv)}", upper, lower)
    return report


def verify_choice_independence(V, n, rows=None, report=None):
    report = report if report is not None else Report()
    for xbar in rows or (V.c, V.c + 1):
        pair = build_pair(V, n, xbar)
        for mv in pair.gf.algebra.sorted_mvars():
            compare(report, "pi-after-j-identity", f"{pair.label}: {gen_name(mv)}",
                    apply_structured(pair.j_star, pair.pi_exprs[mv]), Matrix.gen(mv, n))
    return report


def verify_axial(V, n, xbar=None, report=None):
    report = report if report is not None else Report()
    pair = build_pair(V, n, xbar)
    verify_pair_maps(pair, report)
    verify_hatT_transformation(pair, report)
    verify_equivariance(pair, report)
    verify_quasi_inverse(pair, report)
    return report
