"""Rectangular multi-operations on Z^2 and the structure maps they induce on
model algebras and on finite-rank equivariant dg-modules."""
from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from .dgcore import (
    DGAlgebra,
    DGMorphism,
    Report,
    apply_structured,
    compare,
    compose,
    identity_morphism,
    morphisms_equal,
    scalars,
    tensor,
    tensor_morphism,
    verify_chain_map,
)
from .lattice import (
    Window,
    WindowError,
    build_model,
    curvature,
    gauge_algebra,
    plaquettes,
    shift_slot,
)
from .localconst import Inclusion, local_constancy_chain
from .symalg import T1, T2, T, U, XI1, Element, Matrix, gen_name, mvar


class OperationError(ValueError):
    pass


class ModuleError(ValueError):
    pass


# ---------------------------------------------------------------------------
# the operad


def operation_exists(inputs, output):
    """Inputs pairwise disjoint and all contained in the output."""
    if not all(output.contains(v) for v in inputs):
        return False
    return all(inputs[i].disjoint(inputs[j]) for i in range(len(inputs)) for j in range(i + 1, len(inputs)))


@dataclass(frozen=True)
class MultiOperation:
    inputs: tuple
    output: Window

    def __post_init__(self):
        object.__setattr__(self, "inputs", tuple(self.inputs))
        if not operation_exists(self.inputs, self.output):
            raise OperationError(f"no operation {self}")

    @property
    def arity(self):
        return len(self.inputs)

    @classmethod
    def identity(cls, V):
        return cls((V,), V)

    def permute(self, sigma):
        """Right action: slot i of the result is slot sigma[i] of self."""
        if sorted(sigma) != list(range(self.arity)):
            raise OperationError(f"{sigma} is not a permutation of {self.arity} slots")
        return MultiOperation(tuple(self.inputs[s] for s in sigma), self.output)

    def __str__(self):
        return "(" + ", ".join(str(v) for v in self.inputs) + f") -> {self.output}"


def compose_operations(outer, inners):
    if len(inners) != outer.arity:
        raise OperationError(f"arity mismatch: {outer.arity} slots, {len(inners)} operations")
    for slot, (v, op) in enumerate(zip(outer.inputs, inners)):
        if op.output != v:
            raise OperationError(f"slot {slot}: {op.output} does not match {v}")
    return MultiOperation(tuple(w for op in inners for w in op.inputs), outer.output)


def block_permutation(sigma, arities):
    """The permutation of flattened inputs induced by permuting blocks."""
    offsets = [0]
    for a in arities:
        offsets.append(offsets[-1] + a)
    return [offsets[s] + j for s in sigma for j in range(arities[s])]


def random_window(rng, bound, max_side=4):
    l1 = rng.randint(2, min(max_side, bound.b - bound.a))
    l2 = rng.randint(2, min(max_side, bound.d - bound.c))
    a = rng.randint(bound.a, bound.b - l1)
    c = rng.randint(bound.c, bound.d - l2)
    return Window(a, a + l1, c, c + l2)


def random_operation(rng, output, max_arity=3, max_side=4, tries=30, min_arity=0):
    arity = rng.randint(min_arity, max_arity)
    inputs = []
    for _ in range(tries):
        if len(inputs) == arity:
            break
        w = random_window(rng, output, max_side)
        if all(w.disjoint(v) for v in inputs):
            inputs.append(w)
    rng.shuffle(inputs)
    return MultiOperation(tuple(inputs), output)


def _operad_instance(rng, bound):
    outer_win = random_window(rng, bound, max_side=bound.b - bound.a)
    phi = random_operation(rng, outer_win, max_side=6)
    psis = [random_operation(rng, v, max_side=3) for v in phi.inputs]
    chis = [[random_operation(rng, w, max_side=2) for w in psi.inputs] for psi in psis]
    return phi, psis, chis


def verify_operad_axioms(count=1000, seed=0, bound=Window(-8, 8, -8, 8), report=None):
    """Associativity, unit laws and permutation equivariance on seeded instances."""
    report = report if report is not None else Report()
    rng = random.Random(f"operad:{seed}")
    for k in range(count):
        phi, psis, chis = _operad_instance(rng, bound)
        bad = []
        left = compose_operations(compose_operations(phi, psis), [c for row in chis for c in row])
        right = compose_operations(phi, [compose_operations(p, row) for p, row in zip(psis, chis)])
        if left != right:
            bad.append("associativity")
        if compose_operations(MultiOperation.identity(phi.output), [phi]) != phi:
            bad.append("left unit")
        if compose_operations(phi, [MultiOperation.identity(v) for v in phi.inputs]) != phi:
            bad.append("right unit")
        sigma = list(range(phi.arity))
        rng.shuffle(sigma)
        lhs = compose_operations(phi.permute(sigma), [psis[s] for s in sigma])
        rhs = compose_operations(phi, psis).permute(block_permutation(sigma, [p.arity for p in psis]))
        if lhs != rhs:
            bad.append("equivariance")
        report.add("operad-axioms", f"seed={seed} instance {k}: arity {phi.arity}", not bad,
                   f"{', '.join(bad)} for {phi}" if bad else None)
    return report


# ---------------------------------------------------------------------------
# structure maps on model algebras


@lru_cache(maxsize=None)
def input_algebra(inputs, n, axis=None):
    if not inputs:
        return scalars(n)
    alg = build_model(inputs[0], n, axis).algebra
    for v in inputs[1:]:
        alg = tensor(alg, build_model(v, n, axis).algebra)
    return alg


def F_algebra_on_operation(op, n, axis=None):
    """Tensor of the input algebras into the output algebra, identity on generators."""
    src = input_algebra(op.inputs, n, axis)
    tgt = build_model(op.output, n, axis).algebra
    return DGMorphism.from_rule(src, tgt, lambda mv: Matrix.gen(mv, n), name=f"F[{op}]")


def verify_F_structure(op, n, axis=None, report=None):
    """Chain map and coaction compatibility of the structure map."""
    report = report if report is not None else Report()
    f = F_algebra_on_operation(op, n, axis)
    out = build_model(op.output, n, axis)
    verify_chain_map(f, report, instance=f"F[{op}] n={n}")
    for v in op.inputs:
        inner = build_model(v, n, axis)
        missing = inner.gauge.algebra.mvars - out.gauge.algebra.mvars
        report.add("F-gauge-inclusion", f"{v} in {op.output}", not missing)
        for mv in inner.algebra.sorted_mvars():
            compare(report, "F-coaction", f"F[{op}] n={n}: {gen_name(mv)}",
                    apply_structured(out.coaction, f.table[mv]), inner.coaction.table[mv])
    return report


def random_tree(rng, output, depth, max_arity=2, max_side=5):
    """(operation, children); a child is None (identity) or a subtree."""
    op = random_operation(rng, output, max_arity, max_side, min_arity=1 if depth > 1 else 0)
    children = []
    for v in op.inputs:
        if depth > 1 and rng.random() < 0.8:
            children.append(random_tree(rng, v, depth - 1, max_arity, max(2, max_side - 1)))
        else:
            children.append(None)
    return op, children


def tree_depth(tree):
    op, children = tree
    return 1 + max((tree_depth(c) for c in children if c is not None), default=0)


def flatten_tree(tree):
    op, children = tree
    inners = [MultiOperation.identity(v) if c is None else flatten_tree(c) for v, c in zip(op.inputs, children)]
    return compose_operations(op, inners)


def F_tree(tree, n, axis=None):
    """F(op) after the tensor of the children's structure maps."""
    op, children = tree
    maps = []
    for v, c in zip(op.inputs, children):
        maps.append(identity_morphism(build_model(v, n, axis).algebra) if c is None else F_tree(c, n, axis))
    leaves = flatten_tree(tree).inputs
    inner = tensor_morphism(maps, input_algebra(leaves, n, axis), input_algebra(op.inputs, n, axis),
                            name="(x)F")
    return compose(F_algebra_on_operation(op, n, axis), inner)


def verify_multifunctoriality(count=200, seed=0, n=1, bound=Window(0, 9, 0, 9), depth=3, report=None):
    report = report if report is not None else Report()
    rng = random.Random(f"pfa:{seed}")
    for k in range(count):
        tree = random_tree(rng, bound, depth)
        flat = flatten_tree(tree)
        sub = morphisms_equal(F_tree(tree, n), F_algebra_on_operation(flat, n), Report(), "F-multifunctoriality")
        bad = sub.failures()
        report.add("F-multifunctoriality", f"seed={seed} tree {k}: depth {tree_depth(tree)} arity {flat.arity}",
                   not bad, f"{bad[0].instance}: {bad[0].counterexample}" if bad else None)
    return report


def local_constancy_hook(op, n, sample_count=20, seed=0, report=None):
    """Attach the retract certificates of a 1-ary operation's primitive steps."""
    report = report if report is not None else Report()
    if op.arity != 1:
        return report
    inc = Inclusion(op.inputs[0], op.output)
    local_constancy_chain(inc, n, sample_count, seed, report)
    report.note("F-weak-equivalence", f"F[{op}] n={n}: quasi-equivalence of module categories")
    return report


# ---------------------------------------------------------------------------
# equivariant dg-modules


def _zero(n):
    return Element.zero(n)


def _one(n):
    return Element.scalar(1, n)


@dataclass(eq=False)
class EquivariantDGModule:
    """Free module on a graded basis with differential matrix D and coaction C.

    d(e_j) = sum_i D[i][j] e_i and rho(e_j) = sum_i e_i (x) C[i][j].
    """

    model: object
    degrees: tuple
    D: tuple
    C: tuple
    name: str = "M"

    def __post_init__(self):
        r = len(self.degrees)
        self.degrees = tuple(self.degrees)
        self.D = tuple(tuple(row) for row in self.D)
        self.C = tuple(tuple(row) for row in self.C)
        for M, label in ((self.D, "differential"), (self.C, "coaction")):
            if len(M) != r or any(len(row) != r for row in M):
                raise ModuleError(f"{self.name}: {label} matrix is not {r}x{r}")
        alg, gauge = self.model.algebra.mvars, self.model.gauge.algebra.mvars
        for row in self.D:
            for e in row:
                if not e.mvars() <= alg:
                    raise ModuleError(f"{self.name}: differential entry outside {self.model.algebra.name}")
        for row in self.C:
            for e in row:
                if not e.mvars() <= gauge:
                    raise ModuleError(f"{self.name}: coaction entry outside {self.model.gauge.algebra.name}")

    @property
    def rank(self):
        return len(self.degrees)

    @property
    def n(self):
        return self.model.n

    def manifest(self):
        return {
            "name": self.name,
            "base": self.model.label,
            "rank": self.rank,
            "degrees": list(self.degrees),
            "differential": [[e.dump() for e in row] for row in self.D],
            "coaction": [[e.dump() for e in row] for row in self.C],
        }


def unit_object(model):
    n = model.n
    return EquivariantDGModule(model, (0,), ((_zero(n),),), ((_one(n),),), name=f"1[{model.window}]")


def _entry_degree_ok(e, expected):
    ds = e.degrees()
    return not ds or ds == {expected}


def verify_module_axioms(M, report=None):
    report = report if report is not None else Report()
    n, r, deg = M.n, M.rank, M.degrees
    A = M.model.algebra
    hopf = M.model.gauge
    tag = M.name
    shift = DGMorphism.from_rule(hopf.algebra, gauge_algebra(hopf.window, n, hopf.axis, hopf.slot + 1),
                                 lambda mv: Matrix.gen(shift_slot(mv, hopf.slot + 1), n), name="slot+1")
    rho = M.model.coaction
    rho_D = [[rho.apply(e) for e in row] for row in M.D]
    for i, j in itertools.product(range(r), range(r)):
        e = M.D[i][j]
        ok = _entry_degree_ok(e, deg[j] - deg[i] + 1)
        report.add("module-degree", f"{tag}: D[{i + 1},{j + 1}]", ok, None if ok else f"degrees {sorted(e.degrees())}")
        c = M.C[i][j]
        ok = not c.terms or deg[i] == deg[j]
        report.add("coaction-module-compatibility", f"{tag}: C[{i + 1},{j + 1}]", ok,
                   None if ok else f"links degrees {deg[i]} and {deg[j]}")
    for k, j in itertools.product(range(r), range(r)):
        acc = A.d(M.D[k][j])
        for i in range(r):
            dij = M.D[i][j]
            if dij.terms:
                term = dij * M.D[k][i]
                acc = acc + (term if not (deg[j] - deg[i] + 1) & 1 else -term)
        compare(report, "module-d-squared", f"{tag}: ({k + 1},{j + 1})", acc, _zero(n))
        # comodule axioms
        eps = hopf.counit.apply(M.C[k][j])
        compare(report, "comodule-counit", f"{tag}: C[{k + 1},{j + 1}]", eps, Element.scalar(int(k == j), n))
        lhs = hopf.delta.apply(M.C[k][j])
        rhs = _zero(n)
        for i in range(r):
            rhs = rhs + M.C[k][i] * shift.apply(M.C[i][j])
        compare(report, "comodule-coassociativity", f"{tag}: C[{k + 1},{j + 1}]", lhs, rhs)
        # rho_M(d e_j) = (d (x) id) rho_M(e_j)
        lhs = _zero(n)
        rhs = _zero(n)
        for i in range(r):
            lhs = lhs + rho_D[i][j] * M.C[k][i]
            rhs = rhs + M.D[k][i] * M.C[i][j]
        compare(report, "differential-equivariance", f"{tag}: ({k + 1},{j + 1})", lhs, rhs)
    return report


# ---------------------------------------------------------------------------
# module maps


@dataclass(eq=False)
class ModuleMap:
    """K(e_j) = sum_i K[i][j] f_i, homogeneous of the given degree."""

    source: EquivariantDGModule
    target: EquivariantDGModule
    K: tuple
    degree: int = 0
    equivariant: bool = True

    def __post_init__(self):
        if self.source.model is not self.target.model:
            raise ModuleError("module maps need a common base")
        self.K = tuple(tuple(row) for row in self.K)
        if len(self.K) != self.target.rank or any(len(row) != self.source.rank for row in self.K):
            raise ModuleError("map matrix has the wrong shape")

    def entry_degree(self, i, j):
        return self.degree + self.source.degrees[j] - self.target.degrees[i]


def _sgn(k):
    return -1 if k & 1 else 1


def hom_boundary(Kmap):
    """d_N K - (-1)^k K d_M as a map of degree k + 1."""
    M, N, K, k = Kmap.source, Kmap.target, Kmap.K, Kmap.degree
    A = M.model.algebra
    n = M.n
    rows = []
    for m in range(N.rank):
        row = []
        for j in range(M.rank):
            acc = A.d(K[m][j])
            for i in range(N.rank):
                if K[i][j].terms and N.D[m][i].terms:
                    acc = acc + (K[i][j] * N.D[m][i]).scale(_sgn(Kmap.entry_degree(i, j)))
            for l in range(M.rank):
                dlj = M.D[l][j]
                if dlj.terms and K[m][l].terms:
                    dd = M.degrees[j] - M.degrees[l] + 1
                    acc = acc - (dlj * K[m][l]).scale(_sgn(k) * _sgn(k * dd))
            row.append(acc)
        rows.append(row)
    return ModuleMap(M, N, rows, k + 1, Kmap.equivariant)


def equivariant_hom_check(Kmap, report=None, instance="K"):
    report = report if report is not None else Report()
    M, N, K = Kmap.source, Kmap.target, Kmap.K
    rho = M.model.coaction
    n = M.n
    for i, j in itertools.product(range(N.rank), range(M.rank)):
        ok = _entry_degree_ok(K[i][j], Kmap.entry_degree(i, j))
        report.add("hom-degree", f"{instance}: K[{i + 1},{j + 1}]", ok)
        if not Kmap.equivariant:
            continue
        lhs, rhs = _zero(n), _zero(n)
        for l in range(N.rank):
            lhs = lhs + rho.apply(K[l][j]) * N.C[i][l]
        for l in range(M.rank):
            rhs = rhs + K[i][l] * M.C[l][j]
        compare(report, "hom-equivariance", f"{instance}: ({i + 1},{j + 1})", lhs, rhs)
    dd = hom_boundary(hom_boundary(Kmap))
    for i, j in itertools.product(range(N.rank), range(M.rank)):
        compare(report, "hom-boundary-squared", f"{instance}: ({i + 1},{j + 1})", dd.K[i][j], _zero(n))
    return report


# ---------------------------------------------------------------------------
# change of base and external tensor products


def change_of_base_module(inc, M):
    """Transport along the restriction O(Z(V)) -> O(Z(V')) and O(G(V)) -> O(G(V'))."""
    if M.model.window != inc.inner:
        raise ModuleError(f"{M.name} lives over {M.model.window}, not {inc.inner}")
    n, axis = M.n, M.model.axis
    target = build_model(inc.outer, n, axis)
    res = DGMorphism.from_rule(M.model.algebra, target.algebra, lambda mv: Matrix.gen(mv, n), name="res")
    gres = DGMorphism.from_rule(M.model.gauge.algebra, target.gauge.algebra, lambda mv: Matrix.gen(mv, n),
                                name="res_G")
    D = [[res.apply(e) for e in row] for row in M.D]
    C = [[gres.apply(e) for e in row] for row in M.C]
    return EquivariantDGModule(target, M.degrees, D, C, name=f"{M.name}|{inc.outer}")


def external_tensor(op, modules, n=None):
    """Product basis in lexicographic order, Leibniz differential, product coaction."""
    if len(modules) != op.arity:
        raise ModuleError(f"{op.arity} inputs, {len(modules)} modules")
    for v, M in zip(op.inputs, modules):
        if M.model.window != v:
            raise ModuleError(f"{M.name} lives over {M.model.window}, not {v}")
    if n is None:
        if not modules:
            raise ModuleError("the matrix size is needed for a nullary product")
        n = modules[0].n
    axis = modules[0].model.axis if modules else None
    out = build_model(op.output, n, axis)
    F = F_algebra_on_operation(op, n, axis) if modules else None
    idx = list(itertools.product(*[range(M.rank) for M in modules]))
    degs = tuple(sum(M.degrees[i] for M, i in zip(modules, I)) for I in idx)
    pos = {I: p for p, I in enumerate(idx)}
    size = len(idx)
    D = [[_zero(n) for _ in range(size)] for _ in range(size)]
    C = [[_one(n) for _ in range(size)] for _ in range(size)]
    for p, I in enumerate(idx):
        for q, J in enumerate(idx):
            c = _one(n)
            for M, i, j in zip(modules, I, J):
                c = c * M.C[i][j]
            C[p][q] = c
    for q, I in enumerate(idx):  # d of basis vector I
        prefix = 0
        for s, M in enumerate(modules):
            for js in range(M.rank):
                e = M.D[js][I[s]]
                if e.terms:
                    J = I[:s] + (js,) + I[s + 1:]
                    dd = M.degrees[I[s]] - M.degrees[js] + 1
                    D[pos[J]][q] = D[pos[J]][q] + F.apply(e).scale(_sgn((1 + dd) * prefix))
            prefix += M.degrees[I[s]]
    name = "(x)".join(M.name for M in modules) or "1"
    return EquivariantDGModule(out, degs, D, C, name=f"[{name}]->{op.output}")


def modules_equal(M, N, report=None, instance=None):
    report = report if report is not None else Report()
    tag = instance or f"{M.name} vs {N.name}"
    same = M.model is N.model and M.degrees == N.degrees
    report.add("module-shape", tag, same, None if same else f"{M.degrees} over {M.model.label} vs "
               f"{N.degrees} over {N.model.label}")
    if same:
        for i, j in itertools.product(range(M.rank), range(M.rank)):
            compare(report, "module-differential-equal", f"{tag}: D[{i + 1},{j + 1}]", M.D[i][j], N.D[i][j])
            compare(report, "module-coaction-equal", f"{tag}: C[{i + 1},{j + 1}]", M.C[i][j], N.C[i][j])
    return report


# ---------------------------------------------------------------------------
# sample modules


def trace_E(model, x):
    return curvature(model, x).trace()


def random_invariant(model, rng, terms=2):
    """A small polynomial in the plaquette traces (gauge invariant)."""
    n = model.n
    plaq = plaquettes(model.window)
    out = _zero(n)
    for _ in range(terms):
        t = Element.scalar(rng.choice([1, -1, 2, Fraction(1, 3)]), n)
        # products of traces are cheap to coact on only for n = 1
        for _ in range(rng.randint(1, 2) if n == 1 else 1):
            t = t * trace_E(model, rng.choice(plaq))
        out = out + t
    return out


def random_rank2_module(model, rng, name="M"):
    """Basis degrees (0, -1) with d(e2) = (invariant) e1 and trivial coaction."""
    n = model.n
    D = ((_zero(n), random_invariant(model, rng)), (_zero(n), _zero(n)))
    C = ((_one(n), _zero(n)), (_zero(n), _one(n)))
    return EquivariantDGModule(model, (0, -1), D, C, name=name)


def random_module_map(M, N, rng, degree=0):
    """Random entries of the right degrees (degree-0 and degree-(-1) pieces)."""
    n = M.n
    deg0 = sorted(g for g in M.model.algebra.gens() if g[3] in (T1, T2, T))
    odd = sorted(g for g in M.model.algebra.gens() if g[3] == XI1)
    rows = []
    for i in range(N.rank):
        row = []
        for j in range(M.rank):
            want = degree + M.degrees[j] - N.degrees[i]
            if want == 0:
                e = Element.gen(rng.choice(deg0), n) + Element.scalar(rng.randint(-2, 2), n)
            elif want == -1 and odd:
                e = Element.gen(rng.choice(odd), n) * Element.gen(rng.choice(deg0), n)
            else:
                e = _zero(n)
            row.append(e)
        rows.append(row)
    return ModuleMap(M, N, rows, degree, equivariant=False)


# ---------------------------------------------------------------------------
# sabotaged modules: each one should fail exactly the named checks


def mutation_suite(V, n=2):
    """(label, module, expected failing check ids)."""
    model = build_model(V, n)
    x = (V.a, V.c)
    U_mv = mvar(U, x[0], x[1], 1)
    u = lambda i, j: Element.gen(U_mv + (i, j), n)
    detU = Matrix.gen(U_mv, n).det()
    z, one = _zero(n), _one(n)
    trE = trace_E(model, x)
    xi = next(mv for mv in sorted(model.algebra.mvars) if mv[3] == XI1)
    tr_xi = Matrix.gen(xi, n).trace()
    suite = [
        ("zero coaction entry", EquivariantDGModule(model, (0,), ((z,),), ((z,),), name="C11=0"),
         {"comodule-counit"}),
        # for n = 1 the entry is grouplike and the module is honest
        ("coaction entry U11", EquivariantDGModule(model, (0,), ((z,),), ((u(1, 1),),), name="C11=U11"),
         {"comodule-coassociativity"} if n > 1 else set()),
        ("invariant differential, twisted coaction",
         EquivariantDGModule(model, (0, -1), ((z, trE), (z, z)), ((detU, z), (z, one)), name="detU-twist"),
         {"differential-equivariance"}),
        ("non-closed differential",
         EquivariantDGModule(model, (0, -2), ((z, tr_xi), (z, z)), ((one, z), (z, one)), name="d(D)!=0"),
         {"module-d-squared"}),
    ]
    if n >= 2:
        suite.insert(2, ("coaction entry U12", EquivariantDGModule(model, (0,), ((z,),), ((u(1, 2),),), name="C11=U12"),
                         {"comodule-counit", "comodule-coassociativity"}))
    return suite


def verify_mutations(V, n=2, report=None):
    """Each sabotaged module fails precisely its expected checks."""
    report = report if report is not None else Report()
    for label, M, expected in mutation_suite(V, n):
        failed = {r.check_id for r in verify_module_axioms(M).failures()}
        ok = failed == expected
        report.add("module-mutation", f"{label} n={n}", ok,
                   None if ok else f"failed {sorted(failed)}, expected {sorted(expected)}")
    return report
