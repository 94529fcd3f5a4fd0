import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import full_permutation_homotopy
from ymdcrit.dgcore import (
    ClosureError,
    DGAlgebra,
    DGMorphism,
    ModelingError,
    Report,
    compose,
    extend_homotopy,
    factor_list,
    identity_morphism,
    morphisms_equal,
    scalars,
    tensor,
    verify_chain_map,
    verify_d_squared,
    verify_homotopy,
)
from ymdcrit.gaugefix import build_pair
from ymdcrit.lattice import Window, build_model
from ymdcrit.localconst import PrimitiveStep, build_retract_package
from ymdcrit.symalg import T, T1, T2, U, XI, XI1, XI2, Element, Matrix, mvar

V22 = Window(0, 2, 0, 2)


def E(kind, x1, x2, n=1, i=1, j=1, slot=0):
    return Element.gen(mvar(kind, x1, x2, slot) + (i, j), n)


def random_product(A, rng, factors):
    gens = A.gens()
    x = Element.scalar(rng.randint(1, 3), A.n)
    for _ in range(factors):
        x = x * Element.gen(rng.choice(gens), A.n)
    return x


def test_d_of_link_is_zero():
    A = build_model(V22, 1).algebra
    assert A.d(E(T1, 0, 0)).is_zero()


def test_leibniz_on_two_odd_generators():
    A = build_model(V22, 1).algebra
    a, b = E(XI1, 0, 1), E(XI1, 1, 1)
    assert A.d(a * b) == A.d(a) * b - a * A.d(b)


def test_d_xi_n1_window_22():
    A = build_model(V22, 1).algebra
    expected = -E(XI1, 1, 1) + E(XI1, 0, 1) - E(XI2, 1, 1) + E(XI2, 1, 0)
    assert A.d(E(XI, 1, 1)) == expected


@pytest.mark.parametrize("n", [1, 2])
def test_leibniz_on_random_products(n):
    A = build_model(V22, n).algebra
    rng = random.Random(n)
    for _ in range(30):
        x, y = random_product(A, rng, rng.randint(0, 2)), random_product(A, rng, rng.randint(0, 2))
        if not x.terms:
            continue
        sign = -1 if x.degree() % 2 else 1
        assert A.d(x * y) == A.d(x) * y + (x * A.d(y)).scale(sign)


def test_d_squared_examples():
    assert verify_d_squared(build_model(V22, 1).algebra).ok
    assert verify_d_squared(build_model(Window(0, 3, 0, 3), 2, 2).algebra).ok


@pytest.mark.parametrize("n", [1, 2])
def test_d_squared_on_random_products(n):
    A = build_model(V22, n).algebra
    rng = random.Random(10 + n)
    for _ in range(15):
        x = random_product(A, rng, 3)
        assert A.d(A.d(x)).is_zero()


def test_sabotaged_differential_fails_exactly_on_xi():
    A = build_model(V22, 1).algebra
    diff = {mv: (m.scale(-1) if mv[3] == XI1 else m) for mv, m in A.diff.items()}
    B = DGAlgebra(1, A.mvars, diff, name="sabotaged")
    rep = verify_d_squared(B)
    failing = {r.instance for r in rep.failures()}
    assert failing and all("Xi(" in f for f in failing)
    xi = [mv for mv in A.mvars if mv[3] == XI]
    assert len(failing) == len(xi)


def test_closure_checked_at_construction():
    A = build_model(V22, 1).algebra
    with pytest.raises(ClosureError):
        DGAlgebra(1, [mv for mv in A.mvars if mv[3] != T2], A.diff)


def test_degree_checked_at_construction():
    A = build_model(V22, 1).algebra
    diff = dict(A.diff)
    mv = next(mv for mv in A.mvars if mv[3] == XI)
    diff[mv] = Matrix([[E(T1, 0, 1)]])
    with pytest.raises(ModelingError):
        DGAlgebra(1, A.mvars, diff)


@pytest.mark.parametrize("n", [1, 2])
def test_pair_maps_are_chain_maps(n):
    pair = build_pair(Window(0, 2, 0, 3), n)
    assert verify_chain_map(pair.j_star).ok
    assert verify_chain_map(pair.pi_star).ok
    assert verify_chain_map(identity_morphism(pair.plain.algebra)).ok


def test_compose_pi_j_is_identity_and_units():
    pair = build_pair(Window(0, 2, 0, 3), 2)
    gf = pair.gf.algebra
    assert morphisms_equal(compose(pair.j_star, pair.pi_star), identity_morphism(gf)).ok
    f = pair.j_star
    assert morphisms_equal(compose(f, identity_morphism(f.source)), f).ok
    assert morphisms_equal(compose(identity_morphism(f.target), f), f).ok


def test_j_after_pi_on_T1():
    pair = build_pair(Window(0, 2, 0, 3), 1, 0)
    comp = compose(pair.pi_star, pair.j_star)
    from ymdcrit.gaugefix import expected_round_trip

    for mv in pair.plain.algebra.sorted_mvars():
        if mv[3] == T1:
            assert comp.table[mv] == expected_round_trip(pair, mv)


def test_compose_associative_on_elements():
    pair = build_pair(Window(0, 2, 0, 3), 1)
    a = compose(pair.j_star, compose(pair.pi_star, pair.j_star))
    b = compose(compose(pair.j_star, pair.pi_star), pair.j_star)
    rng = random.Random(5)
    for _ in range(10):
        x = random_product(pair.plain.algebra, rng, 3)
        assert a.apply(x) == b.apply(x)


def test_multiplicativity_on_random_pairs():
    pair = build_pair(Window(0, 2, 0, 3), 2)
    rng = random.Random(2)
    f = pair.pi_star
    for _ in range(10):
        x, y = random_product(f.source, rng, 2), random_product(f.source, rng, 1)
        assert f.apply(x * y) == f.apply(x) * f.apply(y)


def _package(n):
    return build_retract_package(V22, PrimitiveStep(2, 1, V22, Window(0, 2, 0, 3)), n)


def test_homotopy_on_relative_generators():
    pkg = _package(1)
    for x1 in (1,):
        xi2 = E(XI2, x1, 2)
        assert pkg.h.apply(xi2) == -E(XI, x1, 2)
    base = E(T, 0, 0) * E(XI1, 1, 1)
    assert pkg.h.apply(base).is_zero()


def test_homotopy_on_product_of_two_relative_generators():
    pkg = _package(2)
    a = E(XI2, 1, 2, 2, 1, 1)
    b = E(XI2, 1, 2, 2, 2, 1)
    x = a * b
    rep = verify_homotopy(pkg.h, [("xi2*xi2", x)])
    assert rep.ok


@pytest.mark.parametrize("n", [1, 2])
def test_fast_homotopy_matches_all_orderings(n):
    pkg = _package(n)
    R = pkg.R
    rel = [g for g in R.gens() if g[:4] in pkg.relative]
    rng = random.Random(n)
    for _ in range(25):
        x = Element.gen(rng.choice(rel), n)
        for _ in range(rng.randint(0, 3)):
            x = x * Element.gen(rng.choice(R.gens()), n)
        for mono, c in x.terms.items():
            single = Element.from_mono(mono, 1, n)
            expected = full_permutation_homotopy(pkg.h, factor_list(mono))
            assert extend_homotopy(pkg.h, single) == expected
            assert extend_homotopy(pkg.h, single, fast=False) == expected


def test_tensor_products():
    model = build_model(V22, 1)
    A, G = model.algebra, model.gauge.algebra
    AG = tensor(A, G)
    a, u = E(XI1, 1, 1), E(U, 0, 0, slot=1)
    assert a * u == u * a  # graded swap with |u| = 0
    assert AG.d(a * u) == A.d(a) * u
    assert AG.d(E(T1, 0, 0) * u).is_zero()
    assert scalars(1).gens() == []


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_identity_morphism_fixes_random_products(seed):
    A = build_model(V22, 1).algebra
    x = random_product(A, random.Random(seed), 3)
    assert identity_morphism(A).apply(x) == x


def test_report_records_counterexample():
    rep = Report()
    rep.add("c", "i", False, "dump")
    rep.note("o", "i")
    assert not rep.ok and rep.records[0].as_dict()["counterexample"] == "dump"
    assert rep.records[1].as_dict()["scope"] == "out-of-scope assumption recorded"


def test_morphism_validation_rejects_uncertified_image():
    A = build_model(V22, 1).algebra
    table = {mv: Matrix.gen(mv, 1) for mv in A.mvars}
    mv = next(mv for mv in A.mvars if mv[3] == T1)
    table[mv] = Matrix.gen(mv, 1).uncertified()
    with pytest.raises(ModelingError):
        DGMorphism(A, A, table)
