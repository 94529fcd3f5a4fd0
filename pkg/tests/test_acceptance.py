"""Acceptance suite: one test and one printed PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py -v`` or directly with
``python3 tests/test_acceptance.py``.
"""
import subprocess
import sys
import time

import pytest

from ymdcrit.dgcore import Report, verify_d_squared
from ymdcrit.gaugefix import verify_axial
from ymdcrit.lattice import (
    Window,
    build_model,
    el_residuals,
    euler_lagrange_check,
    verify_coaction,
    verify_gauge_invariance,
    verify_hopf,
)
from ymdcrit.localconst import (
    PrimitiveStep,
    appendix_h0_witness,
    apply_step,
    build_package_for_step,
    build_retract_package,
    verify_appendix_acyclicity,
    verify_deformation_retract,
)
from ymdcrit.pfa import (
    verify_multifunctoriality,
    verify_mutations,
    verify_operad_axioms,
)

V22 = Window(0, 2, 0, 2)


@pytest.fixture
def emit(request):
    reporter = request.config.pluginmanager.getplugin("terminalreporter")

    def _emit(number, title, ok, detail):
        line = f"criterion {number} [{'PASS' if ok else 'FAIL'}] {title}: {detail}"
        if reporter is not None:
            reporter.write_line("")
            reporter.write_line(line)
        else:
            print(line)

    return _emit


def _summary(rep):
    bad = rep.failures()
    s = f"{len(rep)} records, {len(bad)} failing"
    if bad:
        s += f"; first: {bad[0].check_id} {bad[0].instance}"
    return s


def criterion_1():
    rep = Report()
    start = time.perf_counter()
    windows = [Window(0, l1, 0, l2) for l1 in (2, 3) for l2 in (2, 3)]
    for n in (1, 2):
        for V in windows:
            for axis in (None, 1, 2):
                verify_d_squared(build_model(V, n, axis).algebra, rep, instance=build_model(V, n, axis).label)
    elapsed = time.perf_counter() - start
    ok = rep.ok and elapsed < 60
    return ok, f"{_summary(rep)} over 4 windows x 3 models x n in {{1,2}}, {elapsed:.1f}s (limit 60s)"


def criterion_2():
    rep = Report()
    V = Window(0, 3, 0, 3)
    sites = 0
    for n in (1, 2):
        model = build_model(V, n)
        for x in V.sites():
            if el_residuals(model, x):
                sites += 1
                euler_lagrange_check(model, x, rep)
    return rep.ok and sites > 0, f"{_summary(rep)} at {sites} in-support (site, n) pairs"


def criterion_3():
    rep = Report()
    for n in (1, 2):
        for axis in (None, 1, 2):
            model = build_model(Window(0, 2, 0, 3), n, axis)
            verify_hopf(model.gauge, rep)
            verify_coaction(model, rep, seed=0)
            verify_gauge_invariance(model, rep)
    ids = {r.check_id for r in rep.records}
    need = {"hopf-coassociativity", "hopf-antipode-left", "coaction-coassociativity", "coaction-counit",
            "chain-map", "multiplicative", "gauge-invariance"}
    return rep.ok and need <= ids, _summary(rep)


def criterion_4():
    rep = Report()
    start = time.perf_counter()
    V = Window(0, 2, 0, 3)
    for n in (1, 2):
        verify_axial(V, n, V.c, rep)
    elapsed = time.perf_counter() - start
    ids = {r.check_id for r in rep.records}
    need = {"pi-after-j-identity", "pi-after-j-identity-gauge", "j-after-pi-table", "eta-projection-triangle",
            "eta-action-triangle", "eta-naturality"}
    ok = rep.ok and need <= ids and elapsed < 120
    return ok, f"{_summary(rep)}, {elapsed:.1f}s (limit 120s)"


def criterion_5():
    rep = Report()
    kinds = []
    for axis, side in ((2, 1), (2, -1), (1, 1), (1, -1)):
        step = PrimitiveStep(axis, side, V22, apply_step(V22, axis, side))
        kinds.append(step.kind)
        for n in (1, 2):
            verify_deformation_retract(build_package_for_step(step, n), 100, 0, rep)
    products = sum(1 for r in rep.records if r.check_id == "homotopy-random-product")
    ok = rep.ok and products == 8 * 100
    return ok, f"{_summary(rep)}; steps {', '.join(kinds)}; {products} random products"


def criterion_6():
    rep = Report()
    for n, D in ((1, 3), (2, 2)):
        pkg = build_retract_package(V22, PrimitiveStep(2, 1, V22, apply_step(V22, 2, 1)), n)
        for x1 in range(V22.a, V22.b):
            appendix_h0_witness(pkg, x1, rep)
        verify_appendix_acyclicity(pkg, D, rep)
    acyc = [r for r in rep.records if r.check_id == "truncated-acyclicity"]
    return rep.ok and acyc, f"{_summary(rep)}; {len(acyc)} (degree, weight) cohomology groups vanish"


def criterion_7():
    rep = Report()
    verify_operad_axioms(1000, 0, report=rep)
    verify_multifunctoriality(200, 0, report=rep)
    from ymdcrit.cli import _task_modules

    rep.extend(_task_modules(window=V22.spec(), n=2, seed=0))
    for n in (1, 2):
        verify_mutations(V22, n, rep)
    counts = {cid: sum(1 for r in rep.records if r.check_id == cid)
              for cid in ("operad-axioms", "F-multifunctoriality", "module-mutation", "module-differential-equal")}
    ok = rep.ok and counts["operad-axioms"] == 1000 and counts["F-multifunctoriality"] == 200
    return ok, f"{_summary(rep)}; " + ", ".join(f"{k}={v}" for k, v in counts.items())


def criterion_8():
    outs = []
    for args in (["check", "operad", "--seed", "42", "--count", "1000"],
                 ["check", "local-constancy", "--n", "2", "--window", "0,2,0,2", "--window2", "-1,3,0,3",
                  "--seed", "7", "--count", "20"]):
        runs = [subprocess.run([sys.executable, "-m", "ymdcrit", *args, "--format", "json"], capture_output=True,
                               check=False).stdout for _ in range(2)]
        outs.append((runs[0] == runs[1] and len(runs[0]) > 0, len(runs[0])))
    ok = all(same for same, _ in outs)
    return ok, "two runs per command byte-identical: " + ", ".join(f"{size} bytes" for _, size in outs)


CRITERIA = [
    (1, "d^2 = 0 on all models", criterion_1),
    (2, "Euler-Lagrange identification", criterion_2),
    (3, "gauge structure", criterion_3),
    (4, "axial gauge comparison", criterion_4),
    (5, "local constancy packages", criterion_5),
    (6, "degree-zero witnesses and truncated acyclicity", criterion_6),
    (7, "operad and prefactorization structure", criterion_7),
    (8, "deterministic reports", criterion_8),
]


@pytest.mark.parametrize("number,title,fn", CRITERIA, ids=[f"criterion-{c[0]}" for c in CRITERIA])
def test_criterion(number, title, fn, emit):
    ok, detail = fn()
    emit(number, title, ok, detail)
    assert ok, detail


if __name__ == "__main__":
    failed = 0
    for number, title, fn in CRITERIA:
        ok, detail = fn()
        failed += not ok
        print(f"criterion {number} [{'PASS' if ok else 'FAIL'}] {title}: {detail}", flush=True)
    sys.exit(1 if failed else 0)
