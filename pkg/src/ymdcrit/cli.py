"""Command-line front end: build models, run check suites, emit reports."""
from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields

from . import gaugefix, lattice, localconst, pfa
from .dgcore import Report, verify_d_squared
from .lattice import Window, WindowError, build_model

SCHEMA_VERSION = "1.0"
EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_RESOURCE = 0, 1, 2, 3


@dataclass
class RunConfig:
    n: int = 1
    window: str = "0,2,0,2"
    window2: str | None = None
    axis: int | None = None
    xbar: int | None = None
    seed: int = 0
    count: int | None = None
    degree_bound: int | None = None
    format: str = "text"
    jobs: int = 1
    budget: int = 200_000

    def validate(self):
        if not 1 <= self.n <= 3:
            raise ValueError(f"--n must be in 1..3, got {self.n}")
        if self.axis not in (None, 1, 2):
            raise ValueError(f"--axis must be 1 or 2, got {self.axis}")
        if self.degree_bound is not None and self.degree_bound < 1:
            raise ValueError("--degree-bound must be at least 1")
        if self.count is not None and self.count < 0:
            raise ValueError("--count must be non-negative")
        if self.format not in ("json", "text"):
            raise ValueError(f"--format must be json or text, got {self.format}")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("--seed must be a 64-bit unsigned integer")
        if self.jobs < 1:
            raise ValueError("--jobs must be at least 1")
        self.V
        if self.window2 is not None:
            self.V2
        return self

    @property
    def V(self):
        return Window.parse(self.window)

    @property
    def V2(self):
        return Window.parse(self.window2)

    def echo(self):
        """Config as recorded in reports (everything that affects results)."""
        d = asdict(self)
        d.pop("format")
        d.pop("jobs")
        return d


# ---------------------------------------------------------------------------
# suites: each task is (suite name, kwargs) and returns a Report


def _model_kinds(axis):
    return [axis] if axis is not None else [None, 2, 1]


def _task_dsq(window, n, axis):
    V = Window.parse(window)
    model = build_model(V, n, axis)
    rep = verify_d_squared(model.algebra, instance=model.label)
    if axis is None:
        for x in V.sites():
            lattice.euler_lagrange_check(model, x, rep)
    return rep


def _task_gauge(window, n, axis, seed):
    model = build_model(Window.parse(window), n, axis)
    rep = lattice.verify_coaction(model, seed=seed)
    return lattice.verify_gauge_invariance(model, rep)


def _task_hopf(window, n, axis):
    return lattice.verify_hopf(build_model(Window.parse(window), n, axis).gauge)


def _task_nerve(window, n, axis):
    return lattice.verify_simplicial_identities(build_model(Window.parse(window), n, axis))


def _task_axial(window, n, xbar):
    return gaugefix.verify_axial(Window.parse(window), n, xbar)


def _task_restriction(window, window2, n, axis):
    inc = localconst.Inclusion(Window.parse(window), Window.parse(window2))
    return localconst.verify_restriction(inc, n, gauge_fixed=axis is not None, axis=axis or 2)


def _task_step(window, window2, n, count, seed):
    step = localconst.PrimitiveStep(*_step_of(Window.parse(window), Window.parse(window2)))
    pkg = localconst.build_package_for_step(step, n)
    return localconst.verify_deformation_retract(pkg, count, seed)


def _step_of(V, V2):
    (step,) = localconst.primitive_factorization(localconst.Inclusion(V, V2))
    return step.axis, step.side, step.source, step.target


def _task_appendix(window, n, degree_bound, seed, budget):
    V = Window.parse(window)
    step = localconst.PrimitiveStep(2, 1, V, localconst.apply_step(V, 2, 1))
    pkg = localconst.build_retract_package(V, step, n)
    rep = Report()
    for x1 in range(V.a, V.b):
        localconst.appendix_h0_witness(pkg, x1, rep)
    localconst.verify_h0_products(pkg, 20, seed, rep)
    return localconst.verify_appendix_acyclicity(pkg, degree_bound, rep, budget=budget)


def _task_operad(count, seed):
    return pfa.verify_operad_axioms(count, seed)


def _task_multifunctoriality(count, seed, n):
    return pfa.verify_multifunctoriality(count, seed, n)


def _task_modules(window, n, seed):
    import random

    V = Window.parse(window)
    model = build_model(V, n)
    rep = pfa.verify_module_axioms(pfa.unit_object(model))
    pfa.verify_mutations(V, n, rep)
    rng = random.Random(f"modules:{seed}")
    M = pfa.random_rank2_module(model, rng)
    pfa.verify_module_axioms(M, rep)
    V1 = Window(V.a, V.b, V.c, V.d + 1)
    V2 = Window(V.a - 1, V.b, V.c, V.d + 1)
    two = pfa.change_of_base_module(localconst.Inclusion(V1, V2),
                                    pfa.change_of_base_module(localconst.Inclusion(V, V1), M))
    one = pfa.change_of_base_module(localconst.Inclusion(V, V2), M)
    pfa.modules_equal(two, one, rep, instance=f"change of base {V} -> {V1} -> {V2}")
    pfa.verify_module_axioms(one, rep)
    N = pfa.random_rank2_module(model, rng, name="N")
    K = pfa.random_module_map(M, N, rng)
    pfa.equivariant_hom_check(K, rep, instance="random K")
    W = Window(V.b + 1, V.b + 1 + (V.b - V.a), V.c, V.d)
    op = pfa.MultiOperation((V, W), Window(V.a, W.b, V.c, V.d))
    P = pfa.random_rank2_module(build_model(W, n), rng, name="P")
    pfa.verify_module_axioms(pfa.external_tensor(op, [M, P]), rep)
    units = pfa.external_tensor(op, [pfa.unit_object(model), pfa.unit_object(build_model(W, n))])
    pfa.modules_equal(units, pfa.unit_object(build_model(op.output, n)), rep, instance="unit (x) unit")
    pfa.verify_F_structure(op, n, report=rep)
    return rep


def _task_hook(window, window2, n, seed):
    op = pfa.MultiOperation((Window.parse(window),), Window.parse(window2))
    return pfa.local_constancy_hook(op, n, 20, seed)


TASKS = {
    "dsq": _task_dsq,
    "gauge": _task_gauge,
    "hopf": _task_hopf,
    "nerve": _task_nerve,
    "axial": _task_axial,
    "restriction": _task_restriction,
    "step": _task_step,
    "appendix": _task_appendix,
    "operad": _task_operad,
    "multifunctoriality": _task_multifunctoriality,
    "modules": _task_modules,
    "hook": _task_hook,
}


def _default_window2(V):
    return Window(V.a, V.b, V.c, V.d + 1)


def plan(command, cfg):
    """Independent tasks for a command, in canonical order."""
    w, n = cfg.window, cfg.n
    if command == "dsq":
        return [("dsq", dict(window=w, n=n, axis=a)) for a in _model_kinds(cfg.axis)]
    if command == "gauge-invariance":
        return [("gauge", dict(window=w, n=n, axis=a, seed=cfg.seed)) for a in _model_kinds(cfg.axis)]
    if command == "hopf":
        return [("hopf", dict(window=w, n=n, axis=a)) for a in _model_kinds(cfg.axis)]
    if command == "nerve":
        return [("nerve", dict(window=w, n=n, axis=a)) for a in _model_kinds(cfg.axis)]
    if command == "axial":
        return [("axial", dict(window=w, n=n, xbar=cfg.xbar))]
    if command == "local-constancy":
        V = cfg.V
        V2 = cfg.V2 if cfg.window2 else _default_window2(V)
        inc = localconst.Inclusion(V, V2)
        tasks = [("restriction", dict(window=w, window2=V2.spec(), n=n, axis=a)) for a in (None, 2, 1)]
        count = 100 if cfg.count is None else cfg.count
        for s in localconst.primitive_factorization(inc):
            tasks.append(("step", dict(window=s.source.spec(), window2=s.target.spec(), n=n, count=count,
                                       seed=cfg.seed)))
        return tasks
    if command == "appendix":
        D = cfg.degree_bound or (3 if n == 1 else 2)
        return [("appendix", dict(window=w, n=n, degree_bound=D, seed=cfg.seed, budget=cfg.budget))]
    if command == "operad":
        return [("operad", dict(count=1000 if cfg.count is None else cfg.count, seed=cfg.seed))]
    if command == "pfa":
        V = cfg.V
        V2 = cfg.V2 if cfg.window2 else _default_window2(V)
        return [("multifunctoriality", dict(count=200 if cfg.count is None else cfg.count, seed=cfg.seed, n=1)),
                ("modules", dict(window=w, n=n, seed=cfg.seed)),
                ("hook", dict(window=w, window2=V2.spec(), n=n, seed=cfg.seed))]
    if command == "all":
        out = []
        for c in ("dsq", "hopf", "gauge-invariance", "nerve", "axial", "local-constancy", "appendix", "operad",
                  "pfa"):
            out.extend(plan(c, cfg))
        return out
    raise ValueError(f"unknown command {command}")


def _run_task(task):
    name, kwargs = task
    rep = TASKS[name](**kwargs)
    return [dict(r.as_dict(), suite=name) for r in rep.records]


def execute(tasks, jobs=1):
    if jobs <= 1 or len(tasks) <= 1:
        return [_run_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_run_task, tasks))


# ---------------------------------------------------------------------------
# reports


def build_report(command, cfg, records):
    counts = {"pass": 0, "fail": 0, "skipped-out-of-scope": 0}
    for r in records:
        counts[r["status"]] += 1
    return {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "config": cfg.echo(),
        "records": records,
        "summary": dict(counts, total=len(records)),
        "status": "fail" if counts["fail"] else "pass",
    }


def render_json(report):
    return json.dumps(report, indent=1, sort_keys=True) + "\n"


def render_text(report, elapsed=None):
    lines = [f"{report['command']}: {report['status'].upper()}  " + ", ".join(
        f"{k}={v}" for k, v in sorted(report["summary"].items()))]
    by_id = {}
    for r in report["records"]:
        by_id.setdefault((r["suite"], r["check_id"]), {"pass": 0, "fail": 0, "skipped-out-of-scope": 0})
        by_id[(r["suite"], r["check_id"])][r["status"]] += 1
    for (suite, cid), c in by_id.items():
        lines.append(f"  [{suite}] {cid}: {c['pass']} pass, {c['fail']} fail"
                     + (f", {c['skipped-out-of-scope']} recorded out of scope" if c["skipped-out-of-scope"] else ""))
    for r in report["records"]:
        if r["status"] == "fail":
            lines.append(f"  FAIL {r['check_id']} | {r['instance']} | {r.get('counterexample', '')}")
    if elapsed is not None:
        lines.append(f"  wall time {elapsed:.2f}s, seed {report['config']['seed']}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# argument handling


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _common(p):
    p.add_argument("--config", help="JSON file with the same keys as the flags")
    p.add_argument("--n", type=int)
    p.add_argument("--window", help="a,b,c,d for [a,b]x[c,d]")
    p.add_argument("--window2", help="outer window for inclusions")
    p.add_argument("--axis", type=int, choices=(1, 2))
    p.add_argument("--xbar", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--count", type=int)
    p.add_argument("--degree-bound", type=int, dest="degree_bound")
    p.add_argument("--format", choices=("json", "text"))
    p.add_argument("--jobs", type=int)
    p.add_argument("--budget", type=int, help="basis-size budget for cohomology computations")


CHECKS = ("dsq", "gauge-invariance", "hopf", "axial", "nerve", "local-constancy", "appendix", "operad", "pfa")


def make_parser():
    parser = _Parser(prog="ymdcrit", description="Exact checks for lattice Yang-Mills derived critical loci.")
    sub = parser.add_subparsers(dest="group", required=True, parser_class=_Parser)
    model = sub.add_parser("model").add_subparsers(dest="action", required=True, parser_class=_Parser)
    _common(model.add_parser("build", help="print the generator manifest of a model"))
    check = sub.add_parser("check").add_subparsers(dest="action", required=True, parser_class=_Parser)
    for name in CHECKS:
        _common(check.add_parser(name))
    report = sub.add_parser("report").add_subparsers(dest="action", required=True, parser_class=_Parser)
    _common(report.add_parser("all", help="every check suite on the configured window"))
    return parser


def load_config(args):
    cfg = {}
    if args.config:
        with open(args.config) as fh:
            raw = json.load(fh)
        if not isinstance(raw, dict):
            raise ValueError("config file must hold a JSON object")
        known = {f.name for f in fields(RunConfig)}
        for k, v in raw.items():
            key = k.replace("-", "_")
            if key not in known:
                raise ValueError(f"unknown config key {k!r}")
            cfg[key] = v
    for f in fields(RunConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            cfg[f.name] = v
    return RunConfig(**cfg).validate()


def _glue_windows(argv):
    """Join window flags with their value so negative coordinates parse."""
    out, it = [], iter(argv)
    for tok in it:
        if tok in ("--window", "--window2"):
            nxt = next(it, None)
            out.append(tok if nxt is None else f"{tok}={nxt}")
        else:
            out.append(tok)
    return out


def _write(out, text):
    try:
        out.write(text)
        out.flush()
    except BrokenPipeError:
        # reader went away (piped into head); silence the interpreter's flush at exit
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())


def main(argv=None, out=None):
    out = out or sys.stdout
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = make_parser().parse_args(_glue_windows(argv))
        cfg = load_config(args)
    except (UsageError, ValueError, TypeError, OSError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    start = time.perf_counter()
    try:
        if args.group == "model":
            axes = _model_kinds(cfg.axis)
            data = {"schema_version": SCHEMA_VERSION, "command": "model build", "config": cfg.echo(),
                    "models": [build_model(cfg.V, cfg.n, a, cfg.xbar).manifest() for a in axes]}
            _write(out, json.dumps(data, indent=1, sort_keys=True) + "\n")
            return EXIT_OK
        command = args.action
        records = [r for chunk in execute(plan(command, cfg), cfg.jobs) for r in chunk]
    except localconst.ResourceError as exc:
        print(f"resource error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (WindowError, ValueError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    report = build_report(f"{args.group} {command}", cfg, records)
    if cfg.format == "json":
        _write(out, render_json(report))
    else:
        _write(out, render_text(report, time.perf_counter() - start))
    return EXIT_OK if report["status"] == "pass" else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
