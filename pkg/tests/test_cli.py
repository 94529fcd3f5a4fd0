import io
import json
import subprocess
import sys

import pytest

from ymdcrit.cli import EXIT_FAIL, EXIT_OK, EXIT_RESOURCE, EXIT_USAGE, RunConfig, build_report, main, plan


def run(*argv):
    out = io.StringIO()
    code = main(list(argv), out=out)
    return code, out.getvalue()


def test_dsq_example_all_pass():
    code, text = run("check", "dsq", "--n", "2", "--window", "0,3,0,3", "--format", "json")
    rep = json.loads(text)
    assert code == EXIT_OK and rep["status"] == "pass"
    assert rep["summary"]["fail"] == 0 and rep["summary"]["pass"] == len(rep["records"])
    assert {r["check_id"] for r in rep["records"]} >= {"d-squared", "euler-lagrange-residual"}


def test_axial_example_has_pi_j_record():
    code, text = run("check", "axial", "--n", "1", "--window", "0,2,0,2", "--xbar", "0", "--format", "json")
    rep = json.loads(text)
    assert code == EXIT_OK
    assert any(r["check_id"] == "pi-after-j-identity" and r["status"] == "pass" for r in rep["records"])


def test_operad_example_byte_identical():
    args = ("check", "operad", "--seed", "42", "--count", "1000", "--format", "json")
    a, b = run(*args), run(*args)
    assert a == b and a[0] == EXIT_OK
    rep = json.loads(a[1])
    assert len(rep["records"]) == 1000 and all(r["status"] == "pass" for r in rep["records"])


def test_jobs_do_not_change_output():
    base = ("check", "local-constancy", "--n", "1", "--window", "0,2,0,2", "--window2", "-1,3,0,3",
            "--count", "5", "--format", "json")
    assert run(*base) == run(*base, "--jobs", "2")


def test_text_format_summarises():
    code, text = run("check", "hopf", "--n", "1")
    assert code == EXIT_OK and text.startswith("check hopf: PASS")


def test_model_build_manifest():
    code, text = run("model", "build", "--n", "1", "--window", "0,2,0,2", "--axis", "2")
    data = json.loads(text)
    assert code == EXIT_OK and data["models"][0]["axis"] == 2
    assert data["models"][0]["generator_counts"]["Xi"] == 1


@pytest.mark.parametrize("argv", [
    ("check", "dsq", "--window", "0,1,0,2"),
    ("check", "dsq", "--n", "4"),
    ("check", "dsq", "--degree-bound", "0"),
    ("check", "dsq", "--seed", "-1"),
    ("check", "nothing"),
    ("check", "dsq", "--bogus"),
    ("report",),
    ("check", "axial", "--xbar", "9"),
    ("check", "local-constancy", "--window2", "0,1,0,1"),
])
def test_usage_errors(argv):
    assert run(*argv)[0] == EXIT_USAGE


def test_resource_error_exit_code():
    code, _ = run("check", "appendix", "--n", "2", "--degree-bound", "4", "--budget", "1000")
    assert code == EXIT_RESOURCE


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"n": 2, "window": "0,2,0,3", "seed": 5, "format": "json"}))
    code, text = run("check", "nerve", "--config", str(cfg), "--n", "1")
    rep = json.loads(text)
    assert code == EXIT_OK and rep["config"]["n"] == 1 and rep["config"]["seed"] == 5
    assert rep["config"]["window"] == "0,2,0,3"


def test_config_file_unknown_key(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"colour": "blue"}))
    assert run("check", "dsq", "--config", str(cfg))[0] == EXIT_USAGE


def test_fail_exit_code_from_failing_record():
    rep = build_report("check x", RunConfig(), [{"check_id": "a", "instance": "b", "status": "fail",
                                                "scope": "verified identity", "suite": "s"}])
    assert rep["status"] == "fail"


def test_failing_suite_sets_exit_one(monkeypatch):
    from ymdcrit import cli
    from ymdcrit.dgcore import Report

    def broken(**kwargs):
        rep = Report()
        rep.add("planted", "x", False, "boom")
        return rep

    monkeypatch.setitem(cli.TASKS, "hopf", broken)
    assert run("check", "hopf")[0] == EXIT_FAIL


def test_plan_is_canonical():
    cfg = RunConfig(n=1, window="0,2,0,2")
    assert plan("all", cfg) == plan("all", cfg)
    names = [t[0] for t in plan("all", cfg)]
    assert names[0] == "dsq" and names[-1] == "hook"


def test_scope_field_present():
    code, text = run("check", "appendix", "--n", "1", "--format", "json")
    rep = json.loads(text)
    scopes = {r["scope"] for r in rep["records"]}
    assert scopes == {"verified identity", "out-of-scope assumption recorded"}


def test_console_entry_point_runs():
    proc = subprocess.run([sys.executable, "-m", "ymdcrit", "check", "hopf", "--format", "json"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0 and json.loads(proc.stdout)["status"] == "pass"
