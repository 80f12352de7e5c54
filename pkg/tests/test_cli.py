"""Command-line interface: dispatch, exit codes, JSON reports."""

import json
import os
import shutil

import pytest

from smdpcheck import corpus
from smdpcheck.cli import main


@pytest.fixture()
def models(tmp_path):
    """Corpus files copied next to each other for path-based invocation."""
    for name in corpus.names():
        shutil.copy(str(corpus.path(name)), tmp_path / name)
    return tmp_path


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr().out
    return code, out


def run_json(capsys, *argv):
    code = main([str(a) for a in argv] + ["--json"])
    out = capsys.readouterr().out
    return code, json.loads(out)


def test_validate_ok(models, capsys):
    code, out = run(capsys, "validate", models / "fig2_U.smdp")
    assert code == 0 and "valid" in out


def test_validate_mass_violation(tmp_path, capsys):
    bad = tmp_path / "bad.smdp"
    bad.write_text("labels: a\nstates: s0\ninitial: s0\nresidence:\n  s0 exp(1)\n"
                   "transitions:\n  s0 a s0 1.2\n")
    code, report = run_json(capsys, "validate", bad)
    assert code == 2
    assert any("MassExceeded" in v for v in report["result"]["violations"])


def test_prob_engines(models, capsys):
    code, report = run_json(capsys, "prob", "--model", models / "fig2_U.smdp",
                            "--word", "aa", "--t", "2")
    assert code == 0
    assert report["result"]["probability"] == pytest.approx(0.5156, abs=0.005)
    code, report2 = run_json(capsys, "prob", "--model", models / "fig2_U.smdp",
                             "--word", "aa", "--t", "2", "--engine", "inductive")
    assert code == 0
    assert report2["result"]["probability"] == pytest.approx(
        report["result"]["probability"], abs=1e-5)


def test_prob_rect_engine(models, capsys):
    code, report = run_json(capsys, "prob", "--model", models / "fig2_U.smdp",
                            "--word", "a", "--t", "1.5", "--engine", "rect")
    assert code == 0
    import math
    assert report["result"]["probability"] == pytest.approx(1 - math.exp(-3.0), abs=1e-12)
    # rect bounds each step separately, so multi-letter words are rejected
    code = main(["prob", "--model", str(models / "fig2_U.smdp"),
                 "--word", "aa", "--t", "1.5", "--engine", "rect"])
    assert code == 2


def test_prob_with_scheduler(models, capsys):
    code, report = run_json(capsys, "prob", "--model", models / "fig3_V.smdp",
                            "--scheduler", models / "fig3_V_half.sched",
                            "--word", "aa", "--t", "2")
    assert code == 0
    assert report["result"]["probability"] == pytest.approx(
        0.5 * (1 - 3 * 2.718281828459045 ** -2), abs=1e-6)


def test_compose_then_prob(models, capsys):
    out = models / "UW.smdp"
    code, _ = run(capsys, "compose", "--left", models / "fig2_U.smdp",
                  "--right", models / "fig4_W_product.smdp", "--op", "prodrate",
                  "--out", out)
    assert code == 0 and out.exists()
    code, report = run_json(capsys, "prob", "--model", out, "--word", "aa", "--t", "2")
    assert code == 0
    assert report["result"]["probability"] == pytest.approx(0.0929, abs=0.005)


def test_compose_unsupported_exits_2(models, capsys):
    code = main(["compose", "--left", str(models / "uniform_chain.smdp"),
                 "--right", str(models / "uniform_chain.smdp"),
                 "--op", "prodrate", "--out", str(models / "x.smdp")])
    assert code == 2


def test_faster_than_exit_codes(models, capsys):
    code, out = run(capsys, "faster-than", models / "fig2_U.smdp", models / "fig2_V.smdp",
                    "--depth", "6")
    assert code == 0 and "NotRefuted" in out
    code, report = run_json(capsys, "faster-than", "--fast", models / "fig3_U.smdp",
                            "--slow", models / "fig3_V.smdp", "--depth", "4",
                            "--step", "0.5")
    assert code == 1
    assert report["result"]["outcome"] == "Refuted"
    assert report["result"]["witness"]["slow_scheduler"]["v0"] == {"a": 0.5, "b": 0.5}


def test_simulates_and_bisimilar(models, capsys):
    code, _ = run(capsys, "simulates", models / "fig3_U.smdp", models / "fig3_V.smdp")
    assert code == 0
    code, _ = run(capsys, "simulates", models / "fig2_U.smdp", models / "fig2_V.smdp")
    assert code == 1
    code, _ = run(capsys, "bisimilar", models / "fig3_U.smdp", models / "fig3_V.smdp")
    assert code == 0
    code, _ = run(capsys, "bisimilar", models / "fig2_U.smdp", models / "fig2_V.smdp")
    assert code == 1


def test_monotonicity_cli(models, capsys, tmp_path):
    code, report = run_json(capsys, "monotonicity",
                            "--fast", models / "fig2_U.smdp",
                            "--slow", models / "fig2_V.smdp",
                            "--ctx", models / "fig4_W_congruent.smdp",
                            "--op", "min", "--mode", "strong")
    assert code == 0
    assert report["result"]["verdict"] == "Holds"
    smtdir = tmp_path / "queries"
    code, report = run_json(capsys, "monotonicity",
                            "--fast", models / "fig2_U.smdp",
                            "--slow", models / "fig2_V.smdp",
                            "--ctx", models / "fig4_W_product.smdp",
                            "--op", "prodrate", "--mode", "strong",
                            "--emit-smt", smtdir)
    assert code == 1
    assert report["result"]["violations"][0]["condition"] == "CdfSlow"
    assert report["result"]["smt_queries"]
    assert os.path.exists(report["result"]["smt_queries"][0])


def test_monotonicity_bounded_mode(models, capsys):
    code, report = run_json(capsys, "monotonicity",
                            "--fast", models / "fig2_U.smdp",
                            "--slow", models / "fig2_V.smdp",
                            "--ctx", models / "fig4_W_minimum.smdp",
                            "--op", "min", "--mode", "bounded", "--n", "2", "--all")
    assert code == 1
    assert report["result"]["mode"] == "Bounded"
    assert report["result"]["bound"] == 2
    conditions = {v["condition"] for v in report["result"]["violations"]}
    assert "CdfFast" in conditions


def test_validate_with_scheduler(models, capsys):
    code, _ = run(capsys, "validate", models / "fig3_V.smdp",
                  "--scheduler", models / "fig3_V_half.sched")
    assert code == 0
    code, report = run_json(capsys, "validate", models / "fig2_U.smdp",
                            "--scheduler", models / "fig3_V_half.sched")
    assert code == 2  # scheduler states do not exist in this model


def test_simulate_cli(models, capsys):
    code, report = run_json(capsys, "simulate", "--model", models / "fig2_U.smdp",
                            "--word", "aa", "--t", "2", "--samples", "50000",
                            "--seed", "42")
    assert code == 0
    r = report["result"]
    assert abs(r["estimate"] - 0.5156) <= max(3 * r["ci99_halfwidth"], 0.01)


def test_report_shape(models, capsys):
    code, report = run_json(capsys, "validate", models / "fig2_U.smdp")
    assert report["schema"] == "smdpcheck-report/1"
    assert report["command"] == "validate"
    assert report["inputs"][0]["sha256"]
    assert "elapsed_seconds" in report


def test_missing_file_exits_2(capsys):
    assert main(["validate", "no_such_file.smdp"]) == 2


def test_model_error_exits_2(tmp_path, capsys):
    bad = tmp_path / "syntax.smdp"
    bad.write_text("labels: a\nstates: s0\nnot_a_section: s0\n")
    code = main(["validate", str(bad)])
    assert code == 2
