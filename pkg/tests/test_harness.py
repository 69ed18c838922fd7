import json

import numpy as np
import pytest
from scipy import stats

from fragstoch.errors import ParameterError
from fragstoch.harness import report as rep
from fragstoch.harness.cases import CaseOutcome
from fragstoch.harness.cli import main
from fragstoch.harness.config import parse_config
from fragstoch.harness.registry import (VerificationCase, apply_overrides, default_cases, exit_code,
                                        run_registry, select, verdict_of)
from fragstoch.harness.stats import (bonferroni, empirical_laplace, ks_one_sample, ks_two_sample,
                                     mean_with_error, z_score)
from fragstoch.paths import Seed

SMALL = {"*": {"N": 150}, "bp-bijection": {"knots": 1025}}
SMALL_INI = """
[*]
N = 150

[bp-bijection]
knots = 1025

[run]
seed = 3
"""


# --------------------------------------------------------------------------
# statistics

def test_ks_one_sample_calibrated():
    rng = Seed(1).generator()
    p = np.array([ks_one_sample(rng.random(200), lambda x: x)[1] for _ in range(200)])
    assert 0.02 <= np.mean(p < 0.05) <= 0.09


def test_ks_two_sample_calibrated():
    rng = Seed(2).generator()
    p = np.array([ks_two_sample(rng.standard_normal(200), rng.standard_normal(300))[1] for _ in range(200)])
    assert 0.02 <= np.mean(p < 0.05) <= 0.09


def test_ks_matches_scipy_statistic():
    x = Seed(3).generator().standard_normal(500)
    assert ks_one_sample(x, stats.norm.cdf)[0] == pytest.approx(stats.kstest(x, "norm").statistic, abs=1e-14)
    y = Seed(4).generator().standard_normal(400)
    assert ks_two_sample(x, y)[0] == pytest.approx(stats.ks_2samp(x, y).statistic, abs=1e-14)


def test_ks_edge_cases():
    assert ks_one_sample(np.full(200, 0.3), lambda x: x)[0] >= 0.5
    x = Seed(5).generator().random(150)
    assert ks_two_sample(x, x[::-1])[0] == 0.0
    assert ks_two_sample(x, x + 2.0)[0] == 1.0
    with pytest.raises(ParameterError):
        ks_one_sample(np.arange(99.0), lambda v: v)
    with pytest.raises(ParameterError):
        ks_two_sample(np.arange(200.0), [np.nan] * 200)


def test_moment_helpers():
    assert empirical_laplace([1.0, 2.0], 0.0) == (1.0, 0.0)
    est, se = empirical_laplace(np.zeros(10), 3.0)
    assert est == 1.0 and se == 0.0
    with pytest.raises(ParameterError):
        empirical_laplace([1.0], -1.0)
    assert mean_with_error([1.0, 3.0]) == (2.0, 1.0)
    assert z_score(1.0, 0.0, 1.0) == 0.0 and z_score(1.0, 0.0, 2.0) == float("inf")
    assert z_score(3.0, 0.5, 2.0) == 2.0
    assert bonferroni(0.01, 10) == pytest.approx(1e-3)
    with pytest.raises(ParameterError):
        bonferroni(0.01, 0)


# --------------------------------------------------------------------------
# registry

def test_verdict_rules():
    assert verdict_of({"a": 0.5}, {"z": 1.0}, {"c": True}, 1e-3, 3.0) == "pass"
    assert verdict_of({"a": 1e-4}, {}, {}, 1e-3, 3.0) == "fail"
    assert verdict_of({}, {"z": -3.5}, {}, 1e-3, 3.0) == "fail"
    assert verdict_of({}, {}, {"c": False}, 1e-3, 3.0) == "fail"
    assert verdict_of({}, {}, {}, 1e-3, 3.0, error="boom") == "error"


def test_select_by_prefix_and_suite():
    reg = default_cases()
    assert [c.id for c in select(reg, "thm1")] == ["thm1-beta-half"]
    assert {c.id for c in select(reg, "prop")} == {"prop2-samplers", "prop3-zero-set", "prop6-haas"}
    assert {c.id for c in select(reg, "oblit, jeulin")} == {"obliteration", "jeulin-fixed-time"}
    assert len(select(reg, None)) == len(reg) == 12
    assert select(reg, "nothing") == []


def test_case_ids_and_streams_unique():
    reg = default_cases()
    assert len({c.id for c in reg}) == len(reg)
    assert len({c.stream() for c in reg}) == len(reg)
    assert all(c.significance == 1e-3 for c in reg)


def test_overrides():
    reg = apply_overrides(default_cases(), {"*": {"N": 7, "nonexistent": 1},
                                            "thm4": {"t": 0.05}, "bp-bijection": {"significance": 0.01}})
    by = {c.id: c for c in reg}
    assert by["thm1-beta-half"].N == 7
    assert "nonexistent" not in by["thm1-beta-half"].params
    assert "N" not in by["thm6-lil"].params
    assert by["thm4-frames"].params["t"] == 0.05
    assert by["bp-bijection"].significance == 0.01
    assert default_cases()[0].N == 10_000
    with pytest.raises(ParameterError):
        apply_overrides(default_cases(), {"*": {"significance": 0.5}})


def test_config_parsing():
    ov, run = parse_config(SMALL_INI + "\n[thm4]\nr = [0.5, 1.0]\nlabel = hello\n")
    assert ov["*"] == {"N": 150}
    assert ov["bp-bijection"] == {"knots": 1025}
    assert ov["thm4"] == {"r": [0.5, 1.0], "label": "hello"}
    assert run == {"seed": 3}
    with pytest.raises(ParameterError):
        parse_config("N = 3")


def test_registry_deterministic_and_parallel():
    a = run_registry("bp,lemma7", 11, 1, SMALL)
    b = run_registry("bp,lemma7", 11, 2, SMALL)
    da = rep.without_timing(rep.report_document(a, 11))
    db = rep.without_timing(rep.report_document(b, 11))
    assert rep.dumps(da) == rep.dumps(db)
    assert [r.case_id for r in a] == ["lemma7-moments", "bp-bijection"]
    assert all(r.verdict == "pass" for r in a)
    assert a[1].checks and a[1].suite_budget == pytest.approx(1e-3)
    c = run_registry("bp", 12, 1, SMALL)
    assert c[0].seed != a[1].seed


def test_errors_are_reported():
    def body(seed, p):
        raise ParameterError("bad parameter")

    def good(seed, p):
        return CaseOutcome(p_values={"x": 0.5})

    reg = [VerificationCase("boom", "x", "raises", body), VerificationCase("fine", "x", "passes", good)]
    out = run_registry(None, 0, 1, None, registry=reg)
    assert out[0].verdict == "error" and "bad parameter" in out[0].error
    assert out[1].verdict == "pass"
    assert exit_code(out) == 1
    assert exit_code(out[1:]) == 0
    soft = [VerificationCase("boom", "x", "raises", body, hard=False)]
    assert exit_code(run_registry(None, 0, 1, None, registry=soft)) == 0


# --------------------------------------------------------------------------
# reports

def fake_doc():
    reg = [VerificationCase("fine", "x", "passes", lambda s, p: CaseOutcome(
        p_values={"a": 0.5, "b": 0.2}, z_scores={"z": 0.4}, checks={"c": True},
        details={"curves": {"t": [0.5, 0.25], "median_running_min": [[1, 2, 3], [1, 2, 3]],
                            "subordinator_t": [0.5, 0.25], "subordinator_median": [1.0, 0.9]}}))]
    return rep.report_document(run_registry(None, 5, 1, None, registry=reg), 5)


def test_report_roundtrip(tmp_path):
    doc = fake_doc()
    path = tmp_path / "r.json"
    rep.write_report(doc, path)
    back = rep.read_report(path)
    assert back == json.loads(rep.dumps(doc))
    assert back["schema"] == "fragstoch.report/1"
    lines = list(rep.summary_lines(back))
    assert lines[0].startswith("PASS  fine")
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"schema": "other"}))
    with pytest.raises(ParameterError):
        rep.read_report(bad)


def test_plot_scripts(tmp_path):
    written = rep.write_plots(fake_doc(), tmp_path / "plots")
    names = sorted(p.split("/")[-1] for p in written)
    assert names == ["fine-lil.plot", "fine-pvalues.plot", "fine-zscores.plot"]
    text = (tmp_path / "plots" / "fine-pvalues.plot").read_text()
    assert text.startswith("# title: fine: p-values")
    assert "# series: threshold" in text and "# scale: logy" in text


def test_csv():
    text = rep.write_csv([(0, 0.5), (1, 0.25)], ("i", "x"))
    assert text == "i,x\n0,0.5\n1,0.25\n"


# --------------------------------------------------------------------------
# command line

def test_cli_simulate(capsys, tmp_path):
    assert main(["simulate", "excursion", "--n", "2", "--knots", "5", "--seed", "1"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "path,t,value" and len(out) == 11
    assert main(["simulate", "excursion", "--n", "2", "--knots", "5", "--seed", "1"]) == 0
    assert capsys.readouterr().out.splitlines() == out
    csv = tmp_path / "pd.csv"
    assert main(["simulate", "pd", "--n", "3", "--sticks", "50", "--keep", "4", "--out", str(csv)]) == 0
    assert len(csv.read_text().splitlines()) == 13
    for target in ("death-times", "conditioned-lamperti", "nu-minus", "occupation"):
        assert main(["simulate", target, "--n", "2", "--beta", "0.4"] if target == "nu-minus"
                    else ["simulate", target, "--n", "2"]) == 0
    capsys.readouterr()


def test_cli_errors(capsys):
    assert main(["simulate", "pd", "--beta", "1.5"]) == 2
    assert "beta" in capsys.readouterr().err
    assert main(["verify", "--filter", "nothing"]) == 2
    with pytest.raises(SystemExit):
        main(["simulate", "unknown-target"])


def test_cli_verify_and_report(capsys, tmp_path):
    ini = tmp_path / "small.ini"
    ini.write_text(SMALL_INI)
    out = tmp_path / "r.json"
    assert main(["verify", "--filter", "bp", "--config", str(ini), "--report", str(out)]) == 0
    line = capsys.readouterr().out.strip()
    assert line.startswith("PASS  bp-bijection")
    doc = rep.read_report(out)
    assert doc["master_seed"] == 3 and doc["filter"] == "bp"
    assert doc["cases"][0]["N"] == 150
    assert main(["report", "--in", str(out), "--plots", str(tmp_path / "p")]) == 0
    assert "PASS  bp-bijection" in capsys.readouterr().out
    assert main(["verify", "--list"]) == 0
    assert len(capsys.readouterr().out.splitlines()) == 12
