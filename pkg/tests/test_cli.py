import json
import math

import pytest

from hazard_odds.cli import main

TINY = "time,event,arm\n1,1,1\n2,1,0\n3,1,1\n4,1,0\n"


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def tiny_csv(tmp_path):
    path = tmp_path / "tiny.csv"
    path.write_text(TINY)
    return str(path)


def test_convert_hr(capsys):
    code, out, _ = run(capsys, "convert", "--hr", "2")
    assert code == 0
    d = json.loads(out)
    assert d["hr"] == 2.0 and d["odds"] == "2:1" and d["percent_before"] == "67%"
    assert d["p_before"] == pytest.approx(2 / 3, abs=1e-15)
    assert d["p_after"] == pytest.approx(1 / 3, abs=1e-15)


def test_convert_prob(capsys):
    code, out, _ = run(capsys, "convert", "--prob", "0.75")
    assert code == 0
    d = json.loads(out)
    assert d["hr"] == pytest.approx(3.0, rel=1e-12) and d["odds"] == "3:1"


def test_convert_text(capsys):
    code, out, _ = run(capsys, "convert", "--hr", "3", "--format", "text")
    assert code == 0 and "75%" in out


@pytest.mark.parametrize(
    "argv",
    [
        ["convert", "--hr", "0"],
        ["convert", "--hr", "-1"],
        ["convert", "--prob", "1.0"],
        ["convert"],
        ["convert", "--hr", "2", "--prob", "0.5"],
        ["convert", "--hr", "abc"],
        ["nonsense"],
        [],
    ],
)
def test_usage_errors_exit_2(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2 and err


def test_explain(capsys):
    code, out, _ = run(capsys, "explain", "--hr", "2", "--event", "heal")
    assert code == 0
    assert out == (
        "The odds are roughly 2:1 (the probability is 67%) that you will heal before someone in the comparison group.\n"
    )


def test_simulate_to_stdout_is_deterministic(capsys):
    argv = ["simulate", "--n-control", "5", "--n-treatment", "5", "--lambda", "2", "--seed", "1", "--out", "-"]
    code, first, _ = run(capsys, *argv)
    assert code == 0
    _, second, _ = run(capsys, *argv)
    assert first == second
    lines = first.splitlines()
    assert lines[0] == "time,event,arm" and len(lines) == 11
    assert all(line.split(",")[1] == "1" for line in lines[1:])


def test_simulate_to_file_reports_seed(capsys, tmp_path):
    path = tmp_path / "sim.csv"
    code, out, _ = run(
        capsys, "simulate", "--n-control", "20", "--n-treatment", "30", "--lambda", "1.5",
        "--baseline", "weibull(shape=2,scale=1)", "--censor", "exp(rate=0.3)", "--seed", "77", "--out", str(path),
    )
    assert code == 0
    d = json.loads(out)
    assert d["seed"] == 77 and d["n"] == 50 and d["baseline"] == "weibull(shape=2,scale=1)"
    assert len(path.read_text().splitlines()) == 51


def test_simulate_bad_spec_reports_position(capsys):
    code, _, err = run(
        capsys, "simulate", "--n-control", "5", "--n-treatment", "5", "--lambda", "2",
        "--baseline", "weibull(shape=0.5,scale=2", "--seed", "1", "--out", "-",
    )
    assert code == 2 and "position 25" in err


def test_fit_tiny(capsys, tiny_csv):
    code, out, _ = run(capsys, "fit", "--in", tiny_csv)
    assert code == 0
    d = json.loads(out)
    assert d["beta_hat"] == pytest.approx(math.log((1 + math.sqrt(17)) / 2), abs=1e-6)
    assert d["hr"] == pytest.approx(2.5616, abs=1e-4)
    assert d["loglik0"] == pytest.approx(-math.log(24), abs=1e-12)
    assert d["converged"] is True and d["ties"] == "breslow"
    assert d["ci_low"] < d["hr"] < d["ci_high"]


def test_fit_efron_equals_breslow_without_ties(capsys, tiny_csv):
    _, a, _ = run(capsys, "fit", "--in", tiny_csv, "--ties", "breslow")
    _, b, _ = run(capsys, "fit", "--in", tiny_csv, "--ties", "efron")
    assert json.loads(a)["beta_hat"] == pytest.approx(json.loads(b)["beta_hat"], abs=1e-12)


def test_fit_constant_arm_is_model_error(capsys, tmp_path):
    path = tmp_path / "one_arm.csv"
    path.write_text("time,event,arm\n1,1,0\n2,1,0\n3,0,0\n")
    code, _, err = run(capsys, "fit", "--in", str(path))
    assert code == 3 and err


def test_fit_separation_is_model_error(capsys, tmp_path):
    path = tmp_path / "sep.csv"
    path.write_text("time,event,arm\n1,1,1\n2,1,1\n3,1,0\n4,1,0\n")
    code, _, _ = run(capsys, "fit", "--in", str(path))
    assert code == 3


@pytest.mark.parametrize("text", ["time,event\n1,1\n", "time,event,arm\n1,5,0\n", "time,event,arm\n-2,1,0\n"])
def test_bad_csv_exit_2(capsys, tmp_path, text):
    path = tmp_path / "bad.csv"
    path.write_text(text)
    code, _, err = run(capsys, "fit", "--in", str(path))
    assert code == 2 and err


def test_missing_file_exit_2(capsys, tmp_path):
    code, _, _ = run(capsys, "fit", "--in", str(tmp_path / "absent.csv"))
    assert code == 2


def test_km(capsys, tiny_csv):
    code, out, _ = run(capsys, "km", "--in", tiny_csv, "--arm", "1")
    assert code == 0
    d = json.loads(out)
    assert list(d) == ["1"]
    assert d["1"]["values"] == [0.5, 0.0]


def test_concordance_between_group(capsys, tiny_csv):
    code, out, _ = run(capsys, "concordance", "--in", tiny_csv)
    assert code == 0
    d = json.loads(out)
    assert d["statistic"] == "between_group" and d["comparable"] == 4 and d["concordant"] == 3


def test_concordance_score_column(capsys, tmp_path):
    path = tmp_path / "scored.csv"
    path.write_text("time,event,arm,score\n1,1,0,4\n2,1,0,3\n3,1,1,2\n4,1,1,1\n")
    code, out, _ = run(capsys, "concordance", "--in", str(path), "--score-column", "score")
    assert code == 0
    d = json.loads(out)
    assert d["statistic"] == "harrell" and d["c"] == 1.0


def test_verify_passes(capsys):
    code, out, _ = run(capsys, "verify", "--lambdas", "1", "--pairs", "1000", "--seed", "0")
    assert code == 0 and out.strip().endswith("5/5 cells passed")


def test_verify_json(capsys):
    code, out, _ = run(
        capsys, "verify", "--baselines", "exp(rate=1)", "--lambdas", "2", "3", "--pairs", "2000", "--seed", "9",
        "--format", "json",
    )
    assert code == 0
    d = json.loads(out)
    assert len(d) == 2 and all(r["pass"] and r["seed"] == 9 for r in d)


def test_verify_break_ph_exits_1(capsys):
    code, _, _ = run(
        capsys, "verify", "--baselines", "exp(rate=1)", "--lambdas", "2", "--pairs", "100000", "--seed", "0",
        "--break-ph",
    )
    assert code == 1


def test_verify_bad_baseline_exit_2(capsys):
    code, _, err = run(capsys, "verify", "--baselines", "lognormal(mu=1)", "--seed", "0")
    assert code == 2 and "position 0" in err


def test_verify_requires_seed(capsys):
    code, _, _ = run(capsys, "verify", "--lambdas", "1")
    assert code == 2
