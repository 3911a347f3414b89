import csv
import json
import math

import pytest

from inflap.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_classify_outputs(tmp_path, capsys):
    code, out, _ = run(capsys, "classify", "--lambda", "4", "--s", "-5", "--out", str(tmp_path))
    assert code == 0 and out.splitlines()[0] == "TrivialOnly (Example 1 rule)"
    code, out, _ = run(capsys, "classify", "--lambda", "4", "--s", "-6", "--out", str(tmp_path))
    assert code == 0
    assert out.startswith("NontrivialExists") and "witness exponent 2" in out
    assert json.loads((tmp_path / "verdict.json").read_text())["witness"]["exponent"] == 2.0


def test_inconclusive_exit_code(tmp_path, capsys):
    code, out, _ = run(capsys, "classify", "--lambda", "4", "--s", "-7", "--mu-log", "-2", "--out", str(tmp_path))
    assert code == 1 and out.startswith("Inconclusive")


def test_malformed_flag_is_usage_error(capsys):
    with pytest.raises(SystemExit) as info:
        main(["classify", "--lambda", "4", "--bogus", "1"])
    assert info.value.code == 2
    assert "usage:" in capsys.readouterr().err


def test_missing_required_option(tmp_path, capsys):
    code, _, err = run(capsys, "classify", "--out", str(tmp_path))
    assert code == 2 and "--lambda" in err


def test_config_file_and_flag_override(tmp_path, capsys):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"classify": {"lambda": 4, "s": -6}}))
    code, out, _ = run(capsys, "classify", "--config", str(cfg), "--out", str(tmp_path))
    assert code == 0 and out.startswith("NontrivialExists")
    code, out, _ = run(capsys, "classify", "--config", str(cfg), "--s", "-5", "--out", str(tmp_path))
    assert out.startswith("TrivialOnly")


def test_bad_config_is_usage_error(tmp_path, capsys):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"lambda": 4, "colour": "red"}))
    code, _, err = run(capsys, "classify", "--config", str(cfg))
    assert code == 2 and "colour" in err
    cfg.write_text("{not json")
    assert run(capsys, "classify", "--config", str(cfg))[0] == 2


def test_env_var_output_dir(tmp_path, capsys, monkeypatch):
    target = tmp_path / "from_env" / "nested"
    monkeypatch.setenv("INFLAP_OUT", str(target))
    assert run(capsys, "classify", "--lambda", "2")[0] == 0
    assert (target / "verdict.json").exists()


def test_verify_example(tmp_path, capsys):
    code, out, _ = run(capsys, "verify-example", "--example", "1", "--lambda", "4", "--s", "-6", "--c0", "1", "--out", str(tmp_path))
    assert code == 0 and "pass" in out and "max ratio 0.12" in out
    rows = list(csv.reader((tmp_path / "example1_check.csv").open()))
    assert rows[0][0] == "r" and len(rows) == 10_001
    code, out, _ = run(capsys, "verify-example", "--example", "1", "--lambda", "4", "--s", "-6", "--c0", "9", "--out", str(tmp_path))
    assert code == 1 and "FAIL" in out


def test_lemmas_row_count(tmp_path, capsys):
    code, out, _ = run(capsys, "lemmas", "--battery", "100", "--seed", "7", "--out", str(tmp_path))
    assert code == 0
    rows = list(csv.reader((tmp_path / "lemmas.csv").open()))
    assert len(rows) == 401 and out.strip().endswith("pass")


def test_minorant_command(tmp_path, capsys):
    code, out, _ = run(capsys, "minorant", "--H", "t^4", "--mu", "1.4142", "--tmax", "1e6", "--out", str(tmp_path))
    assert code == 0 and out.startswith("4/4 properties pass")
    assert (tmp_path / "minorant.csv").read_text().startswith("t,h,H\n")


def test_minorant_bad_expression(tmp_path, capsys):
    assert run(capsys, "minorant", "--H", "t^", "--out", str(tmp_path))[0] == 2


def test_certify_lambda_two_has_no_certificate(tmp_path, capsys):
    out_dir = tmp_path / "created" / "here"
    code, out, _ = run(capsys, "certify", "--lambda", "2", "--epsilon", "1", "--t-max", "1e14", "--out", str(out_dir))
    assert code == 1 and out.startswith("no certificate at desk scale")
    assert (out_dir / "trajectory.csv").exists() and not (out_dir / "certificate.json").exists()


def test_certify_small_epsilon_example(tmp_path, capsys):
    code, out, _ = run(capsys, "certify", "--lambda", "4", "--s", "-5", "--epsilon", "1e-3", "--out", str(tmp_path))
    assert code == 0, out
    bracket = json.loads((tmp_path / "certificate.json").read_text())["R_max_bracket"]
    assert all(math.isfinite(x) for x in bracket)
