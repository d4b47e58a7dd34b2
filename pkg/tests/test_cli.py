import csv
import io
import json
import math
import subprocess
import sys

import pytest

from wormkern.cli import main

Z = "0.3,0.2,1.1,0"
W = "-0.5,0.1,0.9,0.2"


def run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr().out


def csv_rows(text):
    head, body = text.split("\n", 1)
    assert head.startswith("# ")
    meta = json.loads(head[2:])
    return meta, list(csv.DictReader(io.StringIO(body, newline="")))


def test_eval_routes_agree(capsys):
    code, out = run(capsys, "eval", "--z", Z, f"--w={W}")
    assert code == 0
    meta, rows = csv_rows(out)
    assert meta["report"] == "eval" and [r["route"] for r in rows] == ["brute", "split", "expansion"]
    ks = [complex(float(r["K_re"]), float(r["K_im"])) for r in rows]
    assert max(abs(k - ks[0]) for k in ks) / abs(ks[0]) < 1e-4
    assert {"K1_re", "K8_im", "E_re", "phi1_re", "chi1"} <= set(rows[2])


def test_eval_json(capsys):
    code, out = run(capsys, "eval", "--z", Z, f"--w={W}", "--route", "brute", "--format", "json")
    assert code == 0
    doc = json.loads(out)
    assert doc["report"] == "eval" and len(doc["rows"]) == 1
    assert doc["config"]["params"]["nu_beta"] == pytest.approx(0.5)


def test_eval_domain_violation(capsys):
    code, out = run(capsys, "eval", "--z", "0,0,10,0")
    assert code == 3
    assert json.loads(out)["error"] == "DomainViolation"


def test_bad_beta_is_config_error(capsys):
    code, out = run(capsys, "eval", "--beta", "3.0")
    assert code == 2
    assert json.loads(out)["exit_code"] == 2


def test_unknown_route_and_suite(capsys):
    assert run(capsys, "eval", "--route", "fast")[0] == 2
    assert run(capsys, "validate", "--only", "nope")[0] == 2


def test_argparse_error_exit_code(capsys):
    assert main(["sweep", "--which", "nope"]) == 2
    assert main([]) == 2


def test_empty_sweep_is_config_error(capsys):
    code, out = run(capsys, "sweep", "--which", "l31ii", "--values", "")
    assert code == 2 and "empty" in json.loads(out)["message"]


def test_sweep_l31ii(capsys):
    code, out = run(capsys, "sweep", "--which", "l31ii", "--format", "json")
    assert code == 0
    doc = json.loads(out)
    assert doc["fit"]["slope"] == pytest.approx(-1.0, abs=0.05)
    assert doc["fit"]["expected_slope"] == -1.0


def test_sweep_decay(capsys):
    code, out = run(capsys, "sweep", "--which", "decay", "--sign", "-1")
    meta, rows = csv_rows(out)
    assert code == 0 and float(rows[0]["fitted_slope"]) == pytest.approx(-0.5, rel=0.02)


def test_validate_single_suite(capsys):
    code, out = run(capsys, "validate", "--only", "decomposition", "--format", "json")
    assert code == 0
    doc = json.loads(out)
    assert doc["passed"] and [s["suite"] for s in doc["suites"]] == ["decomposition"]


def test_deterministic_output(capsys):
    argv = ["validate", "--only", "series"]
    a = run(capsys, *argv)[1]
    b = run(capsys, *argv)[1]
    assert a == b
    argv = ["eval", "--z", Z, f"--w={W}"]
    assert run(capsys, *argv)[1] == run(capsys, *argv)[1]


def test_config_file_with_override(tmp_path, capsys):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"beta": 2 * math.pi, "route": "split", "format": "json"}))
    doc = json.loads(run(capsys, "eval", "--config", str(cfg), "--route", "brute")[1])
    assert doc["config"]["beta"] == pytest.approx(2 * math.pi)
    assert doc["config"]["route"] == "brute"
    cfg.write_text(json.dumps({"colour": "blue"}))
    assert run(capsys, "eval", "--config", str(cfg))[0] == 2


def test_csv_round_trips_doubles(tmp_path, capsys):
    out = tmp_path / "k.csv"
    assert run(capsys, "eval", "--z", Z, f"--w={W}", "--route", "brute", "--out", str(out))[0] == 0
    text = out.read_bytes().decode()
    assert "\r\n" in text
    _, rows = csv_rows(text)
    doc = json.loads(run(capsys, "eval", "--z", Z, f"--w={W}", "--route", "brute", "--format", "json")[1])
    assert float(rows[0]["K_re"]) == doc["rows"][0]["K_re"]


def test_threads_env(monkeypatch, capsys):
    monkeypatch.setenv("WORMKERN_THREADS", "2")
    doc = json.loads(run(capsys, "eval", "--z", Z, f"--w={W}", "--format", "json")[1])
    assert doc["config"]["threads"] == 2 and len(doc["rows"]) == 3
    monkeypatch.setenv("WORMKERN_THREADS", "many")
    assert run(capsys, "eval")[0] == 2


def test_console_script():
    r = subprocess.run([sys.executable, "-m", "wormkern.cli", "eval", "--route", "split", "--format", "json"],
                       capture_output=True, text=True, check=False)
    assert r.returncode == 0 and json.loads(r.stdout)["rows"][0]["route"] == "split"


def test_validate_default_suites_pass(capsys):
    code, out = run(capsys, "validate", "--format", "json")
    doc = json.loads(out)
    assert code == 0 and doc["passed"]
    assert sorted(s["suite"] for s in doc["suites"]) == sorted(
        ["decomposition", "series", "kernel-routes", "lp", "scaling"])


def test_sweep_decay_from_5_to_50(capsys):
    doc = json.loads(run(capsys, "sweep", "--which", "decay", "--values", "5,50", "--format", "json")[1])
    assert doc["fit"]["slope"] == pytest.approx(-0.5, rel=0.02)


def test_eval_diagonal_default_point(capsys):
    code, out = run(capsys, "eval", "--format", "json")
    rows = json.loads(out)["rows"]
    ks = [complex(r["K_re"], r["K_im"]) for r in rows]
    assert code == 0 and len(rows) == 3
    assert all(abs(k.imag) < 1e-9 * abs(k) for k in ks)      # K(z, z) is real and positive
    assert ks[0].real > 0 and max(abs(k - ks[0]) for k in ks) < 1e-4 * abs(ks[0])
